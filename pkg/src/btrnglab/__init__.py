"""Desk-scale model of a Bluetooth chip's random number subsystem.

The package simulates the five firmware generator variants found in
the field (hardware-backed, checksum fallback, and hash-counter
designs), the register environment they sample, the pairing and key
exchange flows built on top, and the measurement and attack tooling
that makes the fallback designs' weakness concrete.

Layout:

- ``crypto``    checksum algebra the fallback generator inherits
- ``chipenv``   clocks and radio registers a generator samples
- ``firmware``  the five generator variants and the RAM dump patch
- ``protocol``  devices, pairing, encryption setup, key exchange
- ``attacks``   guess spaces, output prediction, the two live attacks
- ``analysis``  collection, randomness battery, entropy estimates
- ``backend``   compiled/pure kernel selection for the hot loops
- ``cli``       the ``btrnglab`` command line
"""

from .backend import BACKEND, available_backends, get_kernel
from .chipenv import (
    NONCLOCK_REGISTERS,
    ChipEnvironment,
    RegisterDistribution,
    ValueTable,
    default_distribution,
    load_distribution,
    parse_distribution,
)
from .crypto import (
    CRC_IV,
    affine_constant,
    check_value_g,
    commit_f1,
    crc32_update,
    derive_seed,
    linear_part,
    pack_words,
    unpack_words,
    word_linear_part,
)
from .errors import (
    AddressRangeError,
    AmbiguityError,
    ConfigurationError,
    CorruptionError,
    DistributionFormatError,
    FramingError,
    InsufficientDataError,
    LabError,
    ProtocolLimitError,
    ValidationError,
    WidthError,
)
from .firmware import (
    EVENT_CACHE,
    EVENT_HRNG,
    EVENT_PRNG,
    READ_RAM_LIMIT,
    HashCounterRng,
    RbgCore,
    core_from_config,
)
from .protocol import (
    ChannelTap,
    Device,
    LinkKeyExchange,
    LlEncRsp,
    e21,
    kdf_link_key,
    make_key_checker,
    run_combination_key_exchange,
    run_numeric_comparison,
    session_encrypt,
    start_encryption_exchange,
)
from .attacks import (
    BruteForceResult,
    CandidateSet,
    GuessSpace,
    LinkKeyRecovery,
    MitmOutcome,
    NaPrimeResult,
    PredictionInputs,
    StopFlag,
    advance_chain,
    brute_force_nb,
    clock_reset_attack,
    find_na_prime,
    predict_candidates,
    predict_first_use_candidates,
    recover_link_keys,
    recover_outputs_from_enc_rsp,
    register_difference_candidates,
    run_mitm_numeric_comparison,
    timer_difference_candidates,
)
from .analysis import (
    BatteryReport,
    EntropyReport,
    SampleStream,
    collect_chunks,
    entropy_report,
    export_raw,
    fips_battery,
    hrng_stream,
    ingest_chunks,
    joint_difference_entropy,
    register_difference_entropies,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "available_backends",
    "get_kernel",
    "NONCLOCK_REGISTERS",
    "ChipEnvironment",
    "RegisterDistribution",
    "ValueTable",
    "default_distribution",
    "load_distribution",
    "parse_distribution",
    "CRC_IV",
    "affine_constant",
    "check_value_g",
    "commit_f1",
    "crc32_update",
    "derive_seed",
    "linear_part",
    "pack_words",
    "unpack_words",
    "word_linear_part",
    "AddressRangeError",
    "AmbiguityError",
    "ConfigurationError",
    "CorruptionError",
    "DistributionFormatError",
    "FramingError",
    "InsufficientDataError",
    "LabError",
    "ProtocolLimitError",
    "ValidationError",
    "WidthError",
    "EVENT_CACHE",
    "EVENT_HRNG",
    "EVENT_PRNG",
    "READ_RAM_LIMIT",
    "HashCounterRng",
    "RbgCore",
    "core_from_config",
    "ChannelTap",
    "Device",
    "LinkKeyExchange",
    "LlEncRsp",
    "e21",
    "kdf_link_key",
    "make_key_checker",
    "run_combination_key_exchange",
    "run_numeric_comparison",
    "session_encrypt",
    "start_encryption_exchange",
    "BruteForceResult",
    "CandidateSet",
    "GuessSpace",
    "LinkKeyRecovery",
    "MitmOutcome",
    "NaPrimeResult",
    "PredictionInputs",
    "StopFlag",
    "advance_chain",
    "brute_force_nb",
    "clock_reset_attack",
    "find_na_prime",
    "predict_candidates",
    "predict_first_use_candidates",
    "recover_link_keys",
    "recover_outputs_from_enc_rsp",
    "register_difference_candidates",
    "run_mitm_numeric_comparison",
    "timer_difference_candidates",
    "BatteryReport",
    "EntropyReport",
    "SampleStream",
    "collect_chunks",
    "entropy_report",
    "export_raw",
    "fips_battery",
    "hrng_stream",
    "ingest_chunks",
    "joint_difference_entropy",
    "register_difference_entropies",
    "__version__",
]
