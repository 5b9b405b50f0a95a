"""watermod: zero-bit and multi-bit token-stream watermarking.

The vocabulary is sorted by model probability each step and partitioned by
rank residue mod k; one residue class gets a small logit bonus.  For k = 2 an
entropy-adaptive keyed gate picks the green parity (zero-bit presence
signal); for k > 2 the class encodes one base-k payload digit per step
(multi-bit).  Detection replays the construction from recomputed logits and
tests hit counts against the binomial null.
"""

from . import kernels
from .core import (
    RankPermutation,
    ResidueClass,
    WatermarkKey,
    hash_to_uniform,
    prf_seed,
    rank_sort,
    residue_partition,
    softmax,
    splitmix64,
)
from .entropy import EntropyKind, GateConfig, p_odd, shannon_entropy, spike_entropy
from .errors import (
    ConfigError,
    InsufficientDataError,
    InvalidInputError,
    RecoveryIncompleteError,
    WatermodError,
)
from .model import Generator, ToyModel, ToyModelConfig, unwatermarked_generate
from .multibit import (
    MultiBitConfig,
    MultiBitReport,
    Payload,
    TallyTable,
    digit_length,
    multibit_generate,
    multibit_recover,
    multibit_step,
    payload_decode,
    payload_encode,
)
from .stats import (
    NullSummary,
    RocResult,
    ScoreSample,
    auroc,
    make_reference_corpus,
    null_calibration,
    robustness_sweep,
    substitution_attack,
    watermark_separation,
)
from .zerobit import (
    ZeroBitConfig,
    ZeroBitReport,
    zerobit_detect,
    zerobit_generate,
    zerobit_step,
    zscore_parity,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EntropyKind",
    "GateConfig",
    "Generator",
    "InsufficientDataError",
    "InvalidInputError",
    "MultiBitConfig",
    "MultiBitReport",
    "NullSummary",
    "Payload",
    "RankPermutation",
    "RecoveryIncompleteError",
    "ResidueClass",
    "RocResult",
    "ScoreSample",
    "TallyTable",
    "ToyModel",
    "ToyModelConfig",
    "WatermarkKey",
    "WatermodError",
    "ZeroBitConfig",
    "ZeroBitReport",
    "auroc",
    "digit_length",
    "hash_to_uniform",
    "kernels",
    "make_reference_corpus",
    "multibit_generate",
    "multibit_recover",
    "multibit_step",
    "null_calibration",
    "p_odd",
    "payload_decode",
    "payload_encode",
    "prf_seed",
    "rank_sort",
    "residue_partition",
    "robustness_sweep",
    "shannon_entropy",
    "softmax",
    "spike_entropy",
    "splitmix64",
    "substitution_attack",
    "unwatermarked_generate",
    "watermark_separation",
    "zerobit_detect",
    "zerobit_generate",
    "zerobit_step",
    "zscore_parity",
]
