"""Simulator and experiment harness for a randomized last-level cache
with two-skew cipher indexing, global evictions, and bug-compat modes."""

from .bnb import BnbConfig, SpillResult, bnb_run, bnb_sweep, sweep_medians
from .cache import (CacheConfig, CapacityError, InstallOutcome, MirageCache,
                    OutcomeKind, RunLog)
from .ciphers import (BlockCipherKind, CipherKey, IndexDerivation,
                      derive_set_index, derive_set_indices, make_cipher)

__version__ = "0.1.0"

__all__ = [
    "BnbConfig", "SpillResult", "bnb_run", "bnb_sweep", "sweep_medians",
    "CacheConfig", "CapacityError", "InstallOutcome", "MirageCache",
    "OutcomeKind", "RunLog",
    "BlockCipherKind", "CipherKey", "IndexDerivation", "derive_set_index",
    "derive_set_indices", "make_cipher",
    "__version__",
]
