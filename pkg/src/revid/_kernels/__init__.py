"""Kernel backend selection: compiled extension when available, numpy otherwise.

Set REVID_PURE=1 to force the fallback (used by the benchmark and parity
tests).  ``BACKEND`` names the active implementation.
"""

import os

from . import pure

if os.environ.get("REVID_PURE"):
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _speedups as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

log_forward = _impl.log_forward
log_backward = _impl.log_backward
viterbi = _impl.viterbi
transition_expectations = _impl.transition_expectations
levenshtein_ids = _impl.levenshtein_ids

__all__ = [
    "BACKEND",
    "log_forward",
    "log_backward",
    "viterbi",
    "transition_expectations",
    "levenshtein_ids",
    "pure",
]
