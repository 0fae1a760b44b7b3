"""revid: joint identification of where a text was revised (sentence
alignment between two drafts) and why (argumentative revision type).

Both decisions are carried by one label sequence (an EditSequence) that a
linear-chain CRF labels; candidate alignments are mutated until the most
likely joint labeling is found.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .corpus import (
    ClassScheme,
    DraftPair,
    ParagraphPair,
    Revision,
    RevisionOp,
    RevisionType,
    Sentence,
    apply_scheme,
    load_annotations,
    load_corpus,
    save_annotations,
    save_corpus,
)
from .editseq import EditOp, EditSequence, EditStep, count_sequences, decode, encode
from .errors import RevidError

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "ClassScheme",
    "DraftPair",
    "EditOp",
    "EditSequence",
    "EditStep",
    "ParagraphPair",
    "Revision",
    "RevisionOp",
    "RevisionType",
    "RevidError",
    "Sentence",
    "apply_scheme",
    "count_sequences",
    "decode",
    "encode",
    "load_annotations",
    "load_corpus",
    "save_annotations",
    "save_corpus",
    "__version__",
]
