"""K- and E-functionals for sequence couples (l^p, l^q), majorization
checks, decomposition operators and constructive counterexamples."""

from .seqcore import (
    CertifiedValue,
    CoupleParams,
    PowerTail,
    Seq,
    Status,
    StretchedSeq,
    Verdict,
    ZeroTail,
)

__all__ = [
    "CertifiedValue",
    "CoupleParams",
    "PowerTail",
    "Seq",
    "Status",
    "StretchedSeq",
    "Verdict",
    "ZeroTail",
]
__version__ = "0.1.0"
