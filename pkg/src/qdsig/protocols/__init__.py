from .common import ABORT, DocSigPair, Outcome, Verdict, ceil_log2, synth_document
from .p1 import P1Keys, p1_distribute, p1_run, p1_sign, p1_verify
from .p2 import P2Keys, p2_run
from .p3 import (
    LevelResult,
    P3State,
    p3_majority_vote,
    p3_run,
    p3_thresholds,
    p3_verify,
    p3_verify_level,
)

__all__ = [
    "ABORT",
    "DocSigPair",
    "LevelResult",
    "Outcome",
    "P1Keys",
    "P2Keys",
    "P3State",
    "Verdict",
    "ceil_log2",
    "p1_distribute",
    "p1_run",
    "p1_sign",
    "p1_verify",
    "p2_run",
    "p3_majority_vote",
    "p3_run",
    "p3_thresholds",
    "p3_verify",
    "p3_verify_level",
    "synth_document",
]
