"""Oracle-level simulation of quantum PWM matching with exact query accounting."""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    DegenerateInputError,
    FormatMismatchError,
    ParseError,
    PreconditionError,
    QpwmError,
    RangeError,
    ResourceError,
)
from .fixed_point import DEFAULT_FORMAT, FixedPointFormat, FxValue, fx
from .pwm_core import (
    DNA,
    Alphabet,
    IndexPair,
    MatchSet,
    Pwm,
    PwmSet,
    Sequence,
    classical_match,
    rescale,
    score_segment,
    score_table,
)
from .thresholds import BackgroundModel, SoftHardThresholds
from .matchers import MatchReport, ProblemInstance, run_naive_iteration, run_qmci_method

__all__ = [
    "CapacityError", "DegenerateInputError", "FormatMismatchError", "ParseError",
    "PreconditionError", "QpwmError", "RangeError", "ResourceError",
    "DEFAULT_FORMAT", "FixedPointFormat", "FxValue", "fx",
    "DNA", "Alphabet", "IndexPair", "MatchSet", "Pwm", "PwmSet", "Sequence",
    "classical_match", "rescale", "score_segment", "score_table",
    "BackgroundModel", "SoftHardThresholds",
    "MatchReport", "ProblemInstance", "run_naive_iteration", "run_qmci_method",
]
