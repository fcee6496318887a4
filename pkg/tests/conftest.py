import numpy as np
import pytest

from qpwm.io import parse_pwm_text
from qpwm.pwm_core import Alphabet, Pwm, PwmSet, Sequence, mark_rescaled

REFERENCE_PWM = """\
#alphabet ACGT
A -1.31 -0.62 -1.31 +0.63 -1.31 -1.31 -1.31 +0.48
C -0.83 -0.83 +1.12 -0.83 +1.12 +1.12 +1.37 -0.83
G -0.83 +1.25 +0.27 +0.27 -0.83 +0.27 -0.83 +0.56
T +0.89 -1.31 -1.31 -1.31 -0.21 -1.31 -1.31 -1.31
"""

AC = Alphabet(("A", "C"))


@pytest.fixture
def ref_pwm():
    return parse_pwm_text(REFERENCE_PWM, name="reference")


@pytest.fixture
def ref_set(ref_pwm):
    return PwmSet([ref_pwm])


@pytest.fixture
def toy_ac():
    """K=1, m=2 over {A,C}; 'AC' scores 2, 'CA' scores 0; ACAC has P_sol = {(0,0),(0,2)} at w=2."""
    pwm = Pwm.from_rows(AC, [[1, 0], [0, 1]], name="toy")
    return mark_rescaled(PwmSet([pwm])), Sequence.from_string("ACAC", AC)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)
