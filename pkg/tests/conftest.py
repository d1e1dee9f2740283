import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qdcavity.errors import ExceptionalPoint
from qdcavity.model import ModelParams, rabi_poles

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# reference best-fit rate sets (ueV)
TABLE_M1 = dict(g=11.05, kappa=19.48, gamma_g=2.28)
TABLE_M2 = dict(g=11.13, kappa=19.84, gamma_g=1.38)
TABLE_M2_BIG = 1.26


@st.composite
def rate_sets(draw, broadening=False):
    """(ModelParams, delta) kept away from the exceptional point."""
    p = ModelParams(
        g=draw(st.floats(0.5, 30.0)),
        kappa=draw(st.floats(1.0, 40.0)),
        gamma_g=draw(st.floats(0.2, 10.0)),
        gamma_pd=draw(st.floats(0.1, 3.0)) if broadening else 0.0,
    )
    delta = draw(st.floats(-30.0, 30.0))
    try:
        rabi_poles(p, delta)
        rabi_poles(p.replace(gamma_g=p.gamma_g + p.gamma_pd + 3.0), delta)
    except ExceptionalPoint:
        from hypothesis import assume
        assume(False)
    # stay clear of the near-degenerate region where residues blow up
    from hypothesis import assume
    wp, wm = rabi_poles(p, delta)
    assume(abs(wp.z - wm.z) > 1e-3 * (p.g + p.kappa))
    return p, delta


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
