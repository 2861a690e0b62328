import math

from docs_src.usage.tutorial001 import constants


def test_constants():
    assert math.isclose(constants["mu"], 2.0, rel_tol=1e-12)
    assert constants["sigma_sq"] > 0.0
    assert math.isclose(constants["radius"], math.sqrt(2 / math.pi), rel_tol=1e-12)
