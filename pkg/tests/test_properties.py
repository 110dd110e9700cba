from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formalpowers.core.geometry import PathSpec
from formalpowers.core.profile import RadialProfile, eval_profile
from formalpowers.core.quadrature import panel_rule
from formalpowers.errors import PathError
from formalpowers.transverse import build_formal_powers, transverse_sequence

finite = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(c=st.floats(0.1, 10), alpha=finite, r=st.floats(0.01, 50))
def test_profiles_positive(c, alpha, r):
    for p in (RadialProfile.power(c, alpha), RadialProfile.exponential(c, alpha / 10), RadialProfile.reciprocal(c)):
        assert eval_profile(p, r) > 0


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 24), coeffs=st.lists(finite, min_size=1, max_size=48))
def test_gauss_legendre_exactness(k, coeffs):
    coeffs = coeffs[: 2 * k]
    rule = panel_rule("gauss-legendre", k)
    poly = np.polynomial.Polynomial(coeffs)
    exact = poly.integ()(1.0) - poly.integ()(-1.0)
    np.testing.assert_allclose(rule.weights @ poly(rule.nodes), exact, atol=1e-12 * (1 + np.abs(coeffs).sum()))


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0.0, 1.0), ax=finite, ay=finite, bx=finite, by=finite)
def test_paths_through_origin_rejected(t, ax, ay, bx, by):
    a, b = complex(ax, ay), complex(bx, by)
    if abs(a - b) < 1e-3:
        return
    # a segment that is forced through the origin
    start = -t * (b - a)
    end = (1 - t) * (b - a)
    if start == 0 or end == 0:
        return
    with pytest.raises(PathError):
        PathSpec(start, (end,))


SEQ = transverse_sequence(RadialProfile.exponential(1.0, 1.0, (0.05, 20.0)))
TARGETS = np.array([2.3 + 0.4j, 1.7 - 0.3j])
TABLE = build_formal_powers(SEQ, 2.0, 3, TARGETS)


@settings(max_examples=40, deadline=None)
@given(ar=finite, ai=finite, br=finite, bi=finite, lam=finite)
def test_real_linearity(ar, ai, br, bi, lam):
    a, b = complex(ar, ai), complex(br, bi)
    for n in range(4):
        lhs = TABLE.power(n, a + lam * b)
        rhs = TABLE.power(n, a) + lam * TABLE.power(n, b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(lam * b)))
