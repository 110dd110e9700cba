from __future__ import annotations

import numpy as np
import pytest

from formalpowers.core.profile import RadialProfile
from formalpowers.errors import DomainError
from formalpowers.meridional import (
    MeridionalPower,
    build_x_sequence,
    default_grid,
    eval_meridional_power,
    field_from_meridional,
    leading_term,
    meridional_powers,
)
from formalpowers.verify import meridional_residual

UNIT = RadialProfile.constant(1.0, (0.1, 10.0))
RECIP = RadialProfile.reciprocal(1.0, (0.1, 10.0))


def test_unit_permittivity_closed_forms():
    # p = x: X^(1) = ln x, Xt^(1) = (x^2-1)/2, X^(2) = x^2 ln x - (x^2-1)/2, Xt^(2) = (x^2-1)/2 - ln x
    xs = build_x_sequence(UNIT, 1.0, np.linspace(1.0, 3.0, 5), 2)
    x = np.array([1.3, 2.0, 2.71])
    np.testing.assert_allclose(xs.values(1, x), np.log(x), atol=1e-14)
    np.testing.assert_allclose(xs.values(1, x, tilde=True), (x ** 2 - 1) / 2, atol=1e-14)
    np.testing.assert_allclose(xs.values(2, x), x ** 2 * np.log(x) - (x ** 2 - 1) / 2, atol=1e-13)
    np.testing.assert_allclose(xs.values(2, x, tilde=True), (x ** 2 - 1) / 2 - np.log(x), atol=1e-13)


def test_grid_columns_agree_with_values():
    xs = build_x_sequence(UNIT, 1.5, default_grid(0.5, 3.0, 1.5, 10), 5)
    for n in range(6):
        np.testing.assert_allclose(xs.values(n, xs.grid), xs.X[n], atol=1e-13)
        np.testing.assert_allclose(xs.values(n, xs.grid, tilde=True), xs.Xt[n], atol=1e-13)
    assert np.all(xs.X[1:, xs.i0] == 0)


@pytest.mark.parametrize("x0", [0.5, 1.0, 1.7])
def test_reciprocal_degenerates_to_monomials(rng, x0):
    z0 = complex(x0, 0.3)
    xs = build_x_sequence(RECIP, x0, default_grid(0.4, 2.5, x0), 8)
    z = rng.uniform(0.4, 2.5, 30) + 1j * rng.uniform(-1, 1, 30)
    vals = meridional_powers(xs, z0, z)
    for n in range(9):
        np.testing.assert_allclose(vals[n, 0], (z - z0) ** n, atol=1e-11)
        np.testing.assert_allclose(vals[n, 1], 1j * (z - z0) ** n, atol=1e-11)


def test_real_linearity(rng):
    p = RadialProfile.exponential(1.0, 0.3, (0.1, 10.0))
    xs = build_x_sequence(p, 1.2, default_grid(0.8, 2.0, 1.2), 4)
    z = rng.uniform(0.8, 2.0, 10) + 1j * rng.uniform(-0.5, 0.5, 10)
    for n in range(5):
        a = 0.7 - 1.9j
        combo = 0.7 * eval_meridional_power(xs, n, 1, z) - 1.9 * eval_meridional_power(xs, n, 1j, z)
        np.testing.assert_allclose(eval_meridional_power(xs, n, a, z), combo, atol=1e-13)


def test_pairs_solve_p_analytic_system():
    # omega = *Z^(2) for p = x is p-analytic: u_x = v_y/p, u_y = -v_x/p
    xs = build_x_sequence(UNIT, 1.0, default_grid(0.5, 2.5, 1.0), 3)
    pts = np.array([1.2 + 0.3j, 1.6 - 0.4j, 2.0 + 0.1j])
    for n in (2, 3):
        rep = meridional_residual(lambda z: eval_meridional_power(xs, n, 1 + 0.5j, z), UNIT, pts, 1e-2)
        assert rep.estimated_order > 1.8
        assert rep.fine_max_residual < rep.max_residual


def test_leading_term_asymptotics():
    p = RadialProfile.power(1.0, 1.0, (0.1, 10.0))
    z0 = 1.5 + 0.2j
    xs = build_x_sequence(p, z0.real, default_grid(1.0, 2.0, z0.real), 3)
    devs = []
    for rho in (1e-1, 1e-2, 1e-3):
        z = z0 + rho * np.exp(0.6j)
        val = eval_meridional_power(xs, 3, 1 - 1j, z, y0=z0.imag)
        lead = leading_term(3, 1 - 1j, z0, z, z0.real * p(z0.real))
        devs.append(abs(val / lead - 1))
    assert devs[0] > devs[1] > devs[2] and devs[2] < 5e-3


def test_power_object_and_errors():
    xs = build_x_sequence(UNIT, 1.0, [1.0, 2.0], 2)
    w = MeridionalPower(1, 1.0, 1 + 0j, xs)
    np.testing.assert_allclose(w(2.0 + 1j), np.log(2.0) + 1j, atol=1e-14)
    with pytest.raises(DomainError):
        w(3.0)
    with pytest.raises(DomainError):
        build_x_sequence(UNIT, 0.0, [0.5, 1.0], 2)
    with pytest.raises(ValueError):
        build_x_sequence(UNIT, 1.0, [1.0, 2.0], -1)
    with pytest.raises(ValueError):
        MeridionalPower(1, 1.0, 1.5 + 0j, xs)


def test_field_from_meridional():
    er, e3 = field_from_meridional(2.0 + 3.0j, 1.5, RadialProfile.constant(2.0))
    assert e3 == 2.0 and er == pytest.approx(1.0)
    with pytest.raises(DomainError):
        field_from_meridional(1.0, -1.0, UNIT)


def test_field_from_meridional_unit_example():
    er, e3 = field_from_meridional(2.0j, 2.0, UNIT)
    np.testing.assert_allclose((er, e3), (1.0, 0.0))
