from __future__ import annotations

import numpy as np
import pytest

from formalpowers.core.geometry import Domain, PathSpec, log_polar_path
from formalpowers.core.profile import RadialProfile, eval_profile
from formalpowers.errors import DomainError, PathDependenceError, PathError, PreconditionError
from formalpowers.transverse import (
    build_formal_powers,
    fg_integral,
    field_from_transverse,
    formal_power_function,
    general_adjoint,
    make_generating_sequence,
    reconstruct_conjugate,
    star_power_from_vekua,
    transverse_basis,
    transverse_sequence,
    zero_order_coefficients,
    zero_order_power,
)
from formalpowers.verify import conductivity_residual, p_analytic_residual, vekua_residual

UNIT = RadialProfile.constant(1.0, (0.05, 20.0))
R2 = RadialProfile.power(1.0, 2.0, (0.05, 20.0))
EXP = RadialProfile.exponential(1.0, 1.0, (0.05, 20.0))


@pytest.mark.parametrize("z0", [2.0 + 0j, 1.5 + 1.0j, -0.5 + 2.0j])
def test_unit_permittivity_log_powers(rng, z0):
    # for eps = 1 the recursion collapses to Z^(n)(a, z0; z) = a z0^n log^n(z / z0)
    z = z0 + 0.8 * np.sqrt(rng.uniform(0, 1, 25)) * np.exp(2j * np.pi * rng.uniform(0, 1, 25))
    tab = build_formal_powers(transverse_sequence(UNIT), z0, 6, z)
    L = np.log(z / z0)
    for n in range(7):
        for a in (1.0, 1j, 0.3 - 2.0j):
            np.testing.assert_allclose(tab.power(n, a), a * z0 ** n * L ** n, atol=1e-12 * abs(z0) ** n)


def test_zero_order_closed_form_matches_linear_solve(preset_profile):
    seq = transverse_sequence(preset_profile)
    z0 = 1.2 + 0.9j
    z = np.array([1.0 + 0.5j, 2.0 - 0.2j, 0.4 + 1.7j])
    for m in range(6):
        F, G = seq.pair(m, z)
        for c in (1.0, 1j):
            lam, mu = zero_order_coefficients(seq, m, c, z0)
            np.testing.assert_allclose(zero_order_power(m, c, z0, z, preset_profile), lam * F + mu * G, atol=1e-13)
            np.testing.assert_allclose(zero_order_power(m, c, z0, z0, preset_profile), c, atol=1e-14)


def test_closed_adjoints_match_general_formula(preset_profile):
    seq = transverse_sequence(preset_profile)
    z = np.array([1.0 + 0.5j, 2.0 - 0.2j])
    for m in range(5):
        closed, general = seq.adjoint(m), general_adjoint(seq, m)
        np.testing.assert_allclose(closed.F_star(z), general.F_star(z), rtol=1e-13)
        np.testing.assert_allclose(closed.G_star(z), general.G_star(z), rtol=1e-13)


def test_generating_margin_positive(preset_profile):
    seq = transverse_sequence(preset_profile)
    z = np.array([0.3 + 0.1j, 2.0 - 1.5j, -1.0 + 0.2j])
    for m in range(4):
        assert np.all(seq.generating_margin(m, z) > 0)


def test_general_sequence_preconditions():
    with pytest.raises(PreconditionError):
        make_generating_sequence(np.exp, lambda v: np.ones_like(v), lambda z: z, lambda z: 0 * z, samples=[1.0 + 1j])
    seq = make_generating_sequence(np.exp, lambda v: np.ones_like(v), lambda z: z, lambda z: np.ones_like(z),
                                   samples=[1.0 + 1j])
    assert np.all(seq.generating_margin(0, np.array([1.0 + 1j])) > 0)


def test_fg_integral_reproduces_first_power():
    z0, z = 2.0 + 0j, 1.6 + 0.5j
    path = log_polar_path(z0, z)
    w = lambda t: zero_order_power(1, 1.0, z0, t, R2)  # noqa: E731
    tab = build_formal_powers(transverse_sequence(R2), z0, 1, [z])
    np.testing.assert_allclose(fg_integral(0, w, path, R2), tab.values[1, 0, 0], atol=1e-13)


@pytest.mark.parametrize("profile", [R2, EXP], ids=["r^2", "e^r"])
def test_powers_solve_vekua_and_conductivity(profile):
    z0 = 2.0 + 0j
    seq = transverse_sequence(profile)
    pts = np.array([2.2 + 0.3j, 1.8 - 0.4j, 2.4 - 0.1j])
    for n in (1, 3):
        W = formal_power_function(seq, z0, n, 1 - 0.5j)
        rep = vekua_residual(W, profile, pts, 1e-2)
        assert rep.estimated_order > 1.8

        def u(z, W=W):
            z = np.asarray(z)
            return star_power_from_vekua(W(z), profile.sqrt(np.abs(z))).real

        def v(z, W=W):
            z = np.asarray(z)
            return star_power_from_vekua(W(z), profile.sqrt(np.abs(z))).imag

        assert conductivity_residual(u, profile, pts, 2e-2).passes()
        assert conductivity_residual(v, profile, pts, 2e-2, reciprocal=True).passes()
        assert p_analytic_residual(u, v, profile, pts, 1e-2).passes()


def test_path_orders_agree():
    seq = transverse_sequence(EXP)
    z = np.array([1.4 + 0.6j, 2.6 - 0.3j, 2.0 + 0.8j])
    a = build_formal_powers(seq, 2.0, 5, z, path_order="radial-first", refine=True)
    b = build_formal_powers(seq, 2.0, 5, z, path_order="arc-first", refine=True)
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)
    assert np.all(a.refinement < 1e-11)


def test_explicit_paths_and_polyline():
    seq = transverse_sequence(R2)
    z0, z = 2.0 + 0j, 2.3 + 0.5j
    bent = PathSpec(z0, (2.0 + 0.5j, z))
    straight = PathSpec(z0, (2.15 + 0.25j, z))
    a = build_formal_powers(seq, z0, 3, None, paths=[bent])
    b = build_formal_powers(seq, z0, 3, None, paths=[straight])
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)


def test_transverse_errors():
    seq = transverse_sequence(R2)
    with pytest.raises(DomainError):
        build_formal_powers(seq, 0.0, 2, [1.0])
    with pytest.raises(PathError):
        build_formal_powers(seq, 1.0, 2, [0.0])
    with pytest.raises(DomainError):
        build_formal_powers(seq, 1.0, 2, [1.5], Domain.disk((0.5, 0), 1.0))
    with pytest.raises(ValueError):
        build_formal_powers(seq, 1.0, 31, [1.5])
    with pytest.raises(ValueError):
        zero_order_power(0, 2.0, 1.0, 1.5, R2)


def test_basis_columns_are_real_parts_of_star_powers():
    pts = np.array([1.7 + 0.2j, 2.3 - 0.4j, 2.1 + 0.6j, 1.9 - 0.1j])
    cols = transverse_basis(R2, 2.0, 3, pts)
    tab = build_formal_powers(transverse_sequence(R2), 2.0, 3, pts)
    assert cols.shape == (4, 7)
    np.testing.assert_allclose(cols[:, 0], tab.star(0, 1).real)
    np.testing.assert_allclose(cols[:, 5], tab.star(3, 1).real)
    np.testing.assert_allclose(cols[:, 6], tab.star(3, 1j).real)


def test_conjugate_reconstruction_unit():
    dom = Domain.rectangle(1, 2, -0.5, 0.5)
    u = lambda z: (np.asarray(z) ** 2).real  # noqa: E731
    z0 = 1.5 + 0j
    v = reconstruct_conjugate(u, UNIT, dom, z0, c=0.25, check_points=dom.interior_grid(5))
    pts = dom.interior_grid(7)
    np.testing.assert_allclose(v(pts), 2 * pts.real * pts.imag + 0.25, atol=1e-8)


def test_conjugate_reconstruction_power_law():
    # no closed form needed: the reconstructed pair must satisfy the eps-analytic system
    dom = Domain.disk((2, 0), 0.5)
    beta = np.sqrt(2) - 1
    u = lambda z: np.abs(np.asarray(z)) ** beta * np.cos(np.angle(z))  # noqa: E731
    v = reconstruct_conjugate(u, R2, dom, check_points=dom.interior_grid(5))
    pts = dom.interior_grid(5, margin=0.3)
    rep = p_analytic_residual(u, lambda z: v(np.asarray(z).ravel()).reshape(np.shape(z)), R2, pts, 1e-2)
    assert rep.passes()


def test_conjugate_detects_non_solution():
    dom = Domain.disk((2, 0), 0.5)
    with pytest.raises(PathDependenceError):
        reconstruct_conjugate(lambda z: np.asarray(z).real, R2, dom, check_points=dom.interior_grid(5))


def test_star_power_helper():
    assert star_power_from_vekua(2.0 + 3.0j, 2.0) == 1.0 + 6.0j
    with pytest.raises(ValueError):
        star_power_from_vekua(1.0, 0.0)
    np.testing.assert_allclose(eval_profile(R2, 2.0), 4.0)


@pytest.mark.parametrize("m", range(-8, 9))
def test_generating_pairs_valid_for_negative_and_positive_m(m):
    seq = transverse_sequence(R2)
    z = np.array([1.3 + 0.4j, 2.2 - 0.7j, 0.6 + 1.1j])
    assert np.all(seq.generating_margin(m, z) > 0)


def test_fg_integral_of_unit_function():
    path = log_polar_path(1.0 + 0j, 1.0 + 1.0j)
    np.testing.assert_allclose(fg_integral(0, lambda z: np.ones_like(z), path, UNIT), 1j, atol=1e-13)


def test_field_from_transverse_log_potential():
    # u = ln r has gradient 1/conj(z); at z = 2 that is (0.5, 0)
    np.testing.assert_allclose(field_from_transverse(1 / np.conj(2.0 + 0j)), (0.5, 0.0))


def test_conjugate_of_x_and_of_constant():
    dom = Domain.rectangle(1, 2, -0.5, 0.5)
    z0 = 1.5 + 0.1j
    pts = dom.interior_grid(5)
    v = reconstruct_conjugate(lambda z: np.asarray(z).real, UNIT, dom, z0)
    np.testing.assert_allclose(v(pts), pts.imag - z0.imag, atol=1e-9)
    w = reconstruct_conjugate(lambda z: np.full(np.shape(z), 3.0), R2, dom, z0, c=0.7)
    np.testing.assert_allclose(w(pts), 0.7, atol=1e-9)
