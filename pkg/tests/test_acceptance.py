"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""

from __future__ import annotations

import json
import math
import time

import numpy as np

from formalpowers import cli
from formalpowers.bvp import basis_trace, make_problem, power_law_mode, solve
from formalpowers.core.geometry import Domain
from formalpowers.core.profile import RadialProfile, eval_profile
from formalpowers.meridional import build_x_sequence, default_grid, meridional_powers
from formalpowers.transverse import (
    build_formal_powers,
    formal_power_function,
    reconstruct_conjugate,
    transverse_sequence,
    zero_order_power,
)
from formalpowers.verify import (
    asymptotic_check,
    bvp_convergence,
    conductivity_residual,
    p_analytic_residual,
    path_independence_check,
    successor_check,
    vekua_residual,
)

RANGE = (0.05, 20.0)
PRESETS = {
    "1": RadialProfile.constant(1.0, RANGE),
    "r^2": RadialProfile.power(1.0, 2.0, RANGE),
    "e^r": RadialProfile.exponential(1.0, 1.0, RANGE),
}


def test_criterion_01_meridional_degeneration(acceptance):
    rng = np.random.default_rng(1)
    z = rng.uniform(0.5, 2.0, 50) + 1j * rng.uniform(-1.0, 1.0, 50)
    t0 = time.perf_counter()
    p = RadialProfile.reciprocal(1.0, RANGE)
    xs = build_x_sequence(p, 1.0, default_grid(0.5, 2.0, 1.0), 8)
    vals = meridional_powers(xs, 1.0, z)
    elapsed = time.perf_counter() - t0
    err = max(
        max(np.abs(vals[n, 0] - (z - 1) ** n).max(), np.abs(vals[n, 1] - 1j * (z - 1) ** n).max()) for n in range(9)
    )
    ok = err <= 1e-9 and elapsed < 5.0
    assert acceptance(1, "meridional eps=1/x degeneration", ok, f"max error {err:.2e} (<=1e-9), {elapsed:.2f}s (<5s)")


def test_criterion_02_meridional_closed_forms(acceptance):
    xs = build_x_sequence(PRESETS["1"], 1.0, default_grid(1.0, 2.0, 1.0), 2)
    got = [xs.values(1, 2.0), xs.values(1, 2.0, tilde=True), xs.values(2, 2.0)]
    want = [math.log(2), 1.5, 4 * math.log(2) - 1.5]
    err = max(abs(g - w) for g, w in zip(got, want))
    assert acceptance(2, "X(1), Xt(1), X(2) at x=2 for eps=1", err <= 1e-10, f"max error {err:.2e} (<=1e-10)")


def _restated_zero_order(m, coeff, z0, z, p):
    # closed forms restated independently: (r0/z)^m (cos/sin m theta0 times radicals)
    r0, th0 = abs(z0), np.angle(z0)
    down = np.sqrt(eval_profile(p, r0) / eval_profile(p, np.abs(z)))  # sqrt(eps(r0)/eps(r))
    up = 1 / down
    first, second = (down, up) if m % 2 else (up, down)
    lead = (r0 / z) ** m
    if coeff == 1:
        return lead * (np.cos(m * th0) * first + 1j * np.sin(m * th0) * second)
    return lead * (-np.sin(m * th0) * first + 1j * np.cos(m * th0) * second)


def test_criterion_03_transverse_unit_oracle(acceptance):
    rng = np.random.default_rng(3)
    z0 = 2.0 + 0j
    z = z0 + 0.9 * np.sqrt(rng.uniform(0, 1, 20)) * np.exp(2j * np.pi * rng.uniform(0, 1, 20))
    tab = build_formal_powers(transverse_sequence(PRESETS["1"]), z0, 1, z)
    err1 = np.abs(tab.power(1, 1.0) - z0 * np.log(z / z0)).max()
    err0 = 0.0
    for p in PRESETS.values():
        for zc in (z0, 1.3 + 0.8j, -0.7 + 1.1j):
            for m in range(6):
                for c in (1, 1j):
                    ours = zero_order_power(m, c, zc, z, p)
                    err0 = max(err0, float(np.abs(ours - _restated_zero_order(m, c, zc, z, p)).max()))
    ok = err1 <= 1e-8 and err0 <= 1e-13
    assert acceptance(3, "transverse eps=1 and zero-order closed forms", ok,
                      f"Z(1) error {err1:.2e} (<=1e-8), Z_m(0) formula gap {err0:.2e}")


def test_criterion_04_vekua_residual(acceptance):
    z0 = 2.0 + 0j
    grid = Domain.disk((2, 0), 0.75).interior_grid(4, margin=0.3)
    worst, failures, floors = math.inf, [], 0
    for name, p in PRESETS.items():
        seq = transverse_sequence(p)
        for n in range(7):
            for a in (1.0, 1j):
                rep = vekua_residual(formal_power_function(seq, z0, n, a), p, grid, 1e-2)
                if rep.at_floor:
                    floors += 1
                else:
                    worst = min(worst, rep.estimated_order)
                if not rep.passes():
                    failures.append((name, n, a))
    control = vekua_residual(lambda z: np.ones(np.shape(z), dtype=complex), PRESETS["r^2"], grid, 1e-2)
    ok = not failures and not control.passes()
    detail = (f"min order {worst:.3f} (>=1.8), {floors} cases at roundoff floor, "
              f"negative control order {control.estimated_order:.2f} residual {control.fine_max_residual:.2e} fails")
    assert acceptance(4, "Vekua residual, presets, n<=6", ok, detail)


def test_criterion_05_successor_identity(acceptance):
    rng = np.random.default_rng(5)
    pts = rng.uniform(0.5, 3.0, 100) * np.exp(1j * rng.uniform(-np.pi, np.pi, 100))
    seq = transverse_sequence(PRESETS["r^2"])
    devs = [successor_check(seq, m, pts, h_rel=1e-5) for m in (0, 1, 2)]
    worst = max(d.max_deviation for d in devs)
    rejected = sum(d.rejected for d in devs)
    ok = worst <= 1e-6 and rejected == 0
    assert acceptance(5, "successor identity, eps=r^2, m=0,1,2", ok, f"max deviation {worst:.2e} (<=1e-6)")


def test_criterion_06_path_independence(acceptance):
    seq = transverse_sequence(PRESETS["e^r"])
    z0 = 2.0 + 0j
    worst_ratio, ok = 0.0, True
    for z in (2.5 + 0.6j, 1.5 - 0.7j, 2.0 + 0.85j, 1.3 + 0.2j):
        for n in range(6):
            pc = path_independence_check(seq, z0, z, n, "radial-first", "arc-first")
            ok &= pc.passed
            worst_ratio = max(worst_ratio, pc.disagreement / pc.tolerance)
    assert acceptance(6, "path independence, eps=e^r, n<=5", ok,
                      f"max disagreement / (10 x refinement) = {worst_ratio:.2e} (<=1)")


def test_criterion_07_asymptotics(acceptance):
    radii = [1e-1, 1e-2, 1e-3]
    worst, ok = 0.0, True
    for p in PRESETS.values():
        seq = transverse_sequence(p)
        for n in range(5):
            for a in (1.0, 1j, 0.6 - 0.8j):
                rep = asymptotic_check(seq, 2.0 + 0.3j, n, radii, a=a)
                ok &= rep.monotone and rep.final <= 5e-3
                worst = max(worst, rep.final)
    assert acceptance(7, "asymptotics Z ~ a(z-z0)^n, n<=4", ok, f"max final deviation {worst:.2e} (<=5e-3), monotone")


def test_criterion_08_transverse_bvp(acceptance):
    p = PRESETS["r^2"]
    dom = Domain.disk((2, 0), 0.75)
    u = power_law_mode(p)
    t0 = time.perf_counter()
    study = bvp_convergence("transverse", dom, p, u, list(range(2, 21, 2)))
    elapsed = time.perf_counter() - t0
    best = min(study.errors)
    # below 1e-12 the errors sit at the conditioning/roundoff floor and may fluctuate
    monotone = study.non_increasing(floor=1e-12)
    ok = best <= 1e-4 and monotone and elapsed < 60.0 and all(np.isfinite(study.condition))
    pairs = ", ".join(f"n={n}:{e:.1e}" for n, e in zip(study.n_values, study.errors))
    detail = (f"best {best:.2e} (<=1e-4), non-increasing={monotone}, max cond {max(study.condition):.2e}, "
              f"{elapsed:.1f}s (<60s) [{pairs}]")
    assert acceptance(8, "transverse BVP disk, eps=r^2", ok, detail)


def test_criterion_09_meridional_bvp(acceptance):
    p = PRESETS["1"]
    dom = Domain.rectangle(1, 2, 0, 1)
    z0 = dom.centroid
    prob = make_problem("meridional", dom, p, 4, basis_trace("meridional", p, z0, dom, 2, "1"), z0=z0)
    sol = solve(prob)
    ok = sol.boundary_residual_max <= 1e-8
    assert acceptance(9, "meridional BVP exactness, *Z(2)", ok,
                      f"boundary residual {sol.boundary_residual_max:.2e} (<=1e-8), cond {sol.condition_estimate:.2e}")


def test_criterion_10_conjugate_reconstruction(acceptance):
    p = PRESETS["1"]
    dom = Domain.rectangle(1, 2, -0.5, 0.5)
    z0, c = dom.centroid, 0.3
    u = lambda z: (np.asarray(z) ** 2).real  # noqa: E731
    v = reconstruct_conjugate(u, p, dom, z0, c, check_points=dom.interior_grid(5))
    pts = dom.interior_grid(9)
    exact = 2 * pts.real * pts.imag - 2 * z0.real * z0.imag + c
    err = np.abs(v(pts) - exact).max()
    vf = lambda z: v(np.asarray(z).ravel()).reshape(np.shape(z))  # noqa: E731
    inner = dom.interior_grid(6, margin=0.2)
    noise = v.error_estimate(inner)
    pair = p_analytic_residual(u, vf, p, inner, 1e-2, noise=noise)
    recip = conductivity_residual(vf, p, inner, 1e-2, reciprocal=True, noise=noise)
    # a non-polynomial pair where the truncation error, and hence the order, is measurable
    p2 = PRESETS["r^2"]
    disk = Domain.disk((2, 0), 0.5)
    u2 = power_law_mode(p2)
    v2 = reconstruct_conjugate(u2, p2, disk, check_points=disk.interior_grid(5))
    v2f = lambda z: v2(np.asarray(z).ravel()).reshape(np.shape(z))  # noqa: E731
    pts2 = disk.interior_grid(5, margin=0.3)
    noise2 = v2.error_estimate(pts2)
    pair2 = p_analytic_residual(u2, v2f, p2, pts2, 2e-2, noise=noise2)
    recip2 = conductivity_residual(v2f, p2, pts2, 2e-2, reciprocal=True, noise=noise2)
    ok = err <= 1e-8 and pair.passes() and recip.passes() and pair2.estimated_order >= 1.8 and recip2.passes()
    detail = (f"v error {err:.2e} (<=1e-8); eps=1 residuals at floor: pair {pair.fine_max_residual:.1e}"
              f"<={pair.floor:.1e}, div {recip.fine_max_residual:.1e}<={recip.floor:.1e}; "
              f"eps=r^2 pair order {pair2.estimated_order:.2f}, div((1/eps) grad v) order {recip2.estimated_order:.2f}")
    assert acceptance(10, "conjugate reconstruction", ok, detail)


def test_criterion_11_cli_determinism(acceptance, tmp_path):
    configs = {
        "powers-meridional": {
            "profile": {"kind": "reciprocal", "c": 1.0, "range": [0.1, 10]},
            "z0": [1.0, 0.0],
            "n_max": 4,
            "targets": {"random": {"x": [0.5, 2.0], "y": [-1.0, 1.0], "count": 20, "seed": 11}},
        },
        "powers-transverse": {
            "profile": {"kind": "exponential", "c": 1.0, "alpha": 1.0, "range": [0.1, 10]},
            "z0": [2.0, 0.0],
            "n_max": 4,
            "targets": {"grid": {"x": [1.5, 2.5], "y": [-0.5, 0.5], "n": 4}},
        },
        "solve-bvp": {
            "profile": {"kind": "power", "c": 1.0, "alpha": 2.0, "range": [0.1, 10]},
            "domain": {"kind": "disk", "center": [2.0, 0.0], "radius": 0.75},
            "case": "transverse",
            "n_max": 6,
            "boundary": {"preset": "power_law_mode"},
            "field_grid": 6,
        },
    }
    identical, count = True, 0
    for cmd, doc in configs.items():
        cfg = tmp_path / f"{cmd}.json"
        cfg.write_text(json.dumps(doc))
        for run in ("a", "b"):
            assert cli.main([cmd, "--config", str(cfg), "--out", str(tmp_path / run / cmd), "-q"]) == 0
        for f in sorted((tmp_path / "a" / cmd).glob("*.csv")):
            count += 1
            identical &= f.read_bytes() == (tmp_path / "b" / cmd / f.name).read_bytes()
    ok = identical and count == 4
    assert acceptance(11, "CLI determinism", ok, f"{count} CSV artifacts byte-identical={identical}")


if __name__ == "__main__":
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-q", "-s"]))
