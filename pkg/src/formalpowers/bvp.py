"""Dirichlet problems solved by least-squares collocation on formal powers.

The unknown is expanded as a formal polynomial ``sum_n Z^(n)(a_n, z0; z)``;
only its real part is prescribed on the boundary, so each exponent ``n >= 1``
contributes two real columns (coefficients ``1`` and ``i``) and ``n = 0``
contributes one (the ``i`` member has identically zero real part).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np
import scipy.linalg

from formalpowers.core.geometry import Domain, as_complex, as_complex_array
from formalpowers.core.profile import RadialProfile, eval_profile
from formalpowers.core.quadrature import DEFAULT_NODES, EPS
from formalpowers.errors import ConfigError, DomainError, EvaluationError
from formalpowers.meridional import build_x_sequence, default_grid, meridional_powers
from formalpowers.transverse import build_formal_powers, gradient_fd, star_power_from_vekua, transverse_sequence

log = logging.getLogger(__name__)

CASES = ("meridional", "transverse")
OVERSAMPLING = 4
ILL_CONDITIONED = 1e12


def basis_size(n_max: int) -> int:
    return 2 * n_max + 1


def basis_labels(n_max: int) -> list[tuple[int, str]]:
    """``(n, coeff)`` for each design column, in column order."""
    out = [(0, "1")]
    for n in range(1, n_max + 1):
        out += [(n, "1"), (n, "i")]
    return out


# ---------------------------------------------------------------------------
# basis sources
# ---------------------------------------------------------------------------


class TransverseBasis:
    """Star powers ``Re Z/f + i f Im Z`` of the transverse formal powers."""

    case = "transverse"

    def __init__(self, profile: RadialProfile, z0: complex, n_max: int, domain: Domain | None = None,
                 nodes_per_segment: int = DEFAULT_NODES):
        self.profile = profile
        self.z0 = as_complex(z0)
        self.n_max = n_max
        self.domain = domain
        self.nodes_per_segment = nodes_per_segment
        self.seq = transverse_sequence(profile)
        if domain is not None:
            domain.validate_transverse()

    def star_values(self, points) -> np.ndarray:
        """Shape ``(n_max + 1, 2, N)``: ``*Z^(n)(1)`` and ``*Z^(n)(i)`` at the points."""
        z = as_complex_array(points).ravel()
        out = np.empty((self.n_max + 1, 2, z.size), dtype=complex)
        center = z == self.z0
        if np.any(center):
            f0 = self.profile.sqrt(abs(self.z0))
            out[:, :, center] = 0.0
            out[0, 0, center] = 1.0 / f0
            out[0, 1, center] = 1j * f0
        rest = ~center
        if np.any(rest):
            tab = build_formal_powers(self.seq, self.z0, self.n_max, z[rest],
                                      nodes_per_segment=self.nodes_per_segment)
            f = self.profile.sqrt(np.abs(z[rest]))
            out[:, :, rest] = star_power_from_vekua(tab.values, f)
        return out


class MeridionalBasis:
    """Bers' explicit formal powers ``*Z^(n)`` for ``sigma(x) = x eps(x)``."""

    case = "meridional"

    def __init__(self, profile: RadialProfile, z0: complex, n_max: int, domain: Domain,
                 panels: int = 32, nodes_per_segment: int = DEFAULT_NODES):
        domain.validate_meridional()
        self.profile = profile
        self.z0 = as_complex(z0)
        self.n_max = n_max
        self.domain = domain
        grid = default_grid(domain.x_min, domain.x_max, self.z0.real, panels)
        self.xseq = build_x_sequence(profile, self.z0.real, grid, n_max, nodes_per_panel=nodes_per_segment)

    def star_values(self, points) -> np.ndarray:
        return meridional_powers(self.xseq, self.z0, as_complex_array(points).ravel(), self.n_max)


def make_basis(case: str, profile: RadialProfile, z0: complex, n_max: int, domain: Domain):
    if case == "transverse":
        return TransverseBasis(profile, z0, n_max, domain)
    if case == "meridional":
        return MeridionalBasis(profile, z0, n_max, domain)
    raise ValueError(f"unknown case {case!r}")


def columns_from_star(star: np.ndarray) -> np.ndarray:
    n_max = star.shape[0] - 1
    cols = [star[0, 0].real]
    for n in range(1, n_max + 1):
        cols += [star[n, 0].real, star[n, 1].real]
    return np.column_stack(cols)


def combine_star(coefficients: np.ndarray, star: np.ndarray) -> np.ndarray:
    """``sum_j c_j *Z_j`` for real design coefficients."""
    out = coefficients[0] * star[0, 0]
    for j, (n, c) in enumerate(basis_labels(star.shape[0] - 1)[1:], start=1):
        out = out + coefficients[j] * star[n, 0 if c == "1" else 1]
    return out


# ---------------------------------------------------------------------------
# problem, assembly, solution
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BvpProblem:
    case: str
    domain: Domain
    profile: RadialProfile
    z0: complex
    boundary_points: np.ndarray
    boundary_values: np.ndarray
    n_max: int

    def __post_init__(self) -> None:
        if self.case not in CASES:
            raise ValueError(f"case must be one of {CASES}")
        if self.n_max < 0:
            raise ValueError("n_max must be non-negative")
        pts = as_complex_array(self.boundary_points).ravel()
        vals = np.asarray(self.boundary_values, dtype=float).ravel()
        if pts.size != vals.size:
            raise ValueError("boundary points and values differ in length")
        if pts.size:
            off = self.domain.boundary_distance(pts) > 1e-9 * self.domain.diameter
            if np.any(off):
                raise DomainError(f"{int(off.sum())} boundary point(s) do not lie on the boundary")
        object.__setattr__(self, "z0", as_complex(self.z0))
        object.__setattr__(self, "boundary_points", pts)
        object.__setattr__(self, "boundary_values", vals)
        if not self.domain.contains([self.z0])[0]:
            raise DomainError("basis center z0 must be interior")

    @property
    def basis_size(self) -> int:
        return basis_size(self.n_max)


def make_problem(case: str, domain: Domain, profile: RadialProfile, n_max: int,
                 data: Callable[[np.ndarray], np.ndarray], *, z0=None,
                 oversampling: int = OVERSAMPLING, n_points: int | None = None) -> BvpProblem:
    """Sample ``data`` at ``oversampling * basis_size`` boundary points equally spaced by arc length."""
    z0 = domain.centroid if z0 is None else as_complex(z0)
    npts = n_points or oversampling * basis_size(n_max)
    pts = domain.boundary_points(npts)
    return BvpProblem(case, domain, profile, z0, pts, np.asarray(data(pts), dtype=float), n_max)


def assemble(problem: BvpProblem, source=None) -> np.ndarray:
    """Design matrix with one row per boundary point and ``2 n_max + 1`` columns."""
    if problem.boundary_points.size == 0:
        raise ValueError("no boundary points to collocate")
    source = source or make_basis(problem.case, problem.profile, problem.z0, problem.n_max, problem.domain)
    A = columns_from_star(source.star_values(problem.boundary_points))
    if not np.all(np.isfinite(A)):
        raise EvaluationError("basis evaluation produced non-finite values")
    return A


@dataclass(frozen=True)
class BvpSolution:
    coefficients: np.ndarray
    boundary_residual_max: float
    boundary_residual_rms: float
    condition_estimate: float
    rank: int
    basis_size: int
    column_scale: np.ndarray = field(repr=False, default=None)

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.basis_size

    @property
    def ill_conditioned(self) -> bool:
        return self.condition_estimate > ILL_CONDITIONED

    def complex_coefficients(self) -> np.ndarray:
        """``a_n = a'_n + i a''_n`` in formal-polynomial form."""
        c = self.coefficients
        out = np.zeros((self.basis_size + 1) // 2, dtype=complex)
        out[0] = c[0]
        out[1:] = c[1::2] + 1j * c[2::2]
        return out

    def to_report(self) -> dict[str, Any]:
        return {
            "coefficients": [float(v) for v in self.coefficients],
            "boundary_residual_max": float(self.boundary_residual_max),
            "boundary_residual_rms": float(self.boundary_residual_rms),
            "condition_estimate": float(self.condition_estimate),
            "rank": int(self.rank),
            "basis_size": int(self.basis_size),
            "ill_conditioned": bool(self.ill_conditioned),
        }


def solve_least_squares(matrix, rhs, *, truncate: float | None = None) -> BvpSolution:
    """Minimise ``||A c - b||_2`` with column-pivoted QR on the column-equilibrated matrix.

    Rank is the number of pivots with ``|R_kk| > tol |R_00|``, ``tol`` defaulting
    to ``max(m, n) * eps``. A rank-deficient system falls back to the SVD
    minimum-norm solution at the same cutoff.
    """
    A = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
        raise ValueError("empty design matrix")
    m, n = A.shape
    if b.size != m:
        raise ValueError("right-hand side length does not match the matrix")
    if m < n:
        raise ValueError("need at least as many collocation points as basis functions")
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    As = A / scale
    Q, R, piv = scipy.linalg.qr(As, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = truncate if truncate is not None else max(m, n) * EPS
    rank = int(np.sum(diag > tol * diag[0])) if diag[0] > 0 else 0
    sv = np.linalg.svd(As, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if rank == n:
        y = scipy.linalg.solve_triangular(R, Q.T @ b)
        cs = np.empty(n)
        cs[piv] = y
        coef = cs / scale
    else:
        coef, *_ = scipy.linalg.lstsq(A, b, cond=tol)
    res = A @ coef - b
    sol = BvpSolution(coef, float(np.abs(res).max()), float(np.sqrt(np.mean(res ** 2))),
                      cond, rank, n, scale)
    if sol.ill_conditioned:
        log.warning("design matrix condition estimate %.3e exceeds %.0e", cond, ILL_CONDITIONED)
    if sol.rank_deficient:
        log.warning("rank-deficient design matrix: rank %d of %d", rank, n)
    return sol


def solve(problem: BvpProblem, source=None, **kwargs) -> BvpSolution:
    source = source or make_basis(problem.case, problem.profile, problem.z0, problem.n_max, problem.domain)
    return solve_least_squares(assemble(problem, source), problem.boundary_values, **kwargs)


@dataclass(frozen=True)
class SolutionValues:
    """``u`` and the physical field at evaluation points.

    Transverse: ``field = (E1, E2) = grad u``. Meridional: ``field = (E_r, E_3)``.
    ``omega`` is the ``p``-analytic function ``u + iv``.
    """

    points: np.ndarray
    u: np.ndarray
    field: np.ndarray
    omega: np.ndarray


def evaluate_solution(sol: BvpSolution, problem: BvpProblem, points, source=None,
                      h: float | None = None) -> SolutionValues:
    """Evaluate the formal polynomial and its field at points of the closed domain."""
    z = as_complex_array(points).ravel()
    inside = problem.domain.contains(z, closed=True) | (problem.domain.boundary_distance(z) <= 1e-9 * problem.domain.diameter)
    if not np.all(inside):
        raise DomainError("evaluation point outside the domain")
    source = source or make_basis(problem.case, problem.profile, problem.z0, problem.n_max, problem.domain)
    omega = combine_star(sol.coefficients, source.star_values(z))
    u = omega.real
    if problem.case == "meridional":
        er = omega.imag / (z.real * eval_profile(problem.profile, z.real))
        fld = np.vstack([er, u])
    else:
        step = h if h is not None else 1e-5 * problem.domain.diameter

        def u_of(w):
            w = np.asarray(w)
            return combine_star(sol.coefficients, source.star_values(w.ravel())).real.reshape(w.shape)

        g = gradient_fd(u_of, z, step)
        fld = np.vstack([g.real, g.imag])
    return SolutionValues(z, u, fld, omega)


# ---------------------------------------------------------------------------
# boundary-data presets
# ---------------------------------------------------------------------------


def power_law_mode(profile: RadialProfile, k: int = 1) -> Callable[[np.ndarray], np.ndarray]:
    """``r^beta cos(k theta)`` with ``beta (beta + alpha) = k^2``: exact for ``eps = c r^alpha``."""
    if profile.kind == "constant":
        alpha = 0.0
    elif profile.kind == "power":
        alpha = profile.params[1]
    elif profile.kind == "reciprocal":
        alpha = -1.0
    else:
        raise ConfigError("power_law_mode needs a constant, power or reciprocal profile")
    beta = (-alpha + math.sqrt(alpha * alpha + 4 * k * k)) / 2

    def u(z):
        z = np.asarray(z, dtype=complex)
        return np.abs(z) ** beta * np.cos(k * np.angle(z))

    u.beta = beta  # type: ignore[attr-defined]
    return u


def basis_trace(case: str, profile: RadialProfile, z0: complex, domain: Domain, n: int, coeff: str = "1",
                n_max: int | None = None):
    """Real part of one star power; its boundary trace is exactly representable."""
    src = make_basis(case, profile, z0, max(n, n_max or 0), domain)
    c = 0 if coeff == "1" else 1

    def u(z):
        z = np.asarray(z)
        return src.star_values(z.ravel())[n, c].real.reshape(z.shape)

    return u


def preset_data(name: str, params: Mapping[str, Any], *, case: str, profile: RadialProfile,
                z0: complex, domain: Domain) -> Callable[[np.ndarray], np.ndarray]:
    if name == "power_law_mode":
        return power_law_mode(profile, int(params.get("k", 1)))
    if name == "basis_trace":
        return basis_trace(case, profile, z0, domain, int(params.get("n", 1)), str(params.get("coeff", "1")))
    if name == "harmonic":
        expr = params.get("function", "x2-y2")
        funcs = {
            "x2-y2": lambda z: (z * z).real,
            "exp": lambda z: np.exp(z).real,
            "x": lambda z: z.real,
        }
        if expr not in funcs:
            raise ConfigError(f"boundary.preset harmonic: unknown function {expr!r}")
        f = funcs[expr]
        return lambda z: f(np.asarray(z, dtype=complex))
    if name == "axial_uniform":
        return lambda z: np.asarray(z, dtype=complex).imag
    if name == "constant":
        value = float(params.get("value", 1.0))
        return lambda z: np.full(np.shape(z), value)
    raise ConfigError(f"boundary.preset: unknown preset {name!r}")
