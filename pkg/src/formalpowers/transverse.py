"""Formal powers of the main Vekua equation for a radial permittivity.

The transverse field is ``(E1, E2) = grad u`` with ``div(eps grad u) = 0``.
With ``f = sqrt(eps(r))`` the function ``W = u f + i v / f`` solves
``W_zbar = (f_zbar / f) conj(W)``. The generating pair ``F = f``, ``G = i/f``
embeds in the sequence obtained from ``Phi(z) = ln z``:

    even m:  F_m = f z^-m,      G_m = i z^-m / f
    odd m:   F_m = z^-m / f,    G_m = i f z^-m

and formal powers follow from ``Z_m^(n) = n int Z_{m+1}^(n-1) d_(F_m, G_m) zeta``
starting from closed-form ``Z_m^(0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from formalpowers.core.geometry import (
    Domain,
    PathBatch,
    PathSpec,
    as_complex,
    as_complex_array,
    log_polar_batch,
)
from formalpowers.core.profile import RadialProfile, eval_profile
from formalpowers.core.quadrature import DEFAULT_NODES, EPS, discretize, line_integral, panel_rule
from formalpowers.errors import DomainError, PathDependenceError, PreconditionError

N_CAP = 30
COEFFS = (1.0 + 0j, 1j)


def _zpow(z: np.ndarray, m: int) -> np.ndarray:
    """``z**m`` through polar form, which keeps large ``|m|`` away from overflow."""
    if m == 0:
        return np.ones(np.shape(z), dtype=complex)
    r = np.abs(z)
    return np.exp(m * np.log(r)) * np.exp(1j * m * np.angle(z))


# ---------------------------------------------------------------------------
# generating sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AdjointPair:
    m: int
    F_star: Callable[[np.ndarray], np.ndarray]
    G_star: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class GeneratingPairSeq:
    """Lazily evaluated generating sequence ``(F_m, G_m)``, ``m`` any integer.

    Built from ``F = U(Re Phi) V(Im Phi)`` and ``G = i / (U V)``; ``Phi_z`` enters
    as ``Phi_z**m``. When ``profile`` is set the sequence is the transverse one
    (``Phi = ln z``, ``U(u) = sqrt(eps(e^u))``, ``V = 1``) and the closed-form
    adjoints are used.
    """

    U: Callable[[np.ndarray], np.ndarray]
    V: Callable[[np.ndarray], np.ndarray]
    Phi: Callable[[np.ndarray], np.ndarray]
    Phi_z: Callable[[np.ndarray], np.ndarray]
    profile: RadialProfile | None = None

    def _uv(self, z: np.ndarray) -> np.ndarray:
        if self.profile is not None:
            return self.profile.sqrt(np.abs(z))
        ph = self.Phi(z)
        return self.U(ph.real) * self.V(ph.imag)

    def _dphi_pow(self, z: np.ndarray, m: int) -> np.ndarray:
        if self.profile is not None:
            return _zpow(z, -m)
        return self.Phi_z(z) ** m

    def F(self, m: int, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        uv = self._uv(z)
        if m % 2 == 0:
            return self._dphi_pow(z, m) * uv
        u2 = self._u_squared(z)
        return self._dphi_pow(z, m) * uv / u2

    def G(self, m: int, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        uv = self._uv(z)
        if m % 2 == 0:
            return self._dphi_pow(z, m) * 1j / uv
        return self._dphi_pow(z, m) * self._u_squared(z) * 1j / uv

    def _u_squared(self, z: np.ndarray) -> np.ndarray:
        if self.profile is not None:
            return eval_profile(self.profile, np.abs(z))
        return self.U(self.Phi(z).real) ** 2

    def pair(self, m: int, z) -> tuple[np.ndarray, np.ndarray]:
        return self.F(m, z), self.G(m, z)

    def adjoint(self, m: int) -> AdjointPair:
        if self.profile is not None:
            p = self.profile
            if m % 2:
                def F_star(z):
                    z = np.asarray(z, dtype=complex)
                    return -1j * _zpow(z, m) / p.sqrt(np.abs(z))

                def G_star(z):
                    z = np.asarray(z, dtype=complex)
                    return p.sqrt(np.abs(z)) * _zpow(z, m)
            else:
                def F_star(z):
                    z = np.asarray(z, dtype=complex)
                    return -1j * _zpow(z, m) * p.sqrt(np.abs(z))

                def G_star(z):
                    z = np.asarray(z, dtype=complex)
                    return _zpow(z, m) / p.sqrt(np.abs(z))
            return AdjointPair(m, F_star, G_star)
        return general_adjoint(self, m)

    def generating_margin(self, m: int, z) -> np.ndarray:
        """``Im(conj(F_m) G_m)``; positive wherever the pair is a generating pair."""
        F, G = self.pair(m, z)
        return np.imag(np.conj(F) * G)


def general_adjoint(seq: GeneratingPairSeq, m: int) -> AdjointPair:
    """``F* = -2 conj(F) / (F conj(G) - conj(F) G)``, ``G* = 2 conj(G) / (...)``."""

    def both(z):
        F, G = seq.pair(m, z)
        den = F * np.conj(G) - np.conj(F) * G
        return -2 * np.conj(F) / den, 2 * np.conj(G) / den

    return AdjointPair(m, lambda z: both(z)[0], lambda z: both(z)[1])


def make_generating_sequence(U, V, Phi, Phi_z, *, samples=None, profile: RadialProfile | None = None
                             ) -> GeneratingPairSeq:
    """Embed ``(U V, i/(U V))`` in a generating sequence.

    ``samples`` (points of the intended domain) are used to check that
    ``Phi_z`` is finite and nonvanishing and that ``U``, ``V`` do not vanish.
    """
    seq = GeneratingPairSeq(U, V, Phi, Phi_z, profile)
    if samples is not None:
        z = as_complex_array(samples)
        dphi = np.asarray(Phi_z(z), dtype=complex)
        if not np.all(np.isfinite(dphi)):
            raise PreconditionError("Phi_z is unbounded at a sample point")
        scale = np.abs(dphi).max()
        if np.any(np.abs(dphi) <= 1e-14 * max(scale, 1.0)):
            raise PreconditionError("Phi_z vanishes at a sample point")
        ph = Phi(z)
        uv = U(ph.real) * V(ph.imag)
        if not np.all(np.isfinite(uv)) or np.any(uv == 0):
            raise PreconditionError("U*V vanishes or is not finite at a sample point")
    return seq


def transverse_sequence(p: RadialProfile, *, samples=None) -> GeneratingPairSeq:
    """The sequence for ``eps(r)``: ``Phi = ln z``, ``U(u) = sqrt(eps(e^u))``, ``V = 1``."""

    def U(u):
        return np.sqrt(eval_profile(p, np.exp(u)))

    def V(v):
        return np.ones(np.shape(v))

    def Phi(z):
        return np.log(np.asarray(z, dtype=complex))

    def Phi_z(z):
        return 1.0 / np.asarray(z, dtype=complex)

    return make_generating_sequence(U, V, Phi, Phi_z, samples=samples, profile=p)


# ---------------------------------------------------------------------------
# zero-order powers, (F,G)-integral, star powers
# ---------------------------------------------------------------------------


def zero_order_coefficients(seq: GeneratingPairSeq, m: int, a: complex, z0: complex) -> tuple[float, float]:
    """Real ``(lambda, mu)`` with ``lambda F_m(z0) + mu G_m(z0) = a``."""
    F0, G0 = (complex(v) for v in seq.pair(m, np.array(z0)))
    mat = np.array([[F0.real, G0.real], [F0.imag, G0.imag]])
    lam, mu = np.linalg.solve(mat, [a.real, a.imag])
    return float(lam), float(mu)


def zero_order_power(m: int, coeff: complex, z0, z, p: RadialProfile):
    """Closed form of ``Z_m^(0)(coeff, z0; z)`` for ``coeff`` in ``{1, i}``.

    Odd ``m`` puts ``sqrt(eps(r0)/eps(r))`` on the real part of the ``coeff = 1``
    power; even ``m`` swaps the two radicals.
    """
    coeff = complex(coeff)
    if coeff not in COEFFS:
        raise ValueError("coeff must be 1 or i")
    z0 = as_complex(z0)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z == 0):
        raise DomainError("zero-order powers are singular at z = 0")
    r0, th0 = abs(z0), math.atan2(z0.imag, z0.real)
    ratio = np.sqrt(eval_profile(p, np.abs(z)) / eval_profile(p, r0))  # sqrt(eps(r)/eps(r0))
    c, s = math.cos(m * th0), math.sin(m * th0)
    lead = r0 ** m * _zpow(z, -m)
    plain, swapped = (1.0 / ratio, ratio) if m % 2 else (ratio, 1.0 / ratio)
    if coeff == 1:
        out = lead * (c * plain + 1j * s * swapped)
    else:
        out = lead * (-s * plain + 1j * c * swapped)
    return complex(out[0]) if scalar else out


def fg_integral(m: int, w: Callable[[np.ndarray], np.ndarray], path: PathSpec, p: RadialProfile,
                seq: GeneratingPairSeq | None = None) -> complex:
    """``F_m(z) Re int G_m* w dzeta + G_m(z) Re int F_m* w dzeta`` along ``path``."""
    seq = seq or transverse_sequence(p)
    adj = seq.adjoint(m)
    ig = line_integral(lambda z: adj.G_star(z) * w(z), path).value
    i_f = line_integral(lambda z: adj.F_star(z) * w(z), path).value
    F, G = seq.pair(m, np.array(path.end))
    return complex(F * ig.real + G * i_f.real)


def star_power_from_vekua(Z, f):
    """``Re Z / f + i f Im Z``: the ``eps``-analytic counterpart of a Vekua power."""
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr <= 0):
        raise ValueError("f must be positive")
    Z_arr = np.asarray(Z, dtype=complex)
    out = Z_arr.real / f_arr + 1j * f_arr * Z_arr.imag
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# formal powers by recursive (F,G)-integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FormalPowerTable:
    """``Z^(n)(1, z0; z)`` and ``Z^(n)(i, z0; z)`` at the path targets.

    ``values[n, c, t]`` holds the coefficient-``COEFFS[c]`` power of exponent
    ``n`` at ``targets[t]``. ``refinement`` (when computed) is the change under
    node doubling, floored at the roundoff level of the recursion.
    ``node_values`` keeps ``Z^(n)`` at every path node when requested.
    """

    z0: complex
    n_max: int
    targets: np.ndarray
    values: np.ndarray
    profile: RadialProfile
    refinement: np.ndarray | None = None
    node_values: np.ndarray | None = field(default=None, repr=False)
    nodes: np.ndarray | None = field(default=None, repr=False)

    def power(self, n: int, a: complex = 1.0) -> np.ndarray:
        """``Z^(n)(a, z0; .)`` at the targets, by real linearity."""
        a = complex(a)
        return a.real * self.values[n, 0] + a.imag * self.values[n, 1]

    def star(self, n: int, a: complex = 1.0) -> np.ndarray:
        return star_power_from_vekua(self.power(n, a), self.profile.sqrt(np.abs(self.targets)))

    def basis_columns(self) -> np.ndarray:
        """Real columns ``Re Z^(n)(c) / sqrt(eps)``, skipping the structurally zero ``n = 0, c = i``."""
        f = self.profile.sqrt(np.abs(self.targets))
        cols = [self.values[0, 0].real / f]
        for n in range(1, self.n_max + 1):
            cols.append(self.values[n, 0].real / f)
            cols.append(self.values[n, 1].real / f)
        return np.column_stack(cols)


def _check_domain(domain: Domain | None, z0: complex, targets: np.ndarray, p: RadialProfile) -> None:
    if domain is None:
        return
    domain.validate_transverse()
    if not domain.contains([z0])[0]:
        raise DomainError("z0 must lie strictly inside the domain")
    if not np.all(domain.contains(targets, closed=True) | (domain.boundary_distance(targets) <= 1e-9 * domain.diameter)):
        raise DomainError("every target must lie in the closed domain")


class _NodeCache:
    """Per-node quantities reused by every level of the recursion."""

    def __init__(self, seq: GeneratingPairSeq, z: np.ndarray):
        self.seq = seq
        self.z = z
        if seq.profile is not None:
            r = np.abs(z)
            self.eps = eval_profile(seq.profile, r)
            self.f = np.sqrt(self.eps)
            self.logr = np.log(r)
            self.theta = np.angle(z)
        self._zpow: dict[int, np.ndarray] = {}

    def zpow(self, m: int) -> np.ndarray:
        if m not in self._zpow:
            self._zpow[m] = np.exp(m * self.logr + 1j * m * self.theta)
        return self._zpow[m]

    def pair(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        if self.seq.profile is None:
            return self.seq.pair(m, self.z)
        zm = self.zpow(-m)
        if m % 2 == 0:
            return zm * self.f, 1j * zm / self.f
        return zm / self.f, 1j * zm * self.f

    def adjoint(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        if self.seq.profile is None:
            adj = self.seq.adjoint(m)
            return adj.F_star(self.z), adj.G_star(self.z)
        zm = self.zpow(m)
        if m % 2:
            return -1j * zm / self.f, self.f * zm
        return -1j * zm * self.f, zm / self.f


def _descend(seq: GeneratingPairSeq, d, cache: _NodeCache, tcache: _NodeCache, z0: complex, n: int,
             keep_nodes: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Run the recursion for exponent ``n`` and both coefficients.

    Returns ``(values at targets (2, T), largest magnitude met (2, T), node values or None)``.
    """
    nodes = d.nodes
    seeds = [zero_order_coefficients(seq, n, c, z0) for c in COEFFS]
    Fn, Gn = cache.pair(n)
    lam = np.array([s[0] for s in seeds]).reshape((2,) + (1,) * nodes.ndim)
    mu = np.array([s[1] for s in seeds]).reshape((2,) + (1,) * nodes.ndim)
    Z_nodes = lam * Fn + mu * Gn
    if n == 0:
        Ft, Gt = tcache.pair(0)
        at_t = lam[..., 0, 0, 0] * Ft + mu[..., 0, 0, 0] * Gt
        return at_t, np.abs(at_t), (Z_nodes if keep_nodes else None)
    big = np.abs(Z_nodes).max(axis=(-1, -2, -3))
    at_t = None
    for m in range(n - 1, -1, -1):
        k = n - m
        Fs, Gs = cache.adjoint(m)
        (IG_nodes, IF_nodes), (IG_end, IF_end) = d.running(np.stack([Gs * Z_nodes, Fs * Z_nodes]))
        Fm, Gm = cache.pair(m)
        Z_nodes = k * (Fm * IG_nodes.real + Gm * IF_nodes.real)
        big = np.maximum(big, np.abs(Z_nodes).max(axis=(-1, -2, -3)))
        if m == 0:
            Ft, Gt = tcache.pair(0)
            at_t = k * (Ft * IG_end.real + Gt * IF_end.real)
    return at_t, np.maximum(big, np.abs(at_t)), (Z_nodes if keep_nodes else None)


def _run(seq, batch: PathBatch, z0, n_max, nodes_per_segment, keep_nodes):
    d = discretize(batch.starts, batch.ends, panel_rule(batch.rule, nodes_per_segment))
    targets = batch.targets
    T = targets.size
    values = np.empty((n_max + 1, 2, T), dtype=complex)
    scale = np.empty((n_max + 1, 2, T))
    node_vals = np.empty((n_max + 1, 2) + d.nodes.shape, dtype=complex) if keep_nodes else None
    cache, tcache = _NodeCache(seq, d.nodes), _NodeCache(seq, targets)
    for n in range(n_max + 1):
        v, big, zn = _descend(seq, d, cache, tcache, z0, n, keep_nodes)
        values[n] = v
        scale[n] = big
        if keep_nodes:
            node_vals[n] = zn
    return values, scale, node_vals, d


def build_formal_powers(seq: GeneratingPairSeq, z0, n_max: int, targets, domain: Domain | None = None, *,
                        paths: Sequence[PathSpec] | PathBatch | None = None, path_order: str = "radial-first",
                        nodes_per_segment: int = DEFAULT_NODES, n_radial: int = 4, n_arc: int = 8,
                        refine: bool = False, keep_nodes: bool = False, r_min: float | None = None
                        ) -> FormalPowerTable:
    """Formal powers ``Z^(n)(1|i, z0; z)``, ``n <= n_max``, at every target.

    Each target is reached by its own path (log-polar by default). For each
    ``n`` the level ``m = n`` is seeded with ``Z_n^(0)`` on the path nodes and
    the recursion descends to ``m = 0`` with one running-integral sweep per
    level. ``refine=True`` repeats the build with doubled nodes and records
    the difference.
    """
    if seq.profile is None:
        raise ValueError("build_formal_powers needs a profile-backed sequence")
    if not 0 <= n_max <= N_CAP:
        raise ValueError(f"n_max must lie in 0..{N_CAP}")
    p = seq.profile
    z0 = as_complex(z0)
    if z0 == 0:
        raise DomainError("the center z0 must differ from the origin")
    if paths is None:
        tz = as_complex_array(targets).ravel()
        _check_domain(domain, z0, tz, p)
        if r_min is None:
            r_min = 1e-6 * (domain.diameter if domain is not None else max(abs(z0), 1.0))
        batch = log_polar_batch(z0, tz, order=path_order, n_radial=n_radial, n_arc=n_arc,
                                nodes_per_segment=nodes_per_segment, r_min=r_min)
    else:
        batch = paths if isinstance(paths, PathBatch) else PathBatch.from_paths(list(paths))
        if np.any(batch.starts[:, 0] != z0):
            raise ValueError("every path must start at z0")
        _check_domain(domain, z0, batch.targets, p)
        nodes_per_segment = batch.nodes_per_segment
    values, scale, node_vals, d = _run(seq, batch, z0, n_max, nodes_per_segment, keep_nodes)
    p.check_range(np.abs(d.nodes))
    refinement = None
    if refine:
        fine, fscale, _, _ = _run(seq, batch, z0, n_max, 2 * nodes_per_segment, False)
        depth = np.arange(n_max + 1)[:, None, None] + 1
        floor = 10 * EPS * depth * np.maximum(scale, fscale)
        refinement = np.maximum(np.abs(fine - values), floor)
        values = fine
    return FormalPowerTable(z0, n_max, batch.targets.copy(), values, p, refinement,
                            node_vals, d.nodes if keep_nodes else None)


def formal_power_function(seq: GeneratingPairSeq, z0, n: int, a: complex = 1.0, **kwargs):
    """``z -> Z^(n)(a, z0; z)`` as a vectorised callable (one path per point)."""
    z0 = as_complex(z0)

    def W(z):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=complex)
        at_center = flat == z0
        out[at_center] = complex(a) if n == 0 else 0.0
        rest = ~at_center
        if np.any(rest):
            tab = build_formal_powers(seq, z0, n, flat[rest], **kwargs)
            out[rest] = tab.power(n, a)
        return out.reshape(z.shape)

    return W


def transverse_basis(p: RadialProfile, z0, n_max: int, points, **kwargs) -> np.ndarray:
    """Real design columns ``Re Z^(n)(1|i) / sqrt(eps)`` evaluated at ``points``."""
    seq = transverse_sequence(p)
    return build_formal_powers(seq, z0, n_max, points, **kwargs).basis_columns()


# ---------------------------------------------------------------------------
# conjugate reconstruction and fields
# ---------------------------------------------------------------------------


def zbar_derivative(u: Callable[[np.ndarray], np.ndarray], z, h: float) -> np.ndarray:
    """``u_zbar = (u_x + i u_y) / 2`` by central differences of step ``h``."""
    z = np.asarray(z, dtype=complex)
    ux = (u(z + h) - u(z - h)) / (2 * h)
    uy = (u(z + 1j * h) - u(z - 1j * h)) / (2 * h)
    return 0.5 * (np.asarray(ux) + 1j * np.asarray(uy))


@dataclass(frozen=True, eq=False)
class ConjugateFunction:
    """``v = A-bar(i eps u_zbar)``: a callable real function with ``v(z0) = c``."""

    u: Callable[[np.ndarray], np.ndarray]
    profile: RadialProfile
    domain: Domain
    z0: complex
    c: float
    u_zbar: Callable[[np.ndarray], np.ndarray]
    nodes: int = 32
    fd_step: float | None = None  # set when u_zbar comes from central differences

    def integrand(self, z: np.ndarray) -> np.ndarray:
        return 1j * eval_profile(self.profile, np.abs(z)) * self.u_zbar(z)

    def along(self, vertices: np.ndarray) -> np.ndarray:
        """``2 Re int conj(Phi) dzeta + c`` along polylines with vertex array ``(T, V)``."""
        starts, ends = vertices[:, :-1], vertices[:, 1:]
        d = discretize(starts, ends, panel_rule("gauss-legendre", self.nodes))
        vals = np.conj(self.integrand(d.nodes))
        return 2 * d.total(vals).real + self.c

    def paths(self, z: np.ndarray, kind: str) -> np.ndarray:
        z0 = self.z0
        if kind == "vertical-first":
            corner = z0.real + 1j * z.imag
        elif kind == "horizontal-first":
            corner = z.real + 1j * z0.imag
        elif kind == "straight":
            corner = 0.5 * (z0 + z)
        else:
            raise ValueError(kind)
        return np.column_stack([np.full(z.shape, z0), corner, z])

    def __call__(self, z, *, kind: str | None = None):
        scalar = np.ndim(z) == 0
        zz = as_complex_array(z).ravel()
        if kind is None:
            kind = "vertical-first" if self.domain.is_convex else "straight"
        if kind == "straight" and not self.domain.is_convex:
            mids = zz[:, None] * np.linspace(0, 1, 33) + self.z0 * (1 - np.linspace(0, 1, 33))
            if not np.all(self.domain.contains(mids.ravel(), closed=True)):
                raise DomainError("straight path from z0 leaves the non-convex domain; supply waypoints")
        out = self.along(self.paths(zz, kind))
        return float(out[0]) if scalar else out

    def path_disagreement(self, z) -> np.ndarray:
        zz = as_complex_array(z).ravel()
        return np.abs(self(zz, kind="vertical-first") - self(zz, kind="horizontal-first"))

    def error_estimate(self, z) -> float:
        """Absolute accuracy of ``v`` at ``z``: path disagreement, or the roundoff
        that central differences of step ``fd_step`` inject into ``u_zbar``, whichever is larger."""
        zz = as_complex_array(z).ravel()
        est = float(self.path_disagreement(zz).max())
        if self.fd_step is not None:
            u_scale = float(np.abs(np.asarray(self.u(zz))).max())
            eps_max = float(eval_profile(self.profile, np.abs(zz)).max())
            est = max(est, EPS * u_scale * eps_max * self.domain.diameter / self.fd_step)
        return est


def reconstruct_conjugate(u: Callable[[np.ndarray], np.ndarray], p: RadialProfile, domain: Domain,
                          z0=None, c: float = 0.0, *, u_zbar: Callable | None = None, h: float | None = None,
                          check_points=None, rtol: float = 1e-6) -> ConjugateFunction:
    """Return ``v`` with ``v(z0) = c`` making ``u + iv`` an ``eps``-analytic function.

    ``u_zbar`` may be supplied exactly; otherwise central differences with
    ``h = 1e-5 * diameter`` are used. When ``check_points`` is given the two
    axis-parallel paths are compared there and a :class:`PathDependenceError`
    is raised if they disagree by more than ``rtol`` relative to ``max |v|``.
    """
    z0 = domain.centroid if z0 is None else as_complex(z0)
    if not domain.contains([z0], closed=True)[0]:
        raise DomainError("z0 must lie in the domain")
    step = None
    if u_zbar is None:
        step = h if h is not None else 1e-5 * domain.diameter
        u_zbar = lambda z: zbar_derivative(u, z, step)  # noqa: E731
    v = ConjugateFunction(u, p, domain, z0, float(c), u_zbar, fd_step=step)
    if check_points is not None:
        pts = as_complex_array(check_points)
        gap = v.path_disagreement(pts)
        scale = max(np.abs(v(pts) - v.c).max(), 1.0)
        if gap.max() > rtol * scale:
            raise PathDependenceError(
                f"conjugate depends on the path (gap {gap.max():.3g}); u does not solve div(eps grad u) = 0"
            )
    return v


def field_from_transverse(u_gradient) -> tuple:
    """``(E1, E2)`` from a gradient given as ``u_x + i u_y``."""
    g = np.asarray(u_gradient, dtype=complex)
    if g.ndim == 0:
        return float(g.real), float(g.imag)
    return g.real, g.imag


def gradient_fd(u: Callable[[np.ndarray], np.ndarray], z, h: float) -> np.ndarray:
    """``u_x + i u_y`` by central differences."""
    return 2 * zbar_derivative(u, z, h)
