"""Formal powers for the meridional field.

In the ``(r, x3)`` half-plane the field is an ``x*eps(x)``-analytic function
``w = u + iv`` with ``u = E3`` and ``v = r*eps*Er``. Its formal powers are
binomial sums of the alternating integrals ``X^(n)``, ``Xt^(n)`` against
``1/(t eps(t))`` and ``t eps(t)``.

The integrals are accumulated panel by panel on Gauss-Legendre nodes between
consecutive grid breakpoints; evaluation between breakpoints integrates the
panel interpolant up to the query point, so off-grid values carry the same
accuracy as the quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from formalpowers.core.geometry import as_complex, as_complex_array
from formalpowers.core.profile import RadialProfile, eval_profile
from formalpowers.core.quadrature import DEFAULT_NODES, panel_rule
from formalpowers.errors import DomainError

N_CAP = 60


def _binomials(n: int) -> np.ndarray:
    row = np.ones(1)
    for _ in range(n):
        row = np.concatenate([[1.0], row[:-1] + row[1:], [1.0]])
    return row


def default_grid(x_lo: float, x_hi: float, x0: float, panels: int = 32) -> np.ndarray:
    grid = np.linspace(x_lo, x_hi, panels + 1)
    return np.union1d(grid, [x0])


@dataclass(frozen=True, eq=False)
class XSequence:
    """``X^(n)(x0, x)`` and ``Xt^(n)(x0, x)`` for ``n <= n_max`` on a breakpoint grid.

    ``X`` and ``Xt`` have shape ``(n_max + 1, len(grid))``; column ``i0`` (where
    ``grid[i0] == x0``) is zero for ``n >= 1`` and row 0 is identically one.
    """

    x0: float
    grid: np.ndarray
    n_max: int
    X: np.ndarray
    Xt: np.ndarray
    profile: RadialProfile
    i0: int
    _start: np.ndarray = field(repr=False)  # (2, n_max+1, panels) value at each panel's integration start
    _integrand: np.ndarray = field(repr=False)  # (2, n_max+1, panels, k); level n integrand for n >= 1
    _half: np.ndarray = field(repr=False)  # (panels,) signed half length, oriented away from x0
    _mid: np.ndarray = field(repr=False)
    _nodes_per_panel: int = DEFAULT_NODES

    @property
    def x_range(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    def values(self, n: int, x, tilde: bool = False) -> np.ndarray:
        """``X^(n)`` (or ``Xt^(n)``) at arbitrary ``x`` inside the grid."""
        if not 0 <= n <= self.n_max:
            raise ValueError(f"n={n} outside 0..{self.n_max}")
        x = np.asarray(x, dtype=float)
        lo, hi = self.x_range
        if np.any(x < lo) or np.any(x > hi):
            raise DomainError(f"x outside the X-sequence grid [{lo:g}, {hi:g}]")
        if n == 0:
            return np.ones(x.shape)
        flat = x.ravel()
        j = np.clip(np.searchsorted(self.grid, flat, side="right") - 1, 0, self.grid.size - 2)
        t = np.clip((flat - self._mid[j]) / self._half[j], -1.0, 1.0)
        rows = panel_rule("gauss-legendre", self._nodes_per_panel).running_row(t)
        which = 1 if tilde else 0
        integ = self._integrand[which, n, j]
        out = self._start[which, n, j] + self._half[j] * np.einsum("qk,qk->q", rows, integ)
        return out.reshape(x.shape)


def build_x_sequence(p: RadialProfile, x0: float, grid, n_max: int, *,
                     nodes_per_panel: int = DEFAULT_NODES) -> XSequence:
    """Fill ``X`` and ``Xt`` by alternating integration against ``1/sigma`` and ``sigma``.

    ``sigma(t) = t*eps(t)``. ``X`` uses ``1/sigma`` on odd steps and ``sigma`` on
    even steps; ``Xt`` the other way round. Each step multiplies by ``n``.
    ``grid`` is a sorted breakpoint list; ``x0`` is inserted if absent.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if n_max > N_CAP:
        raise ValueError(f"n_max is capped at {N_CAP}")
    if not x0 > 0:
        raise DomainError("x0 must be positive: 1/(t eps(t)) is singular on the axis")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    grid = np.union1d(grid, [x0])
    if grid[0] <= 0:
        raise DomainError("grid must lie in x > 0")
    if grid.size < 2:
        raise ValueError("grid needs at least two breakpoints")
    i0 = int(np.searchsorted(grid, x0))
    rule = panel_rule("gauss-legendre", nodes_per_panel)
    npan = grid.size - 1
    # panels right of x0 run left to right, panels left of it run right to left
    right = np.arange(npan) >= i0
    a = np.where(right, grid[:-1], grid[1:])
    b = np.where(right, grid[1:], grid[:-1])
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * rule.nodes
    sigma = nodes * eval_profile(p, nodes)
    inv_sigma = 1.0 / sigma

    start = np.zeros((2, n_max + 1, npan))
    integrand = np.zeros((2, n_max + 1, npan, rule.nodes.size))
    X = np.zeros((2, n_max + 1, grid.size))
    start[:, 0] = 1.0
    X[:, 0] = 1.0
    prev_nodes = np.ones((2, npan, rule.nodes.size))
    order_right = np.arange(i0, npan)
    order_left = np.arange(i0 - 1, -1, -1)
    for n in range(1, n_max + 1):
        odd = n % 2 == 1
        weights = np.stack([inv_sigma, sigma] if odd else [sigma, inv_sigma])
        g = n * prev_nodes * weights
        integrand[:, n] = g
        totals = half * (g @ rule.weights)
        running = half[:, None] * np.einsum("ij,spj->spi", rule.integration, g)
        for s in range(2):
            acc = 0.0
            for j in order_right:
                start[s, n, j] = acc
                acc += totals[s, j]
                X[s, n, j + 1] = acc
            acc = 0.0
            for j in order_left:
                start[s, n, j] = acc
                acc += totals[s, j]
                X[s, n, j] = acc
        prev_nodes = start[:, n, :, None] + running
    return XSequence(float(x0), grid, n_max, X[0], X[1], p, i0, start, integrand, half, mid, nodes_per_panel)


def _sum_terms(xseq: XSequence, n: int, x: np.ndarray, dy: np.ndarray, tilde: bool) -> np.ndarray:
    binom = _binomials(n)
    out = np.zeros(x.shape, dtype=complex)
    iy = 1j * dy
    power = np.ones(x.shape, dtype=complex)
    for k in range(n + 1):
        out += binom[k] * xseq.values(n - k, x, tilde) * power
        power = power * iy
    return out


@dataclass(frozen=True)
class MeridionalPower:
    """``*Z^(n)(a, z0; .)`` bound to a precomputed :class:`XSequence`."""

    n: int
    a: complex
    z0: complex
    xseq: XSequence

    def __post_init__(self) -> None:
        if self.z0.real != self.xseq.x0:
            raise ValueError("z0.real must equal the X-sequence origin x0")
        if not 0 <= self.n <= self.xseq.n_max:
            raise ValueError(f"n={self.n} outside 0..{self.xseq.n_max}")

    def __call__(self, z):
        return eval_meridional_power(self.xseq, self.n, self.a, z, y0=self.z0.imag)


def eval_meridional_power(xseq: XSequence, n: int, a: complex, z, *, y0: float = 0.0):
    """Evaluate ``*Z^(n)(a' + i a'', z0; z)`` with ``z0 = x0 + i*y0``.

    Odd ``n`` pairs ``a'`` with ``X`` and ``a''`` with ``Xt``; even ``n`` swaps them.
    """
    if n > xseq.n_max or n < 0:
        raise ValueError(f"n={n} outside 0..{xseq.n_max}")
    scalar = np.ndim(z) == 0
    zz = as_complex_array(z)
    lo, hi = xseq.x_range
    if np.any(zz.real < lo) or np.any(zz.real > hi):
        raise DomainError(f"Re z outside the X-sequence grid [{lo:g}, {hi:g}]")
    a = complex(a)
    x, dy = zz.real, zz.imag - y0
    with_X = _sum_terms(xseq, n, x, dy, tilde=False)
    with_Xt = _sum_terms(xseq, n, x, dy, tilde=True)
    if n % 2:
        out = a.real * with_X + 1j * a.imag * with_Xt
    else:
        out = a.real * with_Xt + 1j * a.imag * with_X
    return complex(out[0]) if scalar else out


def meridional_powers(xseq: XSequence, z0, points, n_max: int | None = None) -> np.ndarray:
    """All ``*Z^(n)(1)`` and ``*Z^(n)(i)`` at ``points``: shape ``(n_max+1, 2, len(points))``."""
    z0 = as_complex(z0)
    if z0.real != xseq.x0:
        raise ValueError("z0.real must equal the X-sequence origin x0")
    n_max = xseq.n_max if n_max is None else n_max
    pts = as_complex_array(points)
    out = np.empty((n_max + 1, 2, pts.size), dtype=complex)
    for n in range(n_max + 1):
        out[n, 0] = eval_meridional_power(xseq, n, 1.0, pts, y0=z0.imag)
        out[n, 1] = eval_meridional_power(xseq, n, 1j, pts, y0=z0.imag)
    return out


def leading_term(n: int, a: complex, z0: complex, z, sigma0: float) -> np.ndarray:
    """Leading homogeneous part of ``*Z^(n)(a, z0; z)`` as ``z -> z0``.

    Equals ``a (z - z0)^n`` when ``sigma(x0) = 1``; otherwise each ``X^(j)``
    contributes ``(x - x0)^j`` scaled by ``sigma0^-1`` (odd ``j``) and
    ``Xt^(j)`` by ``sigma0`` (odd ``j``).
    """
    z = as_complex_array(z)
    dx, iy = z.real - z0.real, 1j * (z.imag - z0.imag)
    binom = _binomials(n)
    plain = np.zeros(z.shape, dtype=complex)
    tilde = np.zeros(z.shape, dtype=complex)
    for k in range(n + 1):
        j = n - k
        base = binom[k] * dx ** j * iy ** k
        plain += base * (sigma0 ** -1 if j % 2 else 1.0)
        tilde += base * (sigma0 if j % 2 else 1.0)
    a = complex(a)
    if n % 2:
        return a.real * plain + 1j * a.imag * tilde
    return a.real * tilde + 1j * a.imag * plain


def field_from_meridional(w, x, p: RadialProfile) -> tuple:
    """``(E_r, E_3)`` from ``w = u + iv`` with ``u = E3`` and ``v = x eps(x) E_r``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise DomainError("meridional fields need x > 0")
    w_arr = np.asarray(w, dtype=complex)
    e3 = w_arr.real
    er = w_arr.imag / (x_arr * eval_profile(p, x_arr))
    if np.ndim(w) == 0 and np.ndim(x) == 0:
        return float(er), float(e3)
    return er, e3
