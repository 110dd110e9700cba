"""Composite panel quadrature along straight segments.

Every segment of a path is split into panels. On each panel a rule supplies
reference nodes ``t`` in ``[-1, 1]``, weights ``w`` and an integration
matrix ``S`` with ``S[i, j] = int_{-1}^{t_i} L_j(s) ds`` (``L_j`` the
Lagrange basis on the nodes). ``S`` turns node samples into the running
integral at every node, which is what the formal-power recursion needs:
each level is integrated up to every node of the path, not just to its end.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import legendre

from formalpowers.errors import EvaluationError

RULES = ("gauss-legendre", "simpson")
DEFAULT_NODES = 16
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    node_count: int
    refinement_estimate: float


@dataclass(frozen=True)
class PanelRule:
    """Reference panel rule on ``[-1, 1]``, repeated ``subpanels`` times per segment."""

    nodes: np.ndarray
    weights: np.ndarray
    integration: np.ndarray
    subpanels: int
    coeff_map: np.ndarray  # node values -> Legendre coefficients of the interpolant

    @property
    def points_per_segment(self) -> int:
        return self.subpanels * self.nodes.size

    def running_row(self, t) -> np.ndarray:
        """Rows of ``int_{-1}^{t} L_j(s) ds`` for arbitrary ``t`` in ``[-1, 1]``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = self.nodes.size
        vint = np.empty((t.size, k))
        for n in range(k):
            e = np.zeros(k)
            e[n] = 1.0
            vint[:, n] = legendre.legval(t, legendre.legint(e, lbnd=-1))
        return vint @ self.coeff_map


@lru_cache(maxsize=None)
def _reference(kind: str, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if kind == "gauss-legendre":
        t, w = legendre.leggauss(k)
    else:
        t = np.linspace(-1.0, 1.0, k)
        w = np.array([1.0, 4.0, 1.0]) / 3.0
    vander = legendre.legvander(t, k - 1)
    coeff_map = np.linalg.inv(vander)
    vint = np.empty((k, k))
    for n in range(k):
        e = np.zeros(k)
        e[n] = 1.0
        vint[:, n] = legendre.legval(t, legendre.legint(e, lbnd=-1))
    S = vint @ coeff_map
    for arr in (t, w, S, coeff_map):
        arr.setflags(write=False)
    return t, w, S, coeff_map


def panel_rule(rule: str = "gauss-legendre", nodes_per_segment: int = DEFAULT_NODES) -> PanelRule:
    """Build the per-segment rule.

    ``gauss-legendre`` uses one panel of ``nodes_per_segment`` nodes.
    ``simpson`` uses ``nodes_per_segment // 2`` three-point Simpson panels,
    so doubling ``nodes_per_segment`` doubles the panel count in both cases.
    """
    if rule not in RULES:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    if nodes_per_segment < 1:
        raise ValueError("nodes_per_segment must be positive")
    if rule == "gauss-legendre":
        t, w, S, cmap = _reference(rule, nodes_per_segment)
        return PanelRule(t, w, S, 1, cmap)
    t, w, S, cmap = _reference(rule, 3)
    return PanelRule(t, w, S, max(1, nodes_per_segment // 2), cmap)


@dataclass(frozen=True)
class Discretization:
    """Quadrature nodes for a batch of paths sharing one segment layout.

    Arrays have leading shape ``(T, S)`` for ``T`` paths of ``S`` segments;
    node arrays add ``(P, k)`` for ``P`` subpanels of ``k`` nodes each.
    """

    rule: PanelRule
    panel_start: np.ndarray  # (T, S, P) complex
    half_length: np.ndarray  # (T, S, P) complex, (b - a) / 2 per panel
    nodes: np.ndarray  # (T, S, P, k) complex

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes.shape

    @property
    def node_count(self) -> int:
        return int(np.prod(self.nodes.shape[1:]))

    def running(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Running integral ``int_start^node w dzeta`` at every node and at every path end.

        ``values`` carries optional extra leading axes before ``(T, S, P, k)``.
        Returns ``(at_nodes, at_end)`` with ``at_end`` of shape ``values.shape[:-3]``.
        """
        h = self.half_length
        inside = (values @ self.rule.integration.T) * h[..., None]
        panel_tot = (values @ self.rule.weights) * h
        lead = panel_tot.shape[:-2]
        flat = panel_tot.reshape(lead + (-1,))
        csum = np.cumsum(flat, axis=-1)
        before = np.concatenate([np.zeros(lead + (1,), dtype=csum.dtype), csum[..., :-1]], axis=-1)
        before = before.reshape(panel_tot.shape)
        return before[..., None] + inside, csum[..., -1]

    def total(self, values: np.ndarray) -> np.ndarray:
        return np.sum((values @ self.rule.weights) * self.half_length, axis=(-1, -2))

    def roundoff_scale(self, values: np.ndarray) -> np.ndarray:
        """``sum |w_i f_i|``, the magnitude roundoff in a quadrature sum scales with."""
        return np.sum((np.abs(values) @ self.rule.weights) * np.abs(self.half_length), axis=(-1, -2))


def discretize(starts, ends, rule: PanelRule) -> Discretization:
    """Place panel nodes on straight segments ``starts[..., s] -> ends[..., s]``."""
    a = np.atleast_2d(np.asarray(starts, dtype=complex))
    b = np.atleast_2d(np.asarray(ends, dtype=complex))
    P = rule.subpanels
    frac = np.arange(P + 1) / P
    edges = a[..., None] + (b - a)[..., None] * frac  # (T, S, P+1)
    pa, pb = edges[..., :-1], edges[..., 1:]
    mid = 0.5 * (pa + pb)
    half = 0.5 * (pb - pa)
    nodes = mid[..., None] + half[..., None] * rule.nodes
    return Discretization(rule, pa, half, nodes)


def _checked(values, where: str) -> np.ndarray:
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise EvaluationError(f"non-finite integrand value at a quadrature node ({where})")
    return values


def line_integral(w: Callable[[np.ndarray], np.ndarray], path) -> QuadratureResult:
    """Integrate ``w(zeta) dzeta`` along a :class:`~formalpowers.core.geometry.PathSpec`.

    The refinement estimate is the change produced by doubling the nodes per
    segment, floored at the roundoff level of the finer sum.
    """
    coarse_rule = panel_rule(path.rule, path.nodes_per_segment)
    fine_rule = panel_rule(path.rule, 2 * path.nodes_per_segment)
    a, b = path.segment_arrays()
    d0 = discretize(a, b, coarse_rule)
    d1 = discretize(a, b, fine_rule)
    v0 = _checked(w(d0.nodes), "coarse")
    v1 = _checked(w(d1.nodes), "fine")
    q0 = complex(d0.total(v0)[0])
    q1 = complex(d1.total(v1)[0])
    floor = 10 * EPS * float(d1.roundoff_scale(v1)[0])
    return QuadratureResult(q1, d1.node_count, float(max(abs(q1 - q0), floor)))


def cumulative_integral(g: Callable[[np.ndarray], np.ndarray], x0: float, grid, *,
                        rule: str = "gauss-legendre", nodes_per_segment: int = DEFAULT_NODES) -> np.ndarray:
    """Values of ``int_{x0}^{grid[j]} g(t) dt`` for every grid point.

    ``grid`` must start at ``x0`` and be strictly monotone (either direction).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-D sequence")
    if grid[0] != x0:
        raise ValueError("grid must start at x0")
    if grid.size == 1:
        return np.zeros(1)
    steps = np.diff(grid)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("grid must be strictly monotone")
    d = discretize(grid[:-1], grid[1:], panel_rule(rule, nodes_per_segment))
    vals = _checked(np.asarray(g(d.nodes.real), dtype=float), "cumulative_integral")
    seg = np.sum((vals @ d.rule.weights) * d.half_length.real, axis=-1)[0]
    return np.concatenate([[0.0], np.cumsum(seg)])
