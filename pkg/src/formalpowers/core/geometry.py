"""Domains, integration paths and the log-polar path family."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from formalpowers.core.quadrature import DEFAULT_NODES, RULES
from formalpowers.errors import ConfigError, DomainError, PathError

DOMAIN_KINDS = ("rectangle", "disk", "polygon")


def as_complex(p) -> complex:
    """Accept ``complex``, a real, or an ``(x, y)`` pair."""
    if isinstance(p, (complex, float, int, np.number)):
        z = complex(p)
    else:
        x, y = p
        z = complex(float(x), float(y))
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite point {z}")
    return z


def as_complex_array(points) -> np.ndarray:
    arr = np.asarray(points)
    if np.iscomplexobj(arr) or arr.ndim <= 1:
        out = np.atleast_1d(arr.astype(complex))
    elif arr.shape[-1] == 2:
        out = arr[..., 0] + 1j * arr[..., 1]
    else:
        raise ValueError("points must be complex numbers or (x, y) pairs")
    if not np.all(np.isfinite(out)):
        raise DomainError("non-finite point")
    return out


def segment_origin_distance(a, b) -> np.ndarray:
    """Distance from 0 to each straight segment ``a -> b`` (vectorised)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    d = b - a
    dd = np.abs(d) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(dd > 0, -np.real(np.conj(a) * d) / np.where(dd > 0, dd, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.abs(a + t * d)


@dataclass(frozen=True)
class PathSpec:
    """Polyline ``start -> vertices[0] -> ... -> vertices[-1]``.

    Rejected at construction when consecutive points coincide or any segment
    passes within ``r_min`` of the origin.
    """

    start: complex
    vertices: tuple[complex, ...]
    nodes_per_segment: int = DEFAULT_NODES
    rule: str = "gauss-legendre"
    r_min: float = 1e-6

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", as_complex(self.start))
        object.__setattr__(self, "vertices", tuple(as_complex(v) for v in self.vertices))
        if not self.vertices:
            raise PathError("a path needs at least one vertex after its start")
        if self.rule not in RULES:
            raise PathError(f"unknown rule {self.rule!r}")
        if self.nodes_per_segment < 1:
            raise PathError("nodes_per_segment must be positive")
        a, b = self.segment_arrays()
        if np.any(a == b):
            raise PathError("consecutive path vertices must be distinct")
        dist = segment_origin_distance(a, b)
        if np.any(dist < self.r_min):
            raise PathError(f"path passes within {float(dist.min()):.3g} of the origin (r_min={self.r_min:g})")

    @property
    def end(self) -> complex:
        return self.vertices[-1]

    def segment_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        pts = np.array((self.start,) + self.vertices, dtype=complex)
        return pts[None, :-1], pts[None, 1:]

    def length(self) -> float:
        a, b = self.segment_arrays()
        return float(np.abs(b - a).sum())


@dataclass(frozen=True)
class PathBatch:
    """``T`` polylines with a common number of segments, stored as ``(T, S)`` arrays.

    Zero-length segments are allowed here (they integrate to zero), which is
    what lets every log-polar path in a batch share one layout.
    """

    starts: np.ndarray
    ends: np.ndarray
    nodes_per_segment: int = DEFAULT_NODES
    rule: str = "gauss-legendre"

    @property
    def targets(self) -> np.ndarray:
        return self.ends[:, -1]

    def check_origin(self, r_min: float) -> None:
        dist = segment_origin_distance(self.starts, self.ends)
        nonzero = self.starts != self.ends
        if np.any(nonzero & (dist < r_min)):
            raise PathError(f"a path passes within {float(dist[nonzero].min()):.3g} of the origin")

    @classmethod
    def from_paths(cls, paths: Sequence[PathSpec]) -> PathBatch:
        if not paths:
            raise PathError("empty path list")
        nseg = {len(p.vertices) for p in paths}
        rules = {(p.rule, p.nodes_per_segment) for p in paths}
        if len(nseg) != 1 or len(rules) != 1:
            raise PathError("paths in one batch must share segment count and rule")
        a = np.concatenate([p.segment_arrays()[0] for p in paths])
        b = np.concatenate([p.segment_arrays()[1] for p in paths])
        rule, k = rules.pop()
        return cls(a, b, k, rule)


def _wrap_angle(d):
    return (np.asarray(d) + np.pi) % (2 * np.pi) - np.pi


def log_polar_batch(z0: complex, targets, *, order: str = "radial-first", n_radial: int = 4,
                    n_arc: int = 8, nodes_per_segment: int = DEFAULT_NODES,
                    rule: str = "gauss-legendre", r_min: float = 1e-6) -> PathBatch:
    """Log-polar paths from ``z0`` to each target.

    ``radial-first`` runs along the ray through ``z0`` to radius ``|z|`` and
    then along the circle of that radius (as ``n_arc`` chords) to ``z``;
    ``arc-first`` does the circle at radius ``|z0|`` first. The swept angle is
    the principal difference ``arg z - arg z0`` in ``(-pi, pi]``, so every path
    stays in the plane slit along the ray opposite ``z0`` and ``arg`` is
    continuous along it.
    """
    z0 = as_complex(z0)
    z = as_complex_array(targets).ravel()
    r0, th0 = abs(z0), math.atan2(z0.imag, z0.real)
    if r0 < r_min:
        raise PathError("path start lies at the origin")
    r = np.abs(z)
    if np.any(r < r_min):
        raise PathError("a target lies within r_min of the origin")
    dth = _wrap_angle(np.angle(z) - th0)
    rad_frac = np.arange(n_radial + 1) / n_radial
    arc_frac = np.arange(n_arc + 1) / n_arc
    if order == "radial-first":
        radial = (r0 + (r - r0)[:, None] * rad_frac) * np.exp(1j * th0)
        arc = r[:, None] * np.exp(1j * (th0 + dth[:, None] * arc_frac))
        pts = np.concatenate([radial, arc[:, 1:]], axis=1)
    elif order == "arc-first":
        arc = r0 * np.exp(1j * (th0 + dth[:, None] * arc_frac))
        radial = (r0 + (r - r0)[:, None] * rad_frac) * np.exp(1j * (th0 + dth[:, None]))
        pts = np.concatenate([arc, radial[:, 1:]], axis=1)
    else:
        raise PathError(f"unknown path order {order!r}")
    # pin the endpoint exactly; exp/cos roundoff would otherwise move it by an ulp
    pts[:, -1] = z
    batch = PathBatch(pts[:, :-1], pts[:, 1:], nodes_per_segment, rule)
    batch.check_origin(r_min)
    return batch


def log_polar_path(z0: complex, z: complex, **kwargs: Any) -> PathSpec:
    """Single log-polar path as a :class:`PathSpec`, with degenerate segments dropped."""
    order = kwargs.pop("order", "radial-first")
    n_radial = kwargs.pop("n_radial", 4)
    n_arc = kwargs.pop("n_arc", 8)
    b = log_polar_batch(z0, [z], order=order, n_radial=n_radial, n_arc=n_arc,
                        r_min=kwargs.get("r_min", 1e-6))
    pts = [complex(b.starts[0, 0])]
    for v in b.ends[0]:
        if complex(v) != pts[-1]:
            pts.append(complex(v))
    if len(pts) == 1:
        raise PathError("target coincides with the path start")
    return PathSpec(pts[0], tuple(pts[1:]), **kwargs)


@dataclass(frozen=True)
class Domain:
    """Bounded simply connected region: rectangle, disk or polygon.

    ``params``: rectangle ``(xmin, xmax, ymin, ymax)``; disk ``(cx, cy, radius)``;
    polygon: flat ``(x0, y0, x1, y1, ...)`` counter-clockwise or clockwise.
    """

    kind: str
    params: tuple[float, ...]
    _poly: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in DOMAIN_KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}")
        prm = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", prm)
        if not all(math.isfinite(v) for v in prm):
            raise DomainError("domain parameters must be finite")
        if self.kind == "rectangle":
            if len(prm) != 4 or not (prm[0] < prm[1] and prm[2] < prm[3]):
                raise DomainError("rectangle needs xmin < xmax, ymin < ymax")
            xa, xb, ya, yb = prm
            poly = np.array([xa + 1j * ya, xb + 1j * ya, xb + 1j * yb, xa + 1j * yb])
        elif self.kind == "disk":
            if len(prm) != 3 or prm[2] <= 0:
                raise DomainError("disk needs (cx, cy, radius > 0)")
            poly = None
        else:
            if len(prm) < 6 or len(prm) % 2:
                raise DomainError("polygon needs at least three (x, y) vertices")
            poly = np.array(prm[0::2]) + 1j * np.array(prm[1::2])
            if _signed_area(poly) == 0:
                raise DomainError("degenerate polygon")
            if _self_intersecting(poly):
                raise DomainError("polygon must be simple")
        object.__setattr__(self, "_poly", poly)

    @classmethod
    def rectangle(cls, xmin: float, xmax: float, ymin: float, ymax: float) -> Domain:
        return cls("rectangle", (xmin, xmax, ymin, ymax))

    @classmethod
    def disk(cls, center, radius: float) -> Domain:
        c = as_complex(center)
        return cls("disk", (c.real, c.imag, radius))

    @classmethod
    def polygon(cls, vertices) -> Domain:
        v = as_complex_array(vertices)
        return cls("polygon", tuple(np.column_stack([v.real, v.imag]).ravel()))

    # -- geometry ---------------------------------------------------------

    @property
    def centroid(self) -> complex:
        if self.kind == "disk":
            return complex(self.params[0], self.params[1])
        v = self._poly
        w = np.roll(v, -1)
        cross = v.real * w.imag - w.real * v.imag
        area = cross.sum() / 2
        cx = ((v.real + w.real) * cross).sum() / (6 * area)
        cy = ((v.imag + w.imag) * cross).sum() / (6 * area)
        return complex(cx, cy)

    @property
    def diameter(self) -> float:
        if self.kind == "disk":
            return 2 * self.params[2]
        v = self._poly
        return float(np.abs(v[:, None] - v[None, :]).max())

    @property
    def is_convex(self) -> bool:
        if self.kind in ("disk", "rectangle"):
            return True
        v = self._poly
        e = np.roll(v, -1) - v
        cross = (e * np.conj(np.roll(e, -1))).imag
        return bool(np.all(cross >= 0) or np.all(cross <= 0))

    @property
    def x_min(self) -> float:
        if self.kind == "disk":
            return self.params[0] - self.params[2]
        return float(self._poly.real.min())

    @property
    def x_max(self) -> float:
        if self.kind == "disk":
            return self.params[0] + self.params[2]
        return float(self._poly.real.max())

    def radius_bounds(self) -> tuple[float, float]:
        """``(min |z|, max |z|)`` over the closure."""
        if self.kind == "disk":
            c = abs(complex(self.params[0], self.params[1]))
            R = self.params[2]
            return max(c - R, 0.0), c + R
        v = self._poly
        rmax = float(np.abs(v).max())
        if self.contains(0j, closed=True)[0]:
            return 0.0, rmax
        rmin = float(segment_origin_distance(v, np.roll(v, -1)).min())
        return rmin, rmax

    def contains(self, points, *, closed: bool = False) -> np.ndarray:
        z = as_complex_array(points)
        if self.kind == "disk":
            c = complex(self.params[0], self.params[1])
            d = np.abs(z - c)
            return d <= self.params[2] if closed else d < self.params[2]
        if self.kind == "rectangle":
            xa, xb, ya, yb = self.params
            if closed:
                return (z.real >= xa) & (z.real <= xb) & (z.imag >= ya) & (z.imag <= yb)
            return (z.real > xa) & (z.real < xb) & (z.imag > ya) & (z.imag < yb)
        inside = _point_in_polygon(z, self._poly)
        on_edge = self.boundary_distance(z) <= 1e-12 * self.diameter
        return (inside | on_edge) if closed else (inside & ~on_edge)

    def boundary_distance(self, points) -> np.ndarray:
        z = as_complex_array(points)
        if self.kind == "disk":
            c = complex(self.params[0], self.params[1])
            return np.abs(np.abs(z - c) - self.params[2])
        v = self._poly
        a, b = v[None, :], np.roll(v, -1)[None, :]
        return segment_origin_distance(a - z[:, None], b - z[:, None]).min(axis=1)

    def perimeter(self) -> float:
        if self.kind == "disk":
            return 2 * math.pi * self.params[2]
        v = self._poly
        return float(np.abs(np.roll(v, -1) - v).sum())

    def boundary_points(self, n: int) -> np.ndarray:
        """``n`` points equally spaced by arc length around the boundary."""
        if n <= 0:
            raise ValueError("need a positive number of boundary points")
        if self.kind == "disk":
            c = complex(self.params[0], self.params[1])
            t = 2 * np.pi * (np.arange(n) + 0.5) / n
            return c + self.params[2] * np.exp(1j * t)
        v = self._poly
        w = np.roll(v, -1)
        seg = np.abs(w - v)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        s = cum[-1] * (np.arange(n) + 0.5) / n
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
        frac = (s - cum[idx]) / seg[idx]
        return v[idx] + frac * (w[idx] - v[idx])

    def interior_grid(self, n: int, margin: float = 0.1) -> np.ndarray:
        """Points of an ``n x n`` lattice over the bounding box that lie inside, away from the boundary."""
        if self.kind == "disk":
            cx, cy, R = self.params
            xa, xb, ya, yb = cx - R, cx + R, cy - R, cy + R
        else:
            xa, xb = self._poly.real.min(), self._poly.real.max()
            ya, yb = self._poly.imag.min(), self._poly.imag.max()
        X, Y = np.meshgrid(np.linspace(xa, xb, n), np.linspace(ya, yb, n))
        z = (X + 1j * Y).ravel()
        keep = self.contains(z) & (self.boundary_distance(z) >= margin * self.diameter / 2)
        return z[keep]

    # -- use-specific validation -----------------------------------------

    def validate_transverse(self) -> None:
        rmin, _ = self.radius_bounds()
        if rmin <= 0:
            raise DomainError("transverse domains must not contain the origin in their closure")
        if self.kind == "polygon" and not self.is_convex:
            c = self.centroid
            th = math.atan2(c.imag, c.real)
            v = self._poly
            ang = np.unwrap(np.angle(v * np.exp(-1j * th)))
            if ang.max() - ang.min() >= np.pi:
                raise DomainError("non-convex polygon winds too far around the origin for log-polar paths")

    def validate_meridional(self) -> None:
        if self.x_min <= 0:
            raise DomainError("meridional domains must lie in the half-plane x > 0")

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "rectangle":
            xa, xb, ya, yb = self.params
            return {"kind": "rectangle", "x": [xa, xb], "y": [ya, yb]}
        if self.kind == "disk":
            return {"kind": "disk", "center": list(self.params[:2]), "radius": self.params[2]}
        return {"kind": "polygon", "vertices": [[v.real, v.imag] for v in self._poly]}


def domain_from_dict(doc: Mapping[str, Any]) -> Domain:
    try:
        kind = doc["kind"]
        if kind == "rectangle":
            (xa, xb), (ya, yb) = doc["x"], doc["y"]
            return Domain.rectangle(xa, xb, ya, yb)
        if kind == "disk":
            return Domain.disk(doc["center"], doc["radius"])
        if kind == "polygon":
            return Domain.polygon(doc["vertices"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from None
    raise ConfigError(f"domain.kind: unknown kind {kind!r}")


def _signed_area(v: np.ndarray) -> float:
    w = np.roll(v, -1)
    return float((v.real * w.imag - w.real * v.imag).sum() / 2)


def _point_in_polygon(z: np.ndarray, v: np.ndarray) -> np.ndarray:
    x, y = z.real[:, None], z.imag[:, None]
    xa, ya = v.real[None, :], v.imag[None, :]
    w = np.roll(v, -1)
    xb, yb = w.real[None, :], w.imag[None, :]
    cond = (ya > y) != (yb > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = xa + (y - ya) * (xb - xa) / (yb - ya)
    crossings = cond & (x < xi)
    return (crossings.sum(axis=1) % 2) == 1


def _self_intersecting(v: np.ndarray) -> bool:
    n = len(v)
    a, b = v, np.roll(v, -1)

    def orient(p, q, r):
        return np.sign(((q - p) * np.conj(r - p)).imag)

    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if (orient(a[i], b[i], a[j]) != orient(a[i], b[i], b[j])
                    and orient(a[j], b[j], a[i]) != orient(a[j], b[j], b[i])):
                return True
    return False
