"""Radial permittivity profiles.

A profile is a positive function of one real variable. The transverse
construction reads it as ``eps(r)`` with ``r = |z|``; the meridional one
reads the same object as ``eps(x)`` with ``x`` the distance to the axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from formalpowers.errors import DomainError, ProfileError

KINDS = ("constant", "power", "exponential", "reciprocal", "table")

_DEFAULT_RANGE = (1e-6, 1e6)


@dataclass(frozen=True)
class RadialProfile:
    """Permittivity ``eps`` as a function of a single radial variable.

    Parameters
    ----------
    kind:
        One of ``constant`` (``c``), ``power`` (``c * r**alpha``),
        ``exponential`` (``c * exp(alpha * r)``), ``reciprocal`` (``c / r``)
        or ``table`` (monotone piecewise-cubic through ``table``).
    params:
        ``(c,)`` or ``(c, alpha)`` depending on ``kind``; empty for tables.
    r_range:
        Closed validity interval ``[r_min, r_max]`` with ``r_min > 0``.
    table:
        ``(r, eps)`` pairs with strictly increasing abscissae.
    """

    kind: str
    params: tuple[float, ...] = ()
    r_range: tuple[float, float] = _DEFAULT_RANGE
    table: tuple[tuple[float, float], ...] | None = None
    _interp: Any = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ProfileError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        r_min, r_max = (float(v) for v in self.r_range)
        if self.kind == "table":
            if not self.table or len(self.table) < 2:
                raise ProfileError("table profile needs at least two (r, eps) points")
            pts = np.asarray(self.table, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2:
                raise ProfileError("table points must be (r, eps) pairs")
            if np.any(np.diff(pts[:, 0]) <= 0):
                raise ProfileError("table abscissae must be strictly increasing")
            if np.any(pts[:, 1] <= 0):
                raise ProfileError("table values must be positive")
            object.__setattr__(self, "table", tuple(map(tuple, pts.tolist())))
            object.__setattr__(self, "_interp", PchipInterpolator(pts[:, 0], pts[:, 1], extrapolate=False))
            if self.r_range == _DEFAULT_RANGE:
                r_min, r_max = float(pts[0, 0]), float(pts[-1, 0])
            if r_min < pts[0, 0] or r_max > pts[-1, 0]:
                raise ProfileError("validity range exceeds the tabulated abscissae")
        else:
            need = 2 if self.kind in ("power", "exponential") else 1
            if len(self.params) != need:
                raise ProfileError(f"{self.kind} profile takes {need} parameter(s), got {len(self.params)}")
            if self.params[0] <= 0:
                raise ProfileError("profile scale c must be positive")
        if not (0 < r_min < r_max) or not math.isfinite(r_max):
            raise ProfileError(f"invalid validity range [{r_min}, {r_max}]")
        object.__setattr__(self, "r_range", (r_min, r_max))

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c: float = 1.0, r_range: tuple[float, float] = _DEFAULT_RANGE) -> RadialProfile:
        return cls("constant", (c,), r_range)

    @classmethod
    def power(cls, c: float, alpha: float, r_range: tuple[float, float] = _DEFAULT_RANGE) -> RadialProfile:
        return cls("power", (c, alpha), r_range)

    @classmethod
    def exponential(cls, c: float, alpha: float, r_range: tuple[float, float] = (1e-6, 50.0)) -> RadialProfile:
        return cls("exponential", (c, alpha), r_range)

    @classmethod
    def reciprocal(cls, c: float = 1.0, r_range: tuple[float, float] = _DEFAULT_RANGE) -> RadialProfile:
        return cls("reciprocal", (c,), r_range)

    @classmethod
    def from_table(cls, points: Sequence[Sequence[float]], r_range: tuple[float, float] | None = None) -> RadialProfile:
        return cls("table", (), r_range or _DEFAULT_RANGE, tuple(tuple(p) for p in points))

    # -- evaluation -------------------------------------------------------

    @property
    def r_min(self) -> float:
        return self.r_range[0]

    @property
    def r_max(self) -> float:
        return self.r_range[1]

    def check_range(self, r) -> None:
        r = np.asarray(r, dtype=float)
        if r.size == 0:
            return
        lo, hi = self.r_range
        # one part in 1e12 of slack absorbs roundoff on path nodes that sit on the boundary
        slack = 1e-12 * hi
        if np.any(~np.isfinite(r)) or r.min() < lo - slack or r.max() > hi + slack:
            raise DomainError(
                f"radius outside profile range [{lo:g}, {hi:g}]: "
                f"min={float(np.nanmin(r)):g}, max={float(np.nanmax(r)):g}"
            )

    def __call__(self, r):
        return eval_profile(self, r)

    def sqrt(self, r):
        """``sqrt(eps(r))``, the weight ``f`` of the main Vekua equation."""
        return np.sqrt(eval_profile(self, r))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "range": list(self.r_range)}
        if self.kind == "table":
            out["points"] = [list(p) for p in self.table]
        else:
            out["c"] = self.params[0]
            if len(self.params) > 1:
                out["alpha"] = self.params[1]
        return out


def eval_profile(p: RadialProfile, r):
    """Evaluate ``eps(r)``; accepts scalars or arrays and preserves the shape."""
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    p.check_range(r)
    kind, prm = p.kind, p.params
    if kind == "constant":
        out = np.full(r.shape, prm[0])
    elif kind == "power":
        out = prm[0] * r ** prm[1]
    elif kind == "exponential":
        out = prm[0] * np.exp(prm[1] * r)
    elif kind == "reciprocal":
        out = prm[0] / r
    else:
        out = p._interp(np.clip(r, p.table[0][0], p.table[-1][0]))
    if np.any(~(out > 0)):
        raise ProfileError("profile evaluated to a non-positive or non-finite value")
    return float(out) if scalar else out


_PROFILE_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "c": {"type": "number", "exclusiveMinimum": 0},
        "alpha": {"type": "number"},
        "range": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "points": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            "minItems": 2,
        },
    },
    "additionalProperties": False,
}


def profile_from_dict(doc: Mapping[str, Any]) -> RadialProfile:
    """Build a profile from its JSON form.

    ``{"kind": "power", "c": 1.0, "alpha": 2.0, "range": [0.5, 3.0]}`` or
    ``{"kind": "table", "points": [[r, eps], ...]}``.
    """
    import jsonschema

    try:
        jsonschema.validate(dict(doc), _PROFILE_SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<profile>"
        raise ProfileError(f"profile.{loc}: {exc.message}") from None
    kind = doc["kind"]
    rng = tuple(doc["range"]) if "range" in doc else None
    if kind == "table":
        if "points" not in doc:
            raise ProfileError("table profile requires 'points'")
        return RadialProfile.from_table(doc["points"], rng)
    c = float(doc.get("c", 1.0))
    if kind in ("power", "exponential"):
        if "alpha" not in doc:
            raise ProfileError(f"{kind} profile requires 'alpha'")
        params: tuple[float, ...] = (c, float(doc["alpha"]))
    else:
        params = (c,)
    if rng is None:
        rng = (1e-6, 50.0) if kind == "exponential" else _DEFAULT_RANGE
    return RadialProfile(kind, params, rng)
