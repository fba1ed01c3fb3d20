"""Absolute correlation distance and its representation on the zero-mean sphere.

The distance between two samples is ``1 - |pearson(x, y)|``.  After centering
and normalizing, every sample becomes a unit vector orthogonal to
``(1, ..., 1)`` and the distance reduces to ``1 - |<u, v>|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, DomainError, ZeroVariance

__all__ = [
    "Sample",
    "CenteredUnit",
    "ZERO_VARIANCE_NORM",
    "center_and_normalize",
    "abs_corr_distance",
    "abs_corr_distance_unit",
    "projective_angle",
    "pairwise_matrix",
]

# Absolute, not scale-relative: a centered norm at or below this is "constant".
ZERO_VARIANCE_NORM = 1e-12
UNIT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Sample:
    """A raw data vector of length n >= 2 with finite entries."""

    values: np.ndarray
    id: Hashable | None = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise DomainError(f"sample {self.id!r} must be one-dimensional")
        if arr.size < 2:
            raise DomainError(f"sample {self.id!r} needs at least 2 entries, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"sample {self.id!r} contains NaN or infinite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class CenteredUnit:
    """Unit vector in the zero-mean hyperplane; the working object for distances."""

    values: np.ndarray
    source_id: Hashable | None = None
    _checked: bool = field(default=True, repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if self._checked:
            if arr.ndim != 1 or arr.size < 2:
                raise DomainError("centered unit vector must be 1-D with length >= 2")
            if abs(arr.mean()) > UNIT_TOL:
                raise DomainError(f"mean {arr.mean():.3g} is not zero")
            if abs(np.linalg.norm(arr) - 1.0) > UNIT_TOL:
                raise DomainError(f"norm {np.linalg.norm(arr):.17g} is not one")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size


SampleLike = Union[Sample, Sequence[float], np.ndarray]
UnitLike = Union[CenteredUnit, np.ndarray]


def _sample(x: Any) -> Sample:
    return x if isinstance(x, Sample) else Sample(x)


def _unit_values(u: Any) -> np.ndarray:
    return u.values if isinstance(u, CenteredUnit) else np.asarray(u, dtype=np.float64)


def _check_same_length(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionMismatch(f"length {a.size} != length {b.size}")


def _centered(x: Sample) -> tuple[np.ndarray, float]:
    """Centered values and their squared norm."""
    c = x.values - x.values.mean()
    sq = float(np.dot(c, c))
    if math.sqrt(sq) <= ZERO_VARIANCE_NORM:
        raise ZeroVariance(f"sample {x.id!r} has zero variance", sample_id=x.id)
    return c, sq


def cosine(a: np.ndarray, b: np.ndarray, aa: float, bb: float) -> float:
    """``<a, b> / sqrt(<a, a> <b, b>)`` given the squared norms.

    Exactly +-1 when ``b`` is ``a`` or ``-a``, since sqrt(fl(s*s)) == |s|.
    """
    return float(np.dot(a, b)) / math.sqrt(aa * bb)


def center_and_normalize(x: SampleLike) -> CenteredUnit:
    """Subtract the mean and scale to unit Euclidean norm.

    Raises ZeroVariance when the centered vector has norm <= 1e-12.
    """
    s = _sample(x)
    c, sq = _centered(s)
    return CenteredUnit(c / math.sqrt(sq), source_id=s.id, _checked=False)


def _clamped_distance(dot: float) -> float:
    return 1.0 - min(abs(dot), 1.0)


def abs_corr_distance(x: SampleLike, y: SampleLike) -> float:
    """``1 - |corr(x, y)|`` clamped to [0, 1]."""
    sx, sy = _sample(x), _sample(y)
    _check_same_length(sx.values, sy.values)
    cx, xx = _centered(sx)
    cy, yy = _centered(sy)
    return _clamped_distance(cosine(cx, cy, xx, yy))


def abs_corr_distance_unit(u: UnitLike, v: UnitLike) -> float:
    a, b = _unit_values(u), _unit_values(v)
    _check_same_length(a, b)
    return _clamped_distance(cosine(a, b, float(np.dot(a, a)), float(np.dot(b, b))))


def projective_angle(u: UnitLike, v: UnitLike) -> float:
    """Angle between the lines spanned by ``u`` and ``v``, in [0, pi/2].

    Uses ``2*asin(|u - s*v| / 2)`` with ``s = sign(<u, v>)``, which stays
    accurate for nearly parallel vectors where ``arccos`` loses half the digits.
    """
    a, b = _unit_values(u), _unit_values(v)
    _check_same_length(a, b)
    dot = float(np.dot(a, b))
    chord = float(np.linalg.norm(a - b if dot >= 0 else a + b))
    return min(2.0 * np.arcsin(min(chord / 2.0, 1.0)), np.pi / 2)


def pairwise_matrix(samples: Sequence[SampleLike]) -> np.ndarray:
    """Symmetric matrix of absolute correlation distances with zero diagonal.

    Each unordered pair is computed once and mirrored. Errors name the
    offending row index.
    """
    ss = [_sample(s) for s in samples]
    units = []
    for i, s in enumerate(ss):
        if s.values.size != ss[0].values.size:
            raise DimensionMismatch(f"row {i}: length {s.values.size} != {ss[0].values.size}")
        try:
            units.append(center_and_normalize(s))
        except ZeroVariance as exc:
            sid = s.id if s.id is not None else i
            raise ZeroVariance(f"row {i} (id {sid!r}) has zero variance", sample_id=sid) from exc
    m = len(units)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            d = abs_corr_distance_unit(units[i], units[j])
            out[i, j] = out[j, i] = d
    return out
