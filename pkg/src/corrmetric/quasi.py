"""Numerical certification of the 2-relaxed triangle inequality.

For unit vectors on the zero-mean sphere with pairwise angles
``alpha = <XY``, ``beta = <YZ`` and ``gamma = <XZ`` the inequality reads

    f(gamma) <= K * (f(alpha) + f(beta)),    f(t) = 1 - |cos t|,

and holds for every realizable triple iff ``K >= 2``.  This module evaluates
the ratio ``f(gamma) / (f(alpha) + f(beta))`` over angle grids, over random
vectors, along the family ``alpha = beta, gamma = 2*alpha`` that approaches
the constant 2, and builds explicit counterexamples for ``K < 2``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import CenteredUnit, SampleLike, abs_corr_distance
from .errors import DimensionTooSmall, DomainError, Infeasible

SCHEMA_VERSION = 1
FEASIBILITY_TOL = 1e-12
PSD_TOL = 1e-10
TWO_PI = 2.0 * math.pi

# Fixed for reproducibility: Philox4x64-10 counter-based bit generator,
# one stream per block of RANDOM_BLOCK trials keyed by (seed, block index).
GENERATOR_NAME = "numpy.random.Philox(SeedSequence([seed, block]))/standard_normal"
RANDOM_BLOCK = 1 << 16


@dataclass(frozen=True)
class RelaxConfig:
    k: float = 2.0
    denom_epsilon: float = 1e-12

    def __post_init__(self):
        if not self.k > 0:
            raise DomainError(f"k must be positive, got {self.k}")
        if not self.denom_epsilon > 0:
            raise DomainError(f"denom_epsilon must be positive, got {self.denom_epsilon}")


@dataclass(frozen=True, order=True)
class AngleTriple:
    """Pairwise angles (radians) of three unit vectors X, Y, Z."""

    alpha: float  # angle XY
    beta: float  # angle YZ
    gamma: float  # angle XZ

    def as_dict(self):
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma}

    @property
    def is_feasible(self) -> bool:
        return feasible(self)


@dataclass
class RatioReport:
    max_ratio: float
    argmax: Optional[AngleTriple]
    samples_evaluated: int
    samples_skipped_degenerate: int
    k_used: float
    parameters: dict = field(default_factory=dict)
    generator_name: Optional[str] = None

    @property
    def violated(self) -> bool:
        return self.max_ratio > self.k_used + 1e-9

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "k": self.k_used,
            "max_ratio": self.max_ratio,
            "argmax": self.argmax.as_dict() if self.argmax is not None else None,
            "evaluated": self.samples_evaluated,
            "skipped": self.samples_skipped_degenerate,
            "parameters": dict(self.parameters),
            "generator_name": self.generator_name,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "RatioReport":
        am = doc.get("argmax")
        return cls(
            max_ratio=doc["max_ratio"],
            argmax=AngleTriple(**am) if am is not None else None,
            samples_evaluated=doc["evaluated"],
            samples_skipped_degenerate=doc["skipped"],
            k_used=doc["k"],
            parameters=doc.get("parameters", {}),
            generator_name=doc.get("generator_name"),
        )


def _check_angle(name, x):
    if not (0.0 <= x <= math.pi):
        raise DomainError(f"{name}={x!r} outside [0, pi]")


def f_gamma(gamma: float) -> float:
    """Left side of the relaxed inequality: ``1 - |cos gamma|``."""
    _check_angle("gamma", gamma)
    return 1.0 - abs(math.cos(gamma))


def g_alpha_beta(alpha: float, beta: float, cfg: RelaxConfig = RelaxConfig()) -> float:
    """Right side: ``K * (1 - |cos alpha| + 1 - |cos beta|)``."""
    _check_angle("alpha", alpha)
    _check_angle("beta", beta)
    return cfg.k * ((1.0 - abs(math.cos(alpha))) + (1.0 - abs(math.cos(beta))))


def feasible(t: AngleTriple, tol: float = FEASIBILITY_TOL) -> bool:
    """Whether the angles are realizable by three unit vectors.

    Requires the spherical triangle inequality ``|a - b| <= c <= a + b`` and the
    perimeter cap ``a + b + c <= 2*pi``; ``tol`` absorbs rounding from grids
    and from angles measured on floating-point vectors.
    """
    a, b, c = t.alpha, t.beta, t.gamma
    for name, x in (("alpha", a), ("beta", b), ("gamma", c)):
        _check_angle(name, x)
    return abs(a - b) <= c + tol and c <= a + b + tol and a + b + c <= TWO_PI + tol


def _f_array(x):
    return 1.0 - np.abs(np.cos(x))


def ratio_angles(t: AngleTriple, cfg: RelaxConfig = RelaxConfig()) -> Optional[float]:
    """``f(gamma) / (f(alpha) + f(beta))``, or None when the denominator is below epsilon."""
    if not feasible(t):
        raise Infeasible(f"{t} is not realizable")
    den = f_gamma(t.alpha) + f_gamma(t.beta)
    if den < cfg.denom_epsilon:
        return None
    return f_gamma(t.gamma) / den


def ratio_vectors(x: SampleLike, y: SampleLike, z: SampleLike,
                  cfg: RelaxConfig = RelaxConfig()) -> Optional[float]:
    """``d(x, z) / (d(x, y) + d(y, z))`` with the same epsilon rule as ratio_angles."""
    den = abs_corr_distance(x, y) + abs_corr_distance(y, z)
    num = abs_corr_distance(x, z)
    if den < cfg.denom_epsilon:
        return None
    return num / den


def grid_values(step: float) -> np.ndarray:
    """Multiples of ``step`` in [0, pi], closed with pi itself."""
    vals = np.arange(int(math.floor(math.pi / step)) + 1) * step
    vals = vals[vals <= math.pi]
    if math.pi - vals[-1] > 1e-12:
        vals = np.append(vals, math.pi)
    return vals


def sweep_grid(step: float, cfg: RelaxConfig = RelaxConfig()) -> RatioReport:
    """Evaluate the ratio on every feasible triple of the closed angle grid.

    The reduction walks alpha, then beta, then gamma in ascending order and only
    replaces the incumbent on a strictly larger ratio, so the reported argmax is
    the lexicographically smallest triple among equal maxima.
    """
    if not (0 < step <= 0.5):
        raise DomainError(f"step must lie in (0, 0.5], got {step}")
    vals = grid_values(step)
    fv = _f_array(vals)
    b = vals[:, None]
    c = vals[None, :]
    fb = fv[:, None]
    fc = fv[None, :]

    best, best_t = -math.inf, None
    evaluated = skipped = 0
    for ia, a in enumerate(vals):
        mask = (np.abs(a - b) <= c + FEASIBILITY_TOL) & (c <= a + b + FEASIBILITY_TOL) \
            & (a + b + c <= TWO_PI + FEASIBILITY_TOL)
        den = np.broadcast_to(fv[ia] + fb, mask.shape)
        degenerate = mask & (den < cfg.denom_epsilon)
        ok = mask & ~degenerate
        skipped += int(degenerate.sum())
        n_ok = int(ok.sum())
        if n_ok == 0:
            continue
        evaluated += n_ok
        ratio = np.where(ok, np.broadcast_to(fc, mask.shape) / np.where(ok, den, 1.0), -np.inf)
        flat = int(np.argmax(ratio))
        r = float(ratio.flat[flat])
        if r > best:
            ib, ic = divmod(flat, vals.size)
            best, best_t = r, AngleTriple(float(a), float(vals[ib]), float(vals[ic]))
    return RatioReport(
        max_ratio=best if best_t is not None else float("nan"),
        argmax=best_t,
        samples_evaluated=evaluated,
        samples_skipped_degenerate=skipped,
        k_used=cfg.k,
        parameters={"mode": "grid", "step": step, "seed": None, "dimension": None},
        generator_name=None,
    )


def _pair_angle(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Unfolded angle in [0, pi] between rows of unit vectors, accurate near 0 and pi."""
    return 2.0 * np.arctan2(np.linalg.norm(u - v, axis=-1), np.linalg.norm(u + v, axis=-1))


def _random_block(n, count, seed, block, denom_epsilon):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))
    draws = rng.standard_normal((count, 3, n))
    centered = draws - draws.mean(axis=2, keepdims=True)
    norms = np.linalg.norm(centered, axis=2)
    constant = np.any(norms <= 1e-12, axis=1)
    units = centered / np.where(norms > 1e-12, norms, 1.0)[:, :, None]
    x, y, z = units[:, 0], units[:, 1], units[:, 2]

    def dist(u, v):
        return 1.0 - np.minimum(np.abs(np.einsum("ij,ij->i", u, v)), 1.0)

    dxy, dyz, dxz = dist(x, y), dist(y, z), dist(x, z)
    den = dxy + dyz
    degenerate = constant | (den < denom_epsilon)
    ratio = np.where(degenerate, -np.inf, dxz / np.where(degenerate, 1.0, den))
    skipped = int(degenerate.sum())
    if skipped == count:
        return -math.inf, None, 0, skipped
    i = int(np.argmax(ratio))
    # Ties across trials: prefer the lexicographically smallest angle triple.
    ties = np.flatnonzero(ratio == ratio[i])
    triples = [
        AngleTriple(*(float(v) for v in (_pair_angle(x[j], y[j]), _pair_angle(y[j], z[j]),
                                         _pair_angle(x[j], z[j]))))
        for j in ties
    ]
    return float(ratio[i]), min(triples), count - skipped, skipped


def sweep_random(n: int, trials: int, seed: int, cfg: RelaxConfig = RelaxConfig(),
                 workers: int = 1) -> RatioReport:
    """Ratio over ``trials`` triples of i.i.d. standard-normal samples in R^n.

    Trials are drawn in fixed-size blocks with one keyed Philox stream per
    block, so the report does not depend on ``workers``.
    """
    if n < 3:
        raise DomainError(f"dimension must be >= 3, got {n}")
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    blocks = [(b, min(RANDOM_BLOCK, trials - b * RANDOM_BLOCK))
              for b in range((trials + RANDOM_BLOCK - 1) // RANDOM_BLOCK)]

    def run(spec):
        b, count = spec
        return _random_block(n, count, seed, b, cfg.denom_epsilon)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(spec) for spec in blocks]

    best, best_t = -math.inf, None
    evaluated = skipped = 0
    for r, t, ev, sk in results:
        evaluated += ev
        skipped += sk
        if t is None:
            continue
        if r > best or (r == best and t < best_t):
            best, best_t = r, t
    return RatioReport(
        max_ratio=best if best_t is not None else float("nan"),
        argmax=best_t,
        samples_evaluated=evaluated,
        samples_skipped_degenerate=skipped,
        k_used=cfg.k,
        parameters={"mode": "random", "trials": trials, "seed": seed, "dimension": n},
        generator_name=GENERATOR_NAME,
    )


def sharpness_ratio(alpha: float) -> float:
    """Ratio along ``alpha = beta, gamma = 2*alpha``: ``(1 - cos 2a) / (2 - 2 cos a)``.

    Evaluated through half-angle sines so it keeps full precision as
    ``alpha -> 0``; analytically equal to ``1 + cos(alpha)``.
    """
    if not (0.0 < alpha <= math.pi / 4):
        raise DomainError(f"alpha must lie in (0, pi/4], got {alpha}")
    # 1 - cos 2a = 2 sin^2 a,  2 - 2 cos a = 4 sin^2(a/2)
    return (2.0 * math.sin(alpha) ** 2) / (4.0 * math.sin(alpha / 2.0) ** 2)


def _helmert_basis(n: int) -> np.ndarray:
    """Orthonormal basis (rows) of the zero-mean hyperplane in R^n."""
    basis = np.zeros((n - 1, n))
    for k in range(1, n):
        basis[k - 1, :k] = 1.0
        basis[k - 1, k] = -float(k)
        basis[k - 1] /= math.sqrt(k * (k + 1))
    return basis


def realize_angles(t: AngleTriple, n: int = 3) -> tuple[CenteredUnit, CenteredUnit, CenteredUnit]:
    """Three zero-mean unit vectors X, Y, Z in R^n with the given pairwise angles.

    Factors the Gram matrix of cosines and embeds the coordinates in an
    orthonormal basis of the zero-mean hyperplane, which has dimension n - 1.
    Coplanar triples (rank-2 Gram) fit in n = 3; general ones need n >= 4.
    """
    if n < 3:
        raise DimensionTooSmall(f"need n >= 3, got {n}")
    if not feasible(t):
        raise Infeasible(f"{t} violates the spherical triangle inequality or perimeter cap")
    ca, cb, cc = math.cos(t.alpha), math.cos(t.beta), math.cos(t.gamma)
    gram = np.array([[1.0, ca, cc], [ca, 1.0, cb], [cc, cb, 1.0]])
    w, v = np.linalg.eigh(gram)
    if w[0] < -PSD_TOL:
        raise Infeasible(f"Gram matrix of {t} has eigenvalue {w[0]:.3g}")
    w = np.clip(w, 0.0, None)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    rank = n - 1
    if rank < 3 and np.any(w[rank:] > PSD_TOL):
        raise DimensionTooSmall(
            f"{t} spans 3 dimensions; the zero-mean hyperplane of R^{n} has only {rank}")
    keep = min(rank, 3)
    coords = v[:, :keep] * np.sqrt(w[:keep])
    vecs = coords @ _helmert_basis(n)[:keep]
    vecs -= vecs.mean(axis=1, keepdims=True)
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    return tuple(CenteredUnit(row) for row in vecs)


def find_counterexample(k: float, n: int = 3):
    """A triple and vectors whose ratio exceeds ``k``; exists exactly when k < 2.

    Uses the sharpness family at ``alpha = arccos(max(k - 1, 0)) / 2``, the
    midpoint of the interval where ``1 + cos(alpha) > k``.
    """
    if not (0 < k < 2):
        raise DomainError(f"no counterexample exists for k={k}: K=2 is sharp")
    alpha = 0.5 * math.acos(max(k - 1.0, 0.0))
    t = AngleTriple(alpha, alpha, 2.0 * alpha)
    x, y, z = realize_angles(t, n)
    r = ratio_vectors(x.values, y.values, z.values)
    if r is None or not r > k:
        raise RuntimeError(f"constructed ratio {r} does not exceed {k}")
    return t, (x, y, z), r


@dataclass
class PlanarCheck:
    passed: bool
    min_margin: float
    witness: tuple[float, float]
    points: int
    k: float


def planar_inequality_check(step: float, cfg: RelaxConfig = RelaxConfig()) -> PlanarCheck:
    """Check ``f(alpha + beta) <= g(alpha, beta)`` on the closed grid over [0, pi]^2.

    ``alpha + beta`` beyond pi is folded to ``2*pi - (alpha + beta)``; f is
    unchanged by the fold.  Passes when the smallest ``g - f`` is >= -1e-12.
    """
    if not (0 < step <= 0.05):
        raise DomainError(f"step must lie in (0, 0.05], got {step}")
    vals = grid_values(step)
    a = vals[:, None]
    b = vals[None, :]
    s = a + b
    s = np.where(s > math.pi, TWO_PI - s, s)
    margin = cfg.k * (_f_array(a) + _f_array(b)) - _f_array(s)
    flat = int(np.argmin(margin))
    ia, ib = divmod(flat, vals.size)
    worst = float(margin.flat[flat])
    return PlanarCheck(
        passed=worst >= -1e-12,
        min_margin=worst,
        witness=(float(vals[ia]), float(vals[ib])),
        points=int(margin.size),
        k=cfg.k,
    )


def right_angle_bound() -> float:
    """K forced by angles (pi/4, pi/4, pi/2): ``1 / (2 - sqrt 2)``."""
    return 1.0 / (2.0 - math.sqrt(2.0))


__all__ = [
    "AngleTriple", "RelaxConfig", "RatioReport", "PlanarCheck", "GENERATOR_NAME",
    "f_gamma", "g_alpha_beta", "feasible", "ratio_angles", "ratio_vectors",
    "grid_values", "sweep_grid", "sweep_random", "sharpness_ratio", "realize_angles",
    "find_counterexample", "planar_inequality_check", "right_angle_bound",
]
