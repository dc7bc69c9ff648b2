"""Sublevel-set geometry: measures of Omega_M = {0 <= V < M}, local measures
omega_x^l, polynomial-thinness evidence, decay fits, and radial growth probes.

All Monte Carlo draws derive from one master seed through numpy SeedSequence
spawn keys, so serial and parallel evaluation orders give identical reports.
Scalar reductions use math.fsum (exact compensated summation).
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .potentials import PotentialExpr, evaluate

__all__ = [
    "Region",
    "MeasureEstimate",
    "ThinnessReport",
    "GrowthReport",
    "DecayFit",
    "ball_volume",
    "indicator",
    "measure",
    "local_measure",
    "decay_fit",
    "thinness",
    "growth_check",
]

NEGATIVE_TOLERANCE = 1e-9


def derived_rng(master_seed: int, *key) -> np.random.Generator:
    """Child generator for task `key` under `master_seed` (deterministic).

    String key parts are hashed with crc32 so that the derived stream is
    stable across processes (builtin hash() is salted per interpreter run).
    """
    hashed = tuple(
        zlib.crc32(k.encode()) if isinstance(k, str) else int(k) & 0xFFFFFFFF for k in key
    )
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=hashed))


def ball_volume(nu: int, radius: float) -> float:
    return math.pi ** (nu / 2.0) / math.gamma(nu / 2.0 + 1.0) * radius**nu


@dataclass(frozen=True)
class Region:
    """Ball (size = radius) or axis-aligned box (size = half-widths)."""

    kind: str
    center: tuple
    size: object  # float radius for balls, tuple of half-widths for boxes

    def __post_init__(self):
        if self.kind not in ("ball", "box"):
            raise ValueError(f"region kind must be 'ball' or 'box', got {self.kind!r}")
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        object.__setattr__(self, "center", center)
        if self.kind == "ball":
            radius = float(np.asarray(self.size).reshape(()))
            if radius <= 0:
                raise ValueError("ball radius must be > 0")
            object.__setattr__(self, "size", radius)
        else:
            widths = tuple(float(wi) for wi in np.atleast_1d(self.size))
            if len(widths) == 1 and len(center) > 1:
                widths = widths * len(center)
            if len(widths) != len(center):
                raise ValueError("box half-widths must match center length")
            if any(wi <= 0 for wi in widths):
                raise ValueError("box half-widths must be > 0")
            object.__setattr__(self, "size", widths)

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        if self.kind == "ball":
            return ball_volume(self.dimension, self.size)
        return float(np.prod([2.0 * wi for wi in self.size]))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        center = np.asarray(self.center)
        if self.kind == "box":
            widths = np.asarray(self.size)
            return center + rng.uniform(-1.0, 1.0, size=(n, self.dimension)) * widths
        return center + _ball_points(self.dimension, self.size, n, rng)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        delta = pts - np.asarray(self.center)
        if self.kind == "ball":
            return np.einsum("ij,ij->i", delta, delta) <= self.size**2
        return np.all(np.abs(delta) <= np.asarray(self.size), axis=1)


def _ball_points(nu: int, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points in the centered nu-ball of the given radius."""
    directions = rng.normal(size=(n, nu))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    # resample the (measure-zero) event of a zero normal vector
    bad = norms[:, 0] == 0.0
    while np.any(bad):
        directions[bad] = rng.normal(size=(int(bad.sum()), nu))
        norms = np.linalg.norm(directions, axis=1, keepdims=True)
        bad = norms[:, 0] == 0.0
    radii = radius * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / nu)
    return directions / norms * radii


def _annulus_points(nu, r_inner, r_outer, n, rng):
    """Uniform points in the centered annulus r_inner < |x| <= r_outer."""
    directions = rng.normal(size=(n, nu))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    bad = norms[:, 0] == 0.0
    while np.any(bad):
        directions[bad] = rng.normal(size=(int(bad.sum()), nu))
        norms = np.linalg.norm(directions, axis=1, keepdims=True)
        bad = norms[:, 0] == 0.0
    u = rng.uniform(0.0, 1.0, size=(n, 1))
    radii = (r_inner**nu + u * (r_outer**nu - r_inner**nu)) ** (1.0 / nu)
    return directions / norms * radii


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    std_error: float
    method: str  # 'monte-carlo' | 'grid-quadrature'
    samples: int
    seed: int


@dataclass(frozen=True)
class ThinnessReport:
    r: float
    ell: float
    radii: tuple
    partial_integrals: tuple
    tail_ratios: tuple
    verdict: str  # 'convergent-evidence' | 'divergent-evidence' | 'inconclusive'


@dataclass(frozen=True)
class GrowthReport:
    """min-of-V-on-spheres table; sampling evidence, never a proof."""

    radii: tuple
    min_values: tuple
    increasing: bool
    note: str = "sampling evidence only; probes include the coordinate axes"


@dataclass(frozen=True)
class DecayFit:
    constant: float
    exponent: float
    distances: tuple
    local_measures: tuple


def _values_with_guard(V: PotentialExpr, pts: np.ndarray) -> np.ndarray:
    values = evaluate(V, pts)
    worst = float(np.min(values)) if values.size else 0.0
    if worst < -NEGATIVE_TOLERANCE:
        raise ValueError(f"potential is negative ({worst:.3e}) beyond the -1e-9 tolerance")
    return values


def _membership(V: PotentialExpr, M: float, pts: np.ndarray) -> np.ndarray:
    # values within [-tol, 0) are roundoff zeros and count as inside
    return _values_with_guard(V, pts) < M


def indicator(V: PotentialExpr, M: float, x) -> bool:
    """Membership of x in Omega_M(V) = {0 <= V < M}."""
    if M <= 0:
        raise ValueError("M must be > 0")
    pts = np.asarray(x, dtype=float).reshape(1, -1)
    return bool(_membership(V, M, pts)[0])


def measure(
    V: PotentialExpr,
    M: float,
    region: Region,
    method: str = "monte-carlo",
    budget: int = 100_000,
    seed: int = 0,
) -> MeasureEstimate:
    """Estimate |Omega_M(V) cap region|.

    monte-carlo: uniform samples over the region; std_error is the binomial
    standard error scaled by the region volume.  grid-quadrature: counts cell
    centers of a uniform grid over the region (std_error 0); `budget` is the
    target cell count.
    """
    if M <= 0:
        raise ValueError("M must be > 0")
    if region.dimension != V.dimension:
        raise ValueError("region dimension does not match potential dimension")
    if method == "monte-carlo":
        if budget < 1_000:
            raise ValueError("monte-carlo budget must be >= 1e3")
        rng = derived_rng(seed, 0)
        pts = region.sample(budget, rng)
        inside = _membership(V, M, pts)
        hits = int(np.count_nonzero(inside))
        p = hits / budget
        volume = region.volume
        value = p * volume
        std_error = volume * math.sqrt(p * (1.0 - p) / budget)
        return MeasureEstimate(value, std_error, "monte-carlo", budget, seed)
    if method == "grid-quadrature":
        if budget < 10_000:
            raise ValueError("grid-quadrature budget must be >= 1e4 cells")
        nu = region.dimension
        per_axis = int(math.ceil(budget ** (1.0 / nu)))
        center = np.asarray(region.center)
        half = np.full(nu, region.size) if region.kind == "ball" else np.asarray(region.size)
        axes = [center[a] - half[a] + (np.arange(per_axis) + 0.5) * (2 * half[a] / per_axis) for a in range(nu)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        keep = region.contains(pts)
        pts = pts[keep]
        cell = float(np.prod(2 * half / per_axis))
        inside = _membership(V, M, pts) if pts.size else np.zeros(0, bool)
        value = int(np.count_nonzero(inside)) * cell
        return MeasureEstimate(value, 0.0, "grid-quadrature", int(per_axis**nu), seed)
    raise ValueError(f"unknown method {method!r}")


def local_measure(
    V: PotentialExpr,
    M: float,
    x,
    ell: float,
    budget: int = 2_000,
    seed: int = 0,
    method: str = "monte-carlo",
) -> MeasureEstimate:
    """omega_x^ell(Omega_M) = |Omega_M cap ball(x, ell)|."""
    if ell <= 0:
        raise ValueError("ell must be > 0")
    region = Region("ball", tuple(np.atleast_1d(np.asarray(x, dtype=float))), ell)
    return measure(V, M, region, method=method, budget=budget, seed=seed)


def decay_fit(
    V: PotentialExpr,
    M: float,
    ell: float,
    ray_direction,
    distances,
    method: str = "grid-quadrature",
    budget: int = 100_000,
    seed: int = 0,
) -> DecayFit:
    """Least-squares fit of log omega against log(1/(t+1)) along a ray.

    Models omega_{t*ray}^ell ~ C * (t+1)^(-exponent).  Every probe point
    t*ray must lie in Omega_M.  The default local quadrature uses the same
    ball-centered grid at every probe, so a translation-invariant omega fits
    exponent 0 exactly.
    """
    ray = np.asarray(ray_direction, dtype=float)
    norm = float(np.linalg.norm(ray))
    if norm == 0.0:
        raise ValueError("ray_direction must be nonzero")
    ray = ray / norm
    ts = [float(t) for t in distances]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("distances must be strictly increasing")
    omegas = []
    for i, t in enumerate(ts):
        point = t * ray
        if not indicator(V, M, point):
            raise ValueError(f"ray point at distance {t} lies outside Omega_M")
        est = local_measure(V, M, point, ell, budget=budget, seed=derived_rng(seed, 1, i).integers(2**31)
                            if method == "monte-carlo" else seed, method=method)
        if est.value <= 0.0:
            raise ValueError(f"no sublevel mass within ell of the ray point at distance {t}")
        omegas.append(est.value)
    y = np.log(np.asarray(omegas))
    z = -np.log(np.asarray(ts) + 1.0)
    if np.all(y == y[0]):
        return DecayFit(float(math.exp(y[0])), 0.0, tuple(ts), tuple(omegas))
    zc = z - z.mean()
    slope = math.fsum(zc * (y - y.mean())) / math.fsum(zc * zc)
    intercept = float(y.mean() - slope * z.mean())
    return DecayFit(float(math.exp(intercept)), float(slope), tuple(ts), tuple(omegas))


def _omega_batch(V, M, centers, ell, sub_budget, rng) -> np.ndarray:
    """Monte Carlo omega^ell at each center, chunked to bound memory."""
    nu = centers.shape[1]
    vol = ball_volume(nu, ell)
    out = np.empty(centers.shape[0])
    chunk = max(1, int(2_000_000 // max(sub_budget, 1)))
    for start in range(0, centers.shape[0], chunk):
        block = centers[start : start + chunk]
        offsets = _ball_points(nu, ell, block.shape[0] * sub_budget, rng).reshape(
            block.shape[0], sub_budget, nu
        )
        pts = (block[:, None, :] + offsets).reshape(-1, nu)
        inside = _membership(V, M, pts).reshape(block.shape[0], sub_budget)
        out[start : start + chunk] = inside.mean(axis=1) * vol
    return out


def thinness(
    V: PotentialExpr,
    M: float,
    r: float,
    ell: float,
    radii,
    budget: int = 200_000,
    sub_budget: int = 2_000,
    seed: int = 0,
) -> ThinnessReport:
    """Partial integrals of omega_x^ell(Omega_M)^r over Omega_M cap B_R.

    Estimates annulus increments (uniform proposals per annulus, restriction
    to Omega_M by rejection, omega per accepted point by a sub_budget Monte
    Carlo ball estimate) and accumulates them, so partial integrals are
    nondecreasing by construction.  `budget` is the proposal count per
    annulus.  E[omega^r] over the Monte Carlo omega-hat is biased upward by
    the omega-estimator variance (quadratic in the indicator's boundary
    measure within the ell-ball); sub_budget controls that bias.

    Verdict: the last two tail ratios < 0.7 read as convergent-evidence,
    both > 0.9 as divergent-evidence, anything else inconclusive.  This is
    numerical evidence about a truncated integral, not a proof.
    """
    radii = [float(R) for R in radii]
    if len(radii) < 3 or any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= 0:
        raise ValueError("radii must be >= 3 strictly increasing positive values")
    if r <= 0:
        raise ValueError("r must be > 0")
    if ell <= 0:
        raise ValueError("ell must be > 0")
    nu = V.dimension
    increments = []
    bounds = [0.0] + radii
    for j, (ra, rb) in enumerate(zip(bounds, bounds[1:])):
        rng = derived_rng(seed, 2, j)
        pts = _annulus_points(nu, ra, rb, budget, rng)
        inside = _membership(V, M, pts)
        hits = pts[inside]
        if j == 0 and 0 < hits.shape[0] < 100:
            raise ValueError(
                f"budget too small: only {hits.shape[0]} samples landed in Omega_M cap B_{{{rb}}}"
            )
        if hits.shape[0] == 0:
            increments.append(0.0)
            continue
        omegas = _omega_batch(V, M, hits, ell, sub_budget, rng)
        shell_volume = ball_volume(nu, rb) - ball_volume(nu, ra)
        increments.append(shell_volume * math.fsum(omegas**r) / budget)
    partials = list(np.cumsum(increments))
    ratios = []
    for j in range(1, len(increments) - 1):
        num, den = increments[j + 1], increments[j]
        if den == 0.0:
            ratios.append(0.0 if num == 0.0 else math.inf)
        else:
            ratios.append(num / den)
    last_two = ratios[-2:]
    if last_two and all(q < 0.7 for q in last_two):
        verdict = "convergent-evidence"
    elif last_two and all(q > 0.9 for q in last_two):
        verdict = "divergent-evidence"
    else:
        verdict = "inconclusive"
    return ThinnessReport(float(r), float(ell), tuple(radii), tuple(partials), tuple(ratios), verdict)


def growth_check(
    V: PotentialExpr,
    radii,
    probes_per_sphere: int = 64,
    seed: int = 0,
) -> GrowthReport:
    """Minimum of V over probe points on each sphere |x| = R.

    Probes always include the 2*nu coordinate-axis points, so potentials that
    vanish along an axis report m(R) = 0 exactly; the remainder are seeded
    uniform directions.  Increasing means strictly increasing across radii.
    """
    radii = [float(R) for R in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])) or any(R <= 0 for R in radii):
        raise ValueError("radii must be strictly increasing positive values")
    nu = V.dimension
    axes = np.concatenate([np.eye(nu), -np.eye(nu)], axis=0)
    extra = max(0, probes_per_sphere - axes.shape[0])
    rng = derived_rng(seed, 3)
    directions = rng.normal(size=(extra, nu))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    keep = norms[:, 0] > 0
    directions = np.concatenate([axes, directions[keep] / norms[keep]], axis=0)
    mins = []
    for R in radii:
        values = evaluate(V, R * directions)
        mins.append(float(np.min(values)))
    increasing = all(b > a for a, b in zip(mins, mins[1:]))
    return GrowthReport(tuple(radii), tuple(mins), increasing)
