"""Weighted integral-kernel algebra and heat-semigroup diagnostics.

A KernelMatrix holds K(x_i, y_j) on a cell-centered grid; composing two
kernels multiplies the matrices and scales by the cell volume w, so matrix
products approximate kernel composition integrals.  Operator norms, singular
values mu_j = w sigma_j, and Hilbert-Schmidt norms all carry the weight.

Ball memberships (truncation radii, the 0/1 proximity kernel, local-measure
counts) are decided on integer lattice offsets with a hair of relative
slack, so pairs exactly on a ball boundary land inside consistently across
every function here; that keeps the support bookkeeping exact: a chain of
hops of lattice length <= R stays inside the lattice ball of the summed
radius, with no floating-point fringe cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import Grid, potential_on_grid
from .potentials import PotentialExpr
from .sublevel import ball_volume, derived_rng

__all__ = [
    "BoundCheck",
    "CompactnessDiagnostics",
    "KernelMatrix",
    "adjoint",
    "apply_kernel",
    "compose",
    "compose_C",
    "d_kernel",
    "domination_check",
    "gaussian_squared_mass",
    "heat_matrix",
    "hs_diagnostics",
    "hs_norm",
    "kernel_power_bound",
    "kernel_singular_values",
    "multiply_function",
    "operator_norm",
    "split_tail",
    "truncated_convolution",
]

EXACT_SVD_LIMIT = 2048
LATTICE_SLACK = 1e-9


@dataclass(frozen=True)
class KernelMatrix:
    """Dense kernel K(x_i, y_j) on a grid with quadrature weight w."""

    grid: Grid
    values: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        n = self.grid.size
        if values.shape != (n, n):
            raise ValueError(
                f"kernel must be {n} x {n} on this grid, got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("kernel entries must be finite")
        object.__setattr__(self, "values", values)

    @property
    def weight(self) -> float:
        return self.grid.weight


def adjoint(K: KernelMatrix) -> KernelMatrix:
    return KernelMatrix(K.grid, K.values.T.copy())


def compose(K1: KernelMatrix, K2: KernelMatrix) -> KernelMatrix:
    """Kernel of the composed operator: w * K1 @ K2."""
    if K1.grid != K2.grid:
        raise ValueError("kernels live on different grids")
    return KernelMatrix(K1.grid, K1.weight * (K1.values @ K2.values))


def multiply_function(K: KernelMatrix, values_on_grid) -> KernelMatrix:
    """Compose with a multiplication operator: scales columns, no weight."""
    g = np.asarray(values_on_grid, dtype=float)
    if g.shape != (K.grid.size,):
        raise ValueError("function values must match the grid size")
    return KernelMatrix(K.grid, K.values * g[None, :])


def apply_kernel(K: KernelMatrix, vec: np.ndarray) -> np.ndarray:
    """Operator action on a grid function: w * K @ vec."""
    return K.weight * (K.values @ vec)


def hs_norm(K: KernelMatrix) -> float:
    """Hilbert-Schmidt norm: sqrt(w^2 sum K_ij^2)."""
    return K.weight * float(np.linalg.norm(K.values, "fro"))


def kernel_singular_values(K: KernelMatrix) -> np.ndarray:
    """Operator singular values mu_j = w * sigma_j(K), descending."""
    return K.weight * np.linalg.svd(K.values, compute_uv=False)


def _top_singular_value(M: np.ndarray, seed: int = 0, max_iters: int = 600,
                        tol: float = 1e-13) -> float:
    """Largest singular value by seeded power iteration on M^T M."""
    rng = derived_rng(seed, "power-iteration")
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    stagnant = 0
    for _ in range(max_iters):
        u = M @ v
        su = np.linalg.norm(u)
        if su == 0.0:
            return 0.0
        w = M.T @ (u / su)
        sw = np.linalg.norm(w)
        if sw == 0.0:
            return 0.0
        v = w / sw
        if abs(sw - sigma) <= tol * max(sw, 1e-300):
            stagnant += 1
            if stagnant >= 2:
                return sw
        else:
            stagnant = 0
        sigma = sw
    return sigma


def operator_norm(K: KernelMatrix, seed: int = 0) -> float:
    """Operator norm w * sigma_max(K).

    Small matrices use an exact SVD; larger ones a seeded power iteration
    (deterministic for a fixed seed), accurate far beyond the tolerances of
    any norm bound checked here.
    """
    if max(K.values.shape) <= EXACT_SVD_LIMIT:
        sigma = np.linalg.svd(K.values, compute_uv=False)
        top = float(sigma[0]) if sigma.size else 0.0
    else:
        top = _top_singular_value(K.values, seed=seed)
    return K.weight * top


def gaussian_squared_mass(nu: int, s: float) -> float:
    """L2 mass of the heat kernel factor: (2 pi s)^{nu/2} (4 pi s)^{-nu}."""
    return (2.0 * math.pi * s) ** (nu / 2.0) * (4.0 * math.pi * s) ** (-nu)


def _pairwise_sq_dist(points_a: np.ndarray, points_b: np.ndarray) -> np.ndarray:
    d2 = np.zeros((points_a.shape[0], points_b.shape[0]))
    for c in range(points_a.shape[1]):
        d2 += (points_a[:, c, None] - points_b[None, :, c]) ** 2
    return d2


def _axis_indices(grid: Grid) -> tuple:
    shape = (grid.points_per_axis,) * grid.nu
    return np.unravel_index(np.arange(grid.size), shape)


def _lattice_ball_mask(grid: Grid, radius: float) -> np.ndarray:
    """Boolean pair mask [|x_i - x_j| <= radius] on integer lattice offsets."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    cells_sq = (radius / grid.spacing) ** 2
    cutoff = cells_sq * (1.0 + LATTICE_SLACK) + LATTICE_SLACK
    d2int = np.zeros((grid.size, grid.size), dtype=np.int64)
    for idx in _axis_indices(grid):
        offs = idx.astype(np.int64)
        d2int += (offs[:, None] - offs[None, :]) ** 2
    return d2int <= cutoff


def heat_matrix(grid: Grid, s: float = 1.0, mode: str = "gaussian-kernel") -> KernelMatrix:
    """Heat-semigroup kernel at time s.

    gaussian-kernel fills K_ij = (4 pi s)^{-nu/2} exp(-|x_i-x_j|^2 / 4s)
    literally; expm-of-laplacian exponentiates the discrete Dirichlet
    Laplacian through its separable 1-D eigendecomposition and divides by w
    so that apply_kernel reproduces the matrix exponential's action.
    """
    if s <= 0:
        raise ValueError("s must be > 0")
    grid.require_dense_budget()
    if mode == "gaussian-kernel":
        d2 = _pairwise_sq_dist(grid.points, grid.points)
        coef = (4.0 * math.pi * s) ** (-grid.nu / 2.0)
        return KernelMatrix(grid, coef * np.exp(-d2 / (4.0 * s)))
    if mode == "expm-of-laplacian":
        n = grid.points_per_axis
        h = grid.spacing
        T = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1)
             - np.diag(np.ones(n - 1), -1)) / h**2
        lam, Q = np.linalg.eigh(T)
        E1 = (Q * np.exp(-s * lam)) @ Q.T
        E1 = (E1 + E1.T) / 2.0
        E = E1
        for _ in range(grid.nu - 1):
            E = np.kron(E, E1)
        E = (E + E.T) / 2.0
        return KernelMatrix(grid, E / grid.weight)
    raise ValueError(f"unknown mode {mode!r}")


def compose_C(grid: Grid, V: PotentialExpr, s: float = 1.0,
              mode: str = "gaussian-kernel") -> KernelMatrix:
    """Kernel of e^{s Laplacian} e^{-V} (damped heat operator)."""
    damping = np.exp(-potential_on_grid(grid, V))
    return multiply_function(heat_matrix(grid, s, mode), damping)


def split_tail(C: KernelMatrix, V: PotentialExpr, m: float):
    """Split C into C_m = C chi_{[V < m]} and the tail D_m = C - C_m.

    Returns (C_m, D_m, norms) where norms records the two operator norms
    next to the reference level e^{-m}: on the sublevel complement V >= m,
    so every column of D_m is damped by at least e^{-m}.
    """
    chi = (potential_on_grid(C.grid, V) < m).astype(float)
    C_m = multiply_function(C, chi)
    D_m = multiply_function(C, 1.0 - chi)
    norms = {
        "C_m": operator_norm(C_m),
        "D_m": operator_norm(D_m),
        "reference": math.exp(-m) if m < 700 else 0.0,
    }
    return C_m, D_m, norms


@dataclass(frozen=True)
class BoundCheck:
    """One named inequality lhs <= rhs with an absolute tolerance."""

    name: str
    lhs: float
    rhs: float
    tol: float
    passed: bool


def _bound(name: str, lhs: float, rhs: float, tol: float) -> BoundCheck:
    lhs = float(lhs)
    rhs = float(rhs)
    tol = float(tol)
    return BoundCheck(name, lhs, rhs, tol, bool(lhs <= rhs + tol))


@dataclass(frozen=True)
class CompactnessDiagnostics:
    """Singular values, HS norm, and named bound checks for one operator."""

    singular_values: np.ndarray
    hs_norm: float
    checks: tuple
    constants: dict
    note: str = ""

    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks)


def hs_diagnostics(K: KernelMatrix, mask, s: float = 1.0) -> CompactnessDiagnostics:
    """Compactness evidence for the masked operator K chi.

    Checks, in order: pointwise domination of |K chi| by the Gaussian at
    time s (an equality when K came from the gaussian-kernel mode), row vs
    column sup bounds of K and their gap, the sup-bound estimate of the HS
    norm, and the sharper Gaussian-mass estimate
    HS^2 <= |f|_{L2}^2 * |masked region|.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (K.grid.size,):
        raise ValueError("mask length must equal the grid size")
    w = K.weight
    nu = K.grid.nu
    masked = K.values[:, mask]
    count = int(np.count_nonzero(mask))
    hs2 = w * w * float(np.sum(masked**2))
    if masked.size:
        sv = w * np.linalg.svd(masked, compute_uv=False)
    else:
        sv = np.zeros(0)

    coef = (4.0 * math.pi * s) ** (-nu / 2.0)
    if count:
        d2 = _pairwise_sq_dist(K.grid.points, K.grid.points[mask])
        dominating = coef * np.exp(-d2 / (4.0 * s))
        excess = float(np.max(np.abs(masked) - dominating))
    else:
        excess = 0.0

    col_sums = w * np.sum(K.values**2, axis=0)
    row_sums = w * np.sum(K.values**2, axis=1)
    row_bound = float(np.max(row_sums))
    col_bound = float(np.max(col_sums))
    mass = gaussian_squared_mass(nu, s)
    region_measure = w * count

    checks = (
        _bound("pointwise-domination", excess, 0.0, 1e-12 * coef),
        _bound("row-column-gap", abs(row_bound - col_bound), 0.0,
               1e-12 * max(row_bound, col_bound, 1e-300)),
        _bound("hs-vs-sup-bound", hs2, col_bound * region_measure,
               1e-12 * max(col_bound * region_measure, 1e-300)),
        _bound("hs-vs-gaussian-mass", hs2, mass * region_measure,
               0.01 * mass * region_measure),
    )
    constants = {
        "row_bound": row_bound,
        "column_bound": col_bound,
        "mask_measure": region_measure,
        "gaussian_mass": mass,
    }
    return CompactnessDiagnostics(sv, math.sqrt(hs2), checks, constants)


def truncated_convolution(grid: Grid, s: float, R: float):
    """Range-R truncation F_R of the heat kernel and its L1 tail.

    The tail is the quadrature mass of the Gaussian outside radius R --
    lattice offsets inside the difference box plus the analytic mass beyond
    it in closed form -- and upper-bounds |heat - F_R| in operator norm by
    the Schur test, since every discarded entry shows up in the lattice sum.
    """
    if R <= 0:
        raise ValueError("R must be > 0")
    heat = heat_matrix(grid, s)
    inside = _lattice_ball_mask(grid, R)
    F = KernelMatrix(grid, np.where(inside, heat.values, 0.0))

    n = grid.points_per_axis
    h = grid.spacing
    offsets = np.arange(-(n - 1), n, dtype=np.int64)
    mesh = np.meshgrid(*([offsets] * grid.nu), indexing="ij")
    d2int = np.zeros(mesh[0].shape, dtype=np.int64)
    for m in mesh:
        d2int += m * m
    cells_sq = (R / h) ** 2
    cutoff = cells_sq * (1.0 + LATTICE_SLACK) + LATTICE_SLACK
    outside = d2int > cutoff
    coef = (4.0 * math.pi * s) ** (-grid.nu / 2.0)
    gauss = coef * np.exp(-(d2int[outside] * h * h) / (4.0 * s))
    lattice_tail = grid.weight * float(np.sum(gauss))

    half_cover = 2.0 * grid.half_width - h / 2.0
    beyond_box = 1.0 - math.erf(half_cover / (2.0 * math.sqrt(s))) ** grid.nu
    return F, lattice_tail + beyond_box


def d_kernel(grid: Grid, V: PotentialExpr, M: float, R: float) -> KernelMatrix:
    """0/1 proximity kernel chi(x) [|x-y| <= 2R] chi(y) on the sublevel set."""
    grid.require_dense_budget()
    chi = (potential_on_grid(grid, V) < M).astype(float)
    ball = _lattice_ball_mask(grid, 2.0 * R).astype(float)
    return KernelMatrix(grid, chi[:, None] * ball * chi[None, :])


def domination_check(C_MR: KernelMatrix, D: KernelMatrix) -> CompactnessDiagnostics:
    """Pointwise bound of the product kernel C*C by a multiple of D.

    Reports the smallest admissible c and verifies that the product kernel
    vanishes wherever D does; a violation is raised, since the truncation
    radii make off-support products impossible by construction.
    """
    if C_MR.grid != D.grid:
        raise ValueError("grid mismatch between the kernels")
    product = compose(adjoint(C_MR), C_MR)
    P = product.values
    support = D.values != 0.0
    peak = float(np.max(P)) if P.size else 0.0
    off = P[~support]
    off_max = float(np.max(np.abs(off))) if off.size else 0.0
    tol_support = 1e-14 * max(1.0, peak)
    if off_max > tol_support:
        raise ValueError(
            f"support violation: product reaches {off_max:.3e} where D "
            "vanishes (implementation bug, not a tunable)"
        )
    on = P[support]
    c = float(np.max(on)) if on.size else 0.0

    cols = np.any(C_MR.values != 0.0, axis=0)
    block = P[np.ix_(cols, cols)]
    if block.size:
        sv = C_MR.weight * np.linalg.svd(block, compute_uv=False)
    else:
        sv = np.zeros(0)
    hs = C_MR.weight * float(np.linalg.norm(P, "fro"))
    checks = (
        _bound("support-containment", off_max, 0.0, tol_support),
        _bound("dominated-by-c-D", float(np.max(P - c * D.values)) if P.size else 0.0,
               0.0, 1e-12 * max(1.0, c)),
    )
    return CompactnessDiagnostics(sv, hs, checks, {"c": c})


def kernel_power_bound(D: KernelMatrix, k: int, V: PotentialExpr, M: float,
                       R: float) -> CompactnessDiagnostics:
    """Local-measure bound on the k-th weighted power of the proximity kernel.

    D^k(x,y) counts weighted chains of k hops of length <= 2R through the
    sublevel set, so it is bounded by [|x-y| <= 2kR] * omega^{k-1} * chi(y)
    with omega the grid-counting local measure of the sublevel set at radius
    2kR -- the same argument as the continuum one, restricted to grid sums,
    hence exact up to roundoff.  The HS norm of D^k is reported against the
    integral bound (sup ball measure) * integral of omega^{2k-2}.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    grid = D.grid
    grid.require_dense_budget()
    w = D.weight
    P = D.values.copy()
    for _ in range(k - 1):
        P = w * (P @ D.values)

    chi = (potential_on_grid(grid, V) < M).astype(float)
    reach = _lattice_ball_mask(grid, 2.0 * k * R).astype(float)
    omega = w * (reach @ chi)
    bound_matrix = reach * (omega ** (k - 1))[None, :] * chi[None, :]

    scale = np.maximum(bound_matrix, 1e-300)
    rel_excess = float(np.max((P - bound_matrix) / scale))
    hs2 = w * w * float(np.sum(P**2))
    ball_sup = w * float(np.max(np.sum(reach, axis=0)))
    omega_integral = w * float(np.sum(chi * omega ** (2 * k - 2)))
    hs_bound = ball_sup * omega_integral

    idx = chi != 0.0
    block = P[np.ix_(idx, idx)]
    if block.size:
        sv = w * np.linalg.svd(block, compute_uv=False)
    else:
        sv = np.zeros(0)
    checks = (
        _bound("pointwise-power-bound", rel_excess, 0.0, 1e-9),
        _bound("hs-power-bound", hs2, hs_bound,
               1e-9 * max(hs_bound, 1e-300)),
    )
    constants = {
        "ball_measure_sup": ball_sup,
        "analytic_ball_volume": ball_volume(grid.nu, 2.0 * k * R),
        "omega_integral": omega_integral,
        "omega_max": float(np.max(omega * chi)) if chi.any() else 0.0,
    }
    return CompactnessDiagnostics(sv, math.sqrt(hs2), checks, constants)
