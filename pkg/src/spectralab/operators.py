"""Discretized Schrodinger operators on boxes.

Cell-centered grids on [-L, L]^nu with the 2*nu+1 point Dirichlet stencil:
the grid has N = 2L/h points per axis at x_i = -L + (i + 1/2) h, which puts
the homogeneous Dirichlet walls at +-(L + h/2).  Spectra come from the
deflated Lanczos solver and are reported as box-stabilization evidence: a
truncated box always has discrete spectrum, so discreteness claims rest on
eigenvalues that stop moving as the box grows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg  # noqa: F401  (registers sparse.linalg)

from .linalg import lanczos_extremal
from .potentials import PotentialExpr, evaluate

__all__ = [
    "Grid",
    "SparseOperator",
    "SpectrumReport",
    "TruncationTable",
    "discrete_laplacian",
    "hamiltonian",
    "spectrum_study",
    "truncation_monotonicity",
]

SPARSE_POINT_BUDGET = 4_000_000
DENSE_POINT_BUDGET = 200_000
DENSE_ENTRY_BUDGET = 250_000_000
NEGATIVE_TOLERANCE = 1e-9
RESIDUAL_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Grid:
    """Cell-centered tensor grid on [-L, L]^nu with spacing h."""

    nu: int
    half_width: float
    spacing: float
    axis: np.ndarray = field(init=False, repr=False, compare=False)
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.nu not in (1, 2, 3):
            raise ValueError(f"nu must be 1, 2, or 3, got {self.nu}")
        L = float(self.half_width)
        h = float(self.spacing)
        if not (L > 0.0 and h > 0.0):
            raise ValueError("half_width and spacing must be positive")
        ratio = 2.0 * L / h
        n = round(ratio)
        if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"2L/h must be a positive integer, got {ratio}")
        if n**self.nu > SPARSE_POINT_BUDGET:
            raise ValueError(
                f"grid would have {n**self.nu} points "
                f"(limit {SPARSE_POINT_BUDGET})"
            )
        object.__setattr__(self, "half_width", L)
        object.__setattr__(self, "spacing", h)
        axis = -L + (np.arange(n) + 0.5) * h
        mesh = np.meshgrid(*([axis] * self.nu), indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "points", points)

    @property
    def points_per_axis(self) -> int:
        return self.axis.size

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def weight(self) -> float:
        return self.spacing**self.nu

    def require_dense_budget(self) -> None:
        """Guard for operations that materialize size x size kernels."""
        if self.size > DENSE_POINT_BUDGET or self.size**2 > DENSE_ENTRY_BUDGET:
            raise ValueError(
                f"dense kernel on {self.size} points ({self.size**2} entries) "
                f"exceeds the budget ({DENSE_POINT_BUDGET} points, "
                f"{DENSE_ENTRY_BUDGET} entries)"
            )


@dataclass(frozen=True)
class SparseOperator:
    """CSR-backed symmetric operator with an explicit symmetry flag."""

    dimension: int
    matrix: sparse.csr_matrix = field(repr=False, compare=False)
    symmetric: bool

    def __post_init__(self):
        if self.matrix.shape != (self.dimension, self.dimension):
            raise ValueError("matrix shape does not match the declared dimension")
        if self.symmetric:
            gap = sparse.linalg.norm(self.matrix - self.matrix.T, ord=np.inf)
            scale = sparse.linalg.norm(self.matrix, ord=np.inf)
            if gap > 1e-12 * max(scale, 1e-300):
                raise ValueError("symmetric flag set on a nonsymmetric matrix")

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _second_difference(n: int, h: float) -> sparse.csr_matrix:
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    return sparse.diags([off, main, off], offsets=(-1, 0, 1), format="csr")


def discrete_laplacian(grid: Grid) -> SparseOperator:
    """Dirichlet finite-difference Laplacian (positive semidefinite)."""
    n = grid.points_per_axis
    T = _second_difference(n, grid.spacing)
    eye = sparse.identity(n, format="csr")
    total = None
    for axis_index in range(grid.nu):
        factors = [T if j == axis_index else eye for j in range(grid.nu)]
        term = factors[0]
        for f in factors[1:]:
            term = sparse.kron(term, f, format="csr")
        total = term if total is None else total + term
    return SparseOperator(grid.size, total.tocsr(), symmetric=True)


def potential_on_grid(grid: Grid, V: PotentialExpr) -> np.ndarray:
    """Values of V at the cell centers, guarded against negativity."""
    if V.dimension != grid.nu:
        raise ValueError(
            f"potential has dimension {V.dimension}, grid has nu = {grid.nu}"
        )
    values = evaluate(V, grid.points)
    low = float(np.min(values))
    if low < -NEGATIVE_TOLERANCE:
        raise ValueError(
            f"negative potential value {low:.6g} at a grid point "
            f"(tolerance {NEGATIVE_TOLERANCE:g})"
        )
    return values


def hamiltonian(grid: Grid, V: PotentialExpr) -> SparseOperator:
    """H = discrete Laplacian + multiplication by V at the cell centers."""
    values = potential_on_grid(grid, V)
    lap = discrete_laplacian(grid)
    H = lap.matrix + sparse.diags(values, format="csr")
    return SparseOperator(grid.size, H.tocsr(), symmetric=True)


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues per box size with drift, counting, and a verdict.

    eigenvalues[j] holds the ascending values kept at schedule[j] (only
    values whose Lanczos residual cleared the residual tolerance are kept);
    drift[j] compares schedule[j] to schedule[j+1] entrywise relative to the
    larger box.  counting[j][i] counts kept eigenvalues <= count_levels[i]
    (a window-limited count: eigenvalues beyond the computed k are unseen).
    verdict is "stabilized" when the final drift row exists, is complete,
    and stays within 1 percent.
    """

    potential: str
    schedule: tuple
    spacing: float
    k: int
    eigenvalues: tuple
    residuals: tuple
    drift: tuple
    count_levels: tuple
    counting: tuple
    verdict: str
    notes: tuple


def spectrum_study(V: PotentialExpr, schedule, h: float, k: int, seed: int = 0,
                   max_iters: int = 600, tol: float = 3e-11, count_levels=(),
                   residual_tolerance: float = RESIDUAL_TOLERANCE) -> SpectrumReport:
    """k lowest eigenvalues of H across a growing-box schedule at fixed h.

    The verdict is box-stabilization evidence, not a proof: "stabilized"
    means the lowest k eigenvalues moved by at most 1 percent between the
    two largest boxes and every kept value has residual below the
    tolerance.  Lanczos failures are propagated as notes with partial data.
    """
    schedule = tuple(float(L) for L in schedule)
    if len(schedule) < 2:
        raise ValueError("schedule needs at least two box sizes")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    count_levels = tuple(float(level) for level in count_levels)

    kept_values = []
    kept_residuals = []
    notes = []
    for L in schedule:
        grid = Grid(V.dimension, L, h)
        H = hamiltonian(grid, V)
        result = lanczos_extremal(H.matvec, grid.size, k, max_iters=max_iters,
                                  seed=seed, tol=tol)
        if not result.converged and result.note:
            notes.append(f"L={L:g}: {result.note}")
        values = result.eigenvalues
        residuals = result.residuals
        keep = 0
        while keep < values.size and residuals[keep] <= residual_tolerance:
            keep += 1
        if keep < values.size:
            notes.append(
                f"L={L:g}: kept {keep} of {values.size} eigenvalues "
                f"(residual tolerance {residual_tolerance:g})"
            )
        kept_values.append(values[:keep].copy())
        kept_residuals.append(residuals[:keep].copy())

    drift = []
    for a, b in zip(kept_values, kept_values[1:]):
        m = min(a.size, b.size)
        denom = np.maximum(np.abs(b[:m]), 1e-300)
        drift.append(np.abs(b[:m] - a[:m]) / denom)

    counting = tuple(
        tuple(int(np.sum(vals <= level)) for level in count_levels)
        for vals in kept_values
    )

    final = drift[-1]
    complete = kept_values[-1].size == k and kept_values[-2].size == k
    stabilized = complete and final.size == k and bool(np.all(final <= 0.01))
    return SpectrumReport(
        potential=V.source,
        schedule=schedule,
        spacing=float(h),
        k=int(k),
        eigenvalues=tuple(kept_values),
        residuals=tuple(kept_residuals),
        drift=tuple(drift),
        count_levels=count_levels,
        counting=counting,
        verdict="stabilized" if stabilized else "not-stabilized",
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class TruncationTable:
    """Lowest eigenvalues of -Laplacian + min(V, level) per truncation level."""

    levels: tuple
    eigenvalues: np.ndarray
    residuals: np.ndarray
    notes: tuple


def truncation_monotonicity(V: PotentialExpr, levels, grid: Grid, eig_count: int,
                            seed: int = 0, max_iters: int = 600,
                            tol: float = 3e-11) -> TruncationTable:
    """Eigenvalue table of the truncated potentials min(V, level).

    levels must be increasing; math.inf rows use V untruncated.  Each row is
    computed with the same Lanczos seed, so rows at levels above max(V) are
    float-identical.
    """
    levels = tuple(float(level) for level in levels)
    if len(levels) < 1:
        raise ValueError("need at least one truncation level")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    values = potential_on_grid(grid, V)
    lap = discrete_laplacian(grid).matrix
    table = np.empty((len(levels), eig_count))
    residuals = np.empty((len(levels), eig_count))
    notes = []
    for row, level in enumerate(levels):
        truncated = values if np.isinf(level) else np.minimum(values, level)
        H = (lap + sparse.diags(truncated, format="csr")).tocsr()
        result = lanczos_extremal(lambda x: H @ x, grid.size, eig_count,
                                  max_iters=max_iters, seed=seed, tol=tol)
        if not result.converged:
            notes.append(f"level={level:g}: {result.note or 'not converged'}")
        got = result.eigenvalues.size
        table[row, :got] = result.eigenvalues
        table[row, got:] = np.nan
        residuals[row, :got] = result.residuals
        residuals[row, got:] = np.nan
    return TruncationTable(levels, table, residuals, tuple(notes))
