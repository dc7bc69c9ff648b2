"""Dense symmetric linear algebra plus an iterative eigensolver.

Covers the linear-algebra needs of the rest of the package: symmetric
eigendecomposition, singular values, matrix exponentials through the
eigenbasis, compound (antisymmetric power) matrices built from explicit
minors, their generators, spectra of products of positive semidefinite
matrices, and a deflated restarted Lanczos iteration for the smallest
eigenvalues of an opaque symmetric linear map.

Matrices serialize to a row-major text format (header line ``# rows cols``,
one whitespace-separated row per line, %.17g so float64 round-trips).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .sublevel import derived_rng

__all__ = [
    "SpectralDecomposition",
    "LanczosResult",
    "as_symmetric",
    "sym_eig",
    "singular_values",
    "spectral_norm",
    "expm_sym",
    "compound_matrix",
    "wedge_generator",
    "lanczos_extremal",
    "psd_product_spectrum",
    "save_matrix_text",
    "load_matrix_text",
]

SYMMETRY_TOLERANCE = 1e-12
WEDGE_BASIS_LIMIT = 10_000


def _as_matrix(A, square: bool = False) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {A.shape}")
    if A.size and not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if square and A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def as_symmetric(A) -> np.ndarray:
    """Check near-symmetry (1e-12 relative), then symmetrize exactly."""
    A = _as_matrix(A, square=True)
    if A.size == 0:
        raise ValueError("matrix must have dimension >= 1")
    scale = float(np.max(np.abs(A)))
    gap = float(np.max(np.abs(A - A.T)))
    if gap > SYMMETRY_TOLERANCE * scale:
        raise ValueError(
            f"matrix is not symmetric: max |A_ij - A_ji| = {gap:.3e} "
            f"exceeds {SYMMETRY_TOLERANCE:g} * max|A| = {SYMMETRY_TOLERANCE * scale:.3e}"
        )
    return (A + A.T) / 2.0


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted descending; eigenvector column j pairs with value j."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def sym_eig(A) -> SpectralDecomposition:
    """Full eigendecomposition of a symmetric matrix, values descending."""
    A = as_symmetric(A)
    lam, Q = np.linalg.eigh(A)
    return SpectralDecomposition(lam[::-1].copy(), Q[:, ::-1].copy())


def singular_values(A) -> np.ndarray:
    """Singular values of a general matrix, sorted descending."""
    A = _as_matrix(A)
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def spectral_norm(A) -> float:
    """Operator (largest singular) norm."""
    A = _as_matrix(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False)[0])


def expm_sym(A, t: float = 1.0) -> np.ndarray:
    """exp(t*A) for symmetric A, computed as Q exp(t*Lambda) Q^T.

    Raises OverflowError when some t*lambda exceeds 700, where float64
    exp() overflows; saturating silently would corrupt norm comparisons.
    """
    A = as_symmetric(A)
    t = float(t)
    lam, Q = np.linalg.eigh(A)
    scaled = t * lam
    peak = float(np.max(scaled))
    if peak > 700.0:
        raise OverflowError(
            f"t * lambda_max = {peak:.6g} exceeds 700; exp() would overflow float64"
        )
    E = (Q * np.exp(scaled)) @ Q.T
    return (E + E.T) / 2.0


def _lexicographic_subsets(d: int, n: int) -> list[tuple[int, ...]]:
    if not 1 <= n <= d:
        raise ValueError(f"order must satisfy 1 <= n <= {d}, got {n}")
    count = math.comb(d, n)
    if count > WEDGE_BASIS_LIMIT:
        raise ValueError(
            f"antisymmetric basis would have {count} elements "
            f"(limit {WEDGE_BASIS_LIMIT}): dimension overflow"
        )
    return list(combinations(range(d), n))


def compound_matrix(A, n: int) -> np.ndarray:
    """Antisymmetric n-th power: the matrix of all n x n minors of A.

    Rows and columns are indexed by the lexicographically ordered n-element
    subsets of the row and column indices of A.  Multiplicative over matrix
    products (Cauchy-Binet).
    """
    A = _as_matrix(A)
    m, p = A.shape
    rows = _lexicographic_subsets(m, n)
    cols = _lexicographic_subsets(p, n)
    if n == 1:
        return A.copy()
    row_idx = np.asarray(rows)
    col_idx = np.asarray(cols)
    out = np.empty((len(rows), len(cols)))
    # Minor determinants in batched chunks (LU under the hood) to bound memory.
    chunk = max(1, 4_000_000 // max(1, len(cols) * n * n))
    for start in range(0, len(rows), chunk):
        ri = row_idx[start : start + chunk]
        minors = A[ri[:, None, :, None], col_idx[None, :, None, :]]
        out[start : start + chunk] = np.linalg.det(minors)
    return out


def wedge_generator(A, n: int) -> np.ndarray:
    """Generator of the antisymmetric power semigroup.

    Returns the matrix G on the lexicographic subset basis with
    compound_matrix(expm_sym(A, t), n) == expm_sym(G, t): diagonal entries
    are sums of A over the subset, off-diagonal entries connect subsets
    differing in one index, with the alternating sign of the reordering.
    """
    A = as_symmetric(A)
    d = A.shape[0]
    subsets = _lexicographic_subsets(d, n)
    index = {S: i for i, S in enumerate(subsets)}
    out = np.zeros((len(subsets), len(subsets)))
    for i, S in enumerate(subsets):
        out[i, i] = float(sum(A[a, a] for a in S))
        inside = set(S)
        for pos_b, b in enumerate(S):
            for a in range(d):
                if a in inside:
                    continue
                T = tuple(sorted(inside - {b} | {a}))
                sign = -1.0 if (pos_b + T.index(a)) % 2 else 1.0
                out[index[T], i] = sign * A[a, b]
    return out


@dataclass(frozen=True)
class LanczosResult:
    """Smallest eigenvalues of a symmetric map with true residual norms.

    eigenvalues are ascending; residuals[i] = |A x_i - lambda_i x_i| / |x_i|
    recomputed with the raw map.  converged is False when the iteration
    stopped early (residual stagnation or budget); partial values are kept.
    """

    eigenvalues: np.ndarray
    residuals: np.ndarray
    converged: bool
    matvec_count: int
    note: str = ""


def _check_symmetry(matvec, dim: int, seed: int) -> int:
    rng = derived_rng(seed, "lanczos-symmetry")
    for _ in range(3):
        x = rng.standard_normal(dim)
        x /= np.linalg.norm(x)
        y = rng.standard_normal(dim)
        y /= np.linalg.norm(y)
        ax = np.asarray(matvec(x), dtype=float)
        ay = np.asarray(matvec(y), dtype=float)
        scale = max(1.0, float(np.linalg.norm(ax)), float(np.linalg.norm(ay)))
        gap = abs(float(ax @ y - x @ ay))
        if gap > 1e-8 * scale:
            raise ValueError(
                "map failed the probabilistic symmetry check: "
                f"|<Ax,y> - <x,Ay>| = {gap:.3e} > 1e-08 * {scale:.3e}"
            )
    return 6


def _project_out(w: np.ndarray, basis: np.ndarray) -> np.ndarray:
    if basis.shape[1]:
        w = w - basis @ (basis.T @ w)
    return w


def _tridiag_eig(alphas: list, betas: list):
    if len(alphas) == 1:
        return np.asarray(alphas, dtype=float), np.ones((1, 1))
    # The stev driver (QR iteration) is slower than stemr but does not give
    # up on the clustered tridiagonals long Krylov chains produce.
    return eigh_tridiagonal(np.asarray(alphas, dtype=float),
                            np.asarray(betas, dtype=float),
                            lapack_driver="stev")


def _lanczos_sweep(matvec, dim, deflation, rng, inner_cap, tol, need):
    """One restarted pass on the deflation-projected map.

    Returns (values, vectors, note, matvecs): the accepted ascending prefix
    of Ritz pairs whose residual estimate beta*|s| cleared tol * scale.
    """
    m_cap = min(inner_cap, dim - deflation.shape[1])
    if m_cap < 1:
        return np.zeros(0), np.zeros((dim, 0)), "deflation basis spans the space", 0
    start = rng.standard_normal(dim)
    for _ in range(2):
        start = _project_out(start, deflation)
    norm = float(np.linalg.norm(start))
    if norm < 1e-10:
        return np.zeros(0), np.zeros((dim, 0)), "start vector annihilated by deflation", 0

    V = np.empty((dim, m_cap))
    V[:, 0] = start / norm
    alphas: list[float] = []
    betas: list[float] = []
    matvecs = 0
    check_every = 10
    j = 0
    theta = S = None
    n_conv = 0
    invariant = False
    while True:
        w = np.asarray(matvec(V[:, j]), dtype=float)
        matvecs += 1
        alpha = float(V[:, j] @ w)
        alphas.append(alpha)
        for _ in range(2):
            w = _project_out(w, deflation)
            w = _project_out(w, V[:, : j + 1])
        beta = float(np.linalg.norm(w))
        m = j + 1
        scale_T = max(map(abs, alphas)) + max(betas, default=0.0)
        invariant = beta <= 1e-13 * max(1.0, scale_T)
        if m == m_cap or invariant or m % check_every == 0:
            theta, S = _tridiag_eig(alphas, betas)
            est = beta * np.abs(S[-1, :])
            thresh = tol * max(1.0, float(np.max(np.abs(theta))))
            n_conv = 0
            while n_conv < m and est[n_conv] <= thresh:
                n_conv += 1
            if invariant:
                n_conv = m
            if n_conv >= need or invariant or m == m_cap:
                break
        betas.append(beta)
        V[:, j + 1] = w / beta
        j += 1

    vals = theta[:n_conv].copy()
    vecs = V[:, : len(alphas)] @ S[:, :n_conv]
    note = "" if (n_conv >= need or invariant) else "inner iteration cap reached"
    return vals, vecs, note, matvecs


def lanczos_extremal(matvec, dim: int, k: int, max_iters: int = 600, seed: int = 0,
                     tol: float = 1e-12) -> LanczosResult:
    """k smallest eigenvalues of a symmetric linear map, with residuals.

    Restarted Lanczos with full reorthogonalization: each sweep runs on the
    map with previously accepted eigenvectors projected out, accepts the
    ascending prefix of converged Ritz pairs, and the iteration stops once a
    fresh sweep finds nothing below the current k-th smallest value (so
    repeated eigenvalues are recovered one copy per sweep).  The map is
    checked for symmetry probabilistically before any work.  Residuals are
    recomputed with the raw map; convergence claims rest on them.
    """
    dim = int(dim)
    k = int(k)
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    if not 1 <= k <= 30:
        raise ValueError(f"k must be between 1 and 30, got {k}")
    if k > dim:
        raise ValueError(f"k = {k} exceeds the dimension {dim}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    matvecs = _check_symmetry(matvec, dim, seed)
    rng = derived_rng(seed, "lanczos-start")
    deflation = np.zeros((dim, 0))
    found_vals: list[float] = []
    ok = True
    note = ""
    max_sweeps = 3 * k + 12
    sweep = 0
    while True:
        sweep += 1
        if sweep > max_sweeps:
            ok = False
            note = "restart budget exhausted before certification"
            break
        if deflation.shape[1] >= dim:
            break  # the whole space is resolved
        have = len(found_vals)
        need = 1 if have >= k else k - have
        vals, vecs, sweep_note, used = _lanczos_sweep(
            matvec, dim, deflation, rng, max_iters, tol, need
        )
        matvecs += used
        if have >= k:
            tau = float(np.partition(np.asarray(found_vals), k - 1)[k - 1])
            slack = 1e-10 * max(1.0, abs(tau))
            if vals.size == 0:
                ok = False
                note = sweep_note or "certificate sweep found no converged pair"
                break
            if vals[0] >= tau - slack:
                break  # nothing below the current k-th value remains
            keep = vals < tau - slack
            vals, vecs = vals[keep][:k], vecs[:, keep][:, :k]
        else:
            if vals.size == 0:
                ok = False
                note = sweep_note or "no Ritz pair converged (residual stagnation)"
                break
            cap = (k - have) + 2
            vals, vecs = vals[:cap], vecs[:, :cap]
        found_vals.extend(float(v) for v in vals)
        deflation = np.concatenate([deflation, vecs], axis=1)

    values = np.asarray(found_vals)
    order = np.argsort(values, kind="stable")[: min(k, len(found_vals))]
    eigenvalues = values[order]
    residuals = np.empty(order.size)
    for i, idx in enumerate(order):
        x = deflation[:, idx]
        ax = np.asarray(matvec(x), dtype=float)
        matvecs += 1
        residuals[i] = float(np.linalg.norm(ax - eigenvalues[i] * x) / np.linalg.norm(x))
    converged = ok and order.size == k
    return LanczosResult(eigenvalues, residuals, converged, matvecs, note)


def psd_product_spectrum(C, D) -> np.ndarray:
    """Eigenvalues (ascending) of C @ D for positive semidefinite C, D.

    Computed through the symmetric similarity C^{1/2} D C^{1/2}, so the
    result is real by construction and matches the spectrum of D @ C away
    from zero.
    """
    C = as_symmetric(C)
    D = as_symmetric(D)
    if C.shape != D.shape:
        raise ValueError(f"shape mismatch: {C.shape} vs {D.shape}")
    for name, M in (("first", C), ("second", D)):
        lam = np.linalg.eigvalsh(M)
        norm = max(abs(float(lam[0])), abs(float(lam[-1])))
        if float(lam[0]) < -1e-10 * max(norm, 1e-300):
            raise ValueError(
                f"{name} factor is not positive semidefinite "
                f"(smallest eigenvalue {lam[0]:.3e})"
            )
    lam, Q = np.linalg.eigh(C)
    root = (Q * np.sqrt(np.clip(lam, 0.0, None))) @ Q.T
    sym = root @ D @ root
    return np.linalg.eigvalsh((sym + sym.T) / 2.0)


def save_matrix_text(path, A) -> None:
    """Write a matrix in the row-major text fixture format.

    First line ``# rows cols``, then one whitespace-separated row per line
    at %.17g precision (float64 values survive a round trip exactly).
    """
    A = _as_matrix(A)
    np.savetxt(path, A, fmt="%.17g", header=f"{A.shape[0]} {A.shape[1]}", comments="# ")


def load_matrix_text(path) -> np.ndarray:
    """Read a matrix written by save_matrix_text."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
    if not header.startswith("#"):
        raise ValueError("missing '# rows cols' header line")
    try:
        rows, cols = (int(tok) for tok in header[1:].split())
    except ValueError as exc:
        raise ValueError(f"malformed header {header!r}") from exc
    A = np.loadtxt(path, ndmin=2)
    if A.shape != (rows, cols):
        raise ValueError(f"header promises shape {(rows, cols)}, file holds {A.shape}")
    return A
