"""Finite-dimensional semigroup norm and trace inequalities.

Every check reports both sides of the comparison: the norm inequality for
exp(-(A+B)) against split products (plain and symmetrized forms), the trace
inequality, agreement of product spectra under reversal, the Trotter-chain
values with their cap and limit references, antisymmetric-power norm
identities, and the geometric-mean compactness proxy built from singular
values.

Tolerance conventions: 1e-10 relative for algebraic identities at small
dimension, 1e-8 for anything routed through compound matrices (minor
determinants amplify roundoff).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .linalg import (
    as_symmetric,
    compound_matrix,
    expm_sym,
    psd_product_spectrum,
    singular_values,
    spectral_norm,
)
from .sublevel import derived_rng

__all__ = [
    "InequalityReport",
    "SpectrumMatchReport",
    "TrotterSequence",
    "WedgeChainReport",
    "segal",
    "golden_thompson",
    "half_product_bound",
    "product_spectrum_match",
    "trotter_sequence",
    "wedge_norm_identity",
    "wedge_segal_chain",
    "compactness_proxy",
    "inequality_batch",
    "batch_summary",
]

TOL_ALGEBRAIC = 1e-10
TOL_COMPOUND = 1e-8
CHAIN_BASIS_LIMIT = 1_000


@dataclass(frozen=True)
class InequalityReport:
    """Two sides of a comparison with its margin and verdict.

    margin = rhs - lhs.  For plain reports passed means
    margin >= -tol_rel * max(|lhs|, |rhs|); for equality-form reports
    (equality=True) it means |margin| <= tol_rel * max(|lhs|, |rhs|).
    inputs carries the seed/dimension digest of the generating trial.
    """

    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    tol_rel: float
    inputs: dict
    equality: bool = False


def _report(name, lhs, rhs, tol_rel, seed=None, dimension=None, equality=False,
            extra=None) -> InequalityReport:
    lhs = float(lhs)
    rhs = float(rhs)
    margin = rhs - lhs
    scale = max(abs(lhs), abs(rhs))
    if equality:
        passed = abs(margin) <= tol_rel * scale
    else:
        passed = margin >= -tol_rel * scale
    inputs = {"seed": seed, "dimension": dimension}
    if extra:
        inputs.update(extra)
    return InequalityReport(name, lhs, rhs, margin, bool(passed), float(tol_rel),
                            inputs, equality)


def _require_psd(M: np.ndarray, label: str) -> None:
    lam = np.linalg.eigvalsh(M)
    norm = max(abs(float(lam[0])), abs(float(lam[-1])))
    if float(lam[0]) < -1e-10 * max(norm, 1e-300):
        raise ValueError(
            f"{label} must be positive semidefinite (smallest eigenvalue {lam[0]:.3e})"
        )


def segal(A, B, form: str = "plain", tol_rel: float = TOL_ALGEBRAIC,
          seed=None) -> InequalityReport:
    """Norm bound for the sum exponential against split products.

    lhs = |exp(-(A+B))|.  form="plain" compares against |exp(-A) exp(-B)|,
    form="symmetric" against |exp(-B/2) exp(-A) exp(-B/2)|.  Both require
    positive semidefinite inputs.
    """
    if form not in ("plain", "symmetric"):
        raise ValueError(f"form must be 'plain' or 'symmetric', got {form!r}")
    A = as_symmetric(A)
    B = as_symmetric(B)
    _require_psd(A, "A")
    _require_psd(B, "B")
    lhs = spectral_norm(expm_sym(A + B, -1.0))
    if form == "plain":
        rhs = spectral_norm(expm_sym(A, -1.0) @ expm_sym(B, -1.0))
    else:
        half = expm_sym(B, -0.5)
        rhs = spectral_norm(half @ expm_sym(A, -1.0) @ half)
    return _report(f"segal-{form}", lhs, rhs, tol_rel, seed=seed, dimension=A.shape[0])


def golden_thompson(A, B, tol_rel: float = TOL_ALGEBRAIC, seed=None) -> InequalityReport:
    """Trace of exp(-(A+B)) against the trace of the split product.

    Holds for all symmetric inputs; positivity is not required.
    """
    A = as_symmetric(A)
    B = as_symmetric(B)
    lhs = float(np.trace(expm_sym(A + B, -1.0)))
    rhs = float(np.trace(expm_sym(A, -1.0) @ expm_sym(B, -1.0)))
    return _report("golden-thompson", lhs, rhs, tol_rel, seed=seed,
                   dimension=A.shape[0])


def half_product_bound(A, B, tol_rel: float = TOL_ALGEBRAIC, seed=None) -> InequalityReport:
    """Squared half-step product norm against the full product norm.

    lhs = |exp(-A/2) exp(-B/2)|^2, rhs = |exp(-A) exp(-B)|.
    """
    A = as_symmetric(A)
    B = as_symmetric(B)
    _require_psd(A, "A")
    _require_psd(B, "B")
    lhs = spectral_norm(expm_sym(A, -0.5) @ expm_sym(B, -0.5)) ** 2
    rhs = spectral_norm(expm_sym(A, -1.0) @ expm_sym(B, -1.0))
    return _report("half-product-square", lhs, rhs, tol_rel, seed=seed,
                   dimension=A.shape[0])


@dataclass(frozen=True)
class SpectrumMatchReport:
    """Sorted nonzero spectra of both product orders and their deviation."""

    cd_spectrum: np.ndarray
    dc_spectrum: np.ndarray
    max_gap: float
    scale: float
    tol: float
    passed: bool


def _nonzero_part(values: np.ndarray, cutoff: float) -> np.ndarray:
    return values[np.abs(values) > cutoff]


def product_spectrum_match(C, D, tol: float = 1e-8) -> SpectrumMatchReport:
    """Agreement of the nonzero spectra of C @ D and D @ C.

    Two supported shapes: a column C (m x 1) against a row D (1 x m), where
    both products have the single nonzero eigenvalue D @ C; and a pair of
    same-sized positive semidefinite symmetric matrices, handled through the
    symmetric similarity of each order.  Anything else is rejected.
    """
    C = np.asarray(C, dtype=float)
    D = np.asarray(D, dtype=float)
    if C.ndim != 2 or D.ndim != 2:
        raise ValueError("factors must be 2-d matrices")
    if max(*C.shape, *D.shape) > 12:
        raise ValueError("factors larger than 12 in any direction are not supported")
    if C.shape[1] == 1 and D.shape[0] == 1 and C.shape[0] == D.shape[1]:
        value = float((D @ C)[0, 0])
        cd = np.array([value])
        dc = np.array([value])
        scale = max(abs(value), 1e-300)
        cutoff = 1e-12 * scale
        nz_cd, nz_dc = _nonzero_part(cd, cutoff), _nonzero_part(dc, cutoff)
        gap = 0.0
    elif C.shape == D.shape and C.shape[0] == C.shape[1]:
        cd = psd_product_spectrum(C, D)
        dc = psd_product_spectrum(D, C)
        scale = max(float(np.max(np.abs(cd))), float(np.max(np.abs(dc))), 1e-300)
        gap = float(np.max(np.abs(cd - dc)))
        cutoff = 1e-12 * scale
        nz_cd, nz_dc = _nonzero_part(cd, cutoff), _nonzero_part(dc, cutoff)
        if nz_cd.size != nz_dc.size:
            # Rank read differently across the orders: compare after padding
            # the shorter list with zeros at the small end.
            width = max(nz_cd.size, nz_dc.size)
            pad_cd = np.concatenate([np.zeros(width - nz_cd.size), nz_cd])
            pad_dc = np.concatenate([np.zeros(width - nz_dc.size), nz_dc])
            gap = max(gap, float(np.max(np.abs(pad_cd - pad_dc))))
    else:
        raise ValueError(
            "supported factor shapes are (m,1)x(1,m) or a same-shape symmetric "
            f"positive semidefinite pair; got {C.shape} x {D.shape}"
        )
    passed = gap <= tol * scale
    return SpectrumMatchReport(nz_cd, nz_dc, gap, scale, float(tol), bool(passed))


@dataclass(frozen=True)
class TrotterSequence:
    """Norms of the doubling product chain with cap and limit references.

    values[i] = |(exp(-A/2^n) exp(-B/2^n))^(2^n)| at n = indices[i];
    cap_reference = |exp(-A) exp(-B)| bounds every value from above and
    limit_reference = |exp(-(A+B))| is the n -> infinity limit.
    """

    indices: np.ndarray
    values: np.ndarray
    limit_reference: float
    cap_reference: float


def trotter_sequence(A, B, n_max: int = 12) -> TrotterSequence:
    """Doubling chain of split-product norms for a positive semidefinite pair."""
    if not 0 <= n_max <= 14:
        raise ValueError(f"n_max must be between 0 and 14, got {n_max}")
    A = as_symmetric(A)
    B = as_symmetric(B)
    _require_psd(A, "A")
    _require_psd(B, "B")
    values = np.empty(n_max + 1)
    for n in range(n_max + 1):
        step = 2.0 ** (-n)
        M = expm_sym(A, -step) @ expm_sym(B, -step)
        for _ in range(n):
            M = M @ M
        values[n] = spectral_norm(M)
    limit = spectral_norm(expm_sym(A + B, -1.0))
    cap = spectral_norm(expm_sym(A, -1.0) @ expm_sym(B, -1.0))
    return TrotterSequence(np.arange(n_max + 1), values, limit, cap)


def wedge_norm_identity(A, n: int, tol_rel: float = 1e-9, seed=None) -> InequalityReport:
    """Equality of the compound-matrix norm with the singular-value product."""
    A = np.asarray(A, dtype=float)
    lhs = spectral_norm(compound_matrix(A, n))
    mu = singular_values(A)
    rhs = float(np.prod(mu[:n]))
    return _report("wedge-norm-identity", lhs, rhs, tol_rel, seed=seed,
                   dimension=A.shape[0], equality=True, extra={"order": n})


@dataclass(frozen=True)
class WedgeChainReport:
    """Inequality and multiplicativity halves of the compound-power chain."""

    order: int
    inequality: InequalityReport
    multiplicativity: InequalityReport


def wedge_segal_chain(A, B, n: int, tol_rel: float = 1e-9, seed=None) -> WedgeChainReport:
    """Compound-power norm chain for a positive semidefinite pair.

    inequality: |wedge_n(exp(-(A+B)))| <= |wedge_n(exp(-A)) wedge_n(exp(-B))|;
    multiplicativity: that right side equals |wedge_n(exp(-A) exp(-B))|.
    At n = 1 the compound power is an exact copy, so the inequality half
    coincides with segal(A, B, "plain") float for float.
    """
    A = as_symmetric(A)
    B = as_symmetric(B)
    _require_psd(A, "A")
    _require_psd(B, "B")
    d = A.shape[0]
    if math.comb(d, n) > CHAIN_BASIS_LIMIT:
        raise ValueError(
            f"antisymmetric basis would have {math.comb(d, n)} elements "
            f"(limit {CHAIN_BASIS_LIMIT}): dimension overflow"
        )
    EA = expm_sym(A, -1.0)
    EB = expm_sym(B, -1.0)
    lhs = spectral_norm(compound_matrix(expm_sym(A + B, -1.0), n))
    split = spectral_norm(compound_matrix(EA, n) @ compound_matrix(EB, n))
    product = spectral_norm(compound_matrix(EA @ EB, n))
    inequality = _report("wedge-segal-chain", lhs, split, tol_rel, seed=seed,
                         dimension=d, extra={"order": n})
    multiplicativity = _report("wedge-multiplicativity", split, product, tol_rel,
                               seed=seed, dimension=d, equality=True,
                               extra={"order": n})
    return WedgeChainReport(n, inequality, multiplicativity)


def compactness_proxy(mu_or_operator, n_max: int) -> np.ndarray:
    """Geometric means g(n) = (mu_1 ... mu_n)^(1/n) for n = 1..n_max.

    Accepts a sorted singular-value list or a matrix (whose singular values
    are then taken).  Computed in the log domain; g is nonincreasing since
    the input is sorted descending.
    """
    mu = np.asarray(mu_or_operator, dtype=float)
    if mu.ndim == 2:
        mu = singular_values(mu)
    elif mu.ndim != 1:
        raise ValueError("expected a singular value list or a matrix")
    if np.any(mu < 0):
        raise ValueError("singular values must be nonnegative")
    if np.any(np.diff(mu) > 0):
        raise ValueError("singular values must be sorted descending")
    if not 1 <= n_max <= mu.size:
        raise ValueError(f"n_max must be between 1 and {mu.size}, got {n_max}")
    head = mu[:n_max]
    with np.errstate(divide="ignore"):
        logs = np.log(head)
    counts = np.arange(1, n_max + 1, dtype=float)
    return np.exp(np.cumsum(logs) / counts)


def _spectrum_agreement_report(match: SpectrumMatchReport, tol_rel: float,
                               seed, dimension) -> InequalityReport:
    deviation = match.max_gap / match.scale
    return _report("product-spectrum-agreement", deviation, tol_rel, tol_rel,
                   seed=seed, dimension=dimension)


def inequality_batch(trials: int = 500, dims=(2, 3, 4, 5, 6, 7, 8),
                     master_seed: int = 0, tol_rel: float = TOL_ALGEBRAIC) -> list:
    """Seeded sweep of the norm/trace/spectrum checks on random PSD pairs.

    Each trial draws G, H with i.i.d. standard normal entries at a dimension
    cycled from `dims` and tests the pair (G G^T, H H^T).  Returns the flat
    list of InequalityReports (five per trial).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dims = tuple(int(d) for d in dims)
    if not dims or min(dims) < 1:
        raise ValueError("dims must be a nonempty tuple of positive integers")
    reports = []
    for t in range(trials):
        d = dims[t % len(dims)]
        rng = derived_rng(master_seed, "inequality-batch", t)
        G = rng.standard_normal((d, d))
        H = rng.standard_normal((d, d))
        A = G @ G.T
        B = H @ H.T
        match = product_spectrum_match(A, B, tol=tol_rel)
        row = [
            segal(A, B, "plain", tol_rel=tol_rel, seed=master_seed),
            segal(A, B, "symmetric", tol_rel=tol_rel, seed=master_seed),
            golden_thompson(A, B, tol_rel=tol_rel, seed=master_seed),
            half_product_bound(A, B, tol_rel=tol_rel, seed=master_seed),
            _spectrum_agreement_report(match, tol_rel, master_seed, d),
        ]
        for rep in row:
            reports.append(replace(rep, inputs={**rep.inputs, "trial": t}))
    return reports


def batch_summary(reports) -> list:
    """Per-check rows (name, trials, min_margin, pass_rate) from a report list."""
    order: list[str] = []
    grouped: dict[str, list[InequalityReport]] = {}
    for rep in reports:
        if rep.name not in grouped:
            grouped[rep.name] = []
            order.append(rep.name)
        grouped[rep.name].append(rep)
    rows = []
    for name in order:
        group = grouped[name]
        rows.append({
            "name": name,
            "trials": len(group),
            "min_margin": min(rep.margin for rep in group),
            "pass_rate": sum(1 for rep in group if rep.passed) / len(group),
        })
    return rows
