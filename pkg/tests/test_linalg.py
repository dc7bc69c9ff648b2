"""Tests for the dense linear algebra core and the Lanczos solver.

Independent oracle routes used here:
  - scipy.linalg.expm (Pade scaling-and-squaring) cross-checks expm_sym,
    which goes through the eigendecomposition instead;
  - Gram-matrix eigenvalues cross-check singular_values (SVD route);
  - products of singular values cross-check compound-matrix norms;
  - the nonsymmetric eigenvalue solver cross-checks psd_product_spectrum,
    which only ever forms symmetric matrices;
  - the analytic discrete sine-mode eigenvalues check Lanczos on the 1-d
    second-difference matrix.
"""

import numpy as np
import pytest
import scipy.linalg

from spectralab.linalg import (
    LanczosResult,
    SpectralDecomposition,
    as_symmetric,
    compound_matrix,
    expm_sym,
    lanczos_extremal,
    load_matrix_text,
    psd_product_spectrum,
    save_matrix_text,
    singular_values,
    spectral_norm,
    sym_eig,
    wedge_generator,
)


def random_symmetric(rng, d):
    G = rng.standard_normal((d, d))
    return (G + G.T) / 2.0


def random_psd(rng, d):
    G = rng.standard_normal((d, d))
    return G @ G.T


# ---------------------------------------------------------------- symmetry


def test_as_symmetric_symmetrizes_exactly():
    A = np.array([[1.0, 2.0], [2.0 + 1e-14, 3.0]])
    S = as_symmetric(A)
    assert np.array_equal(S, S.T)


def test_as_symmetric_rejects_asymmetry():
    with pytest.raises(ValueError, match="not symmetric"):
        as_symmetric(np.array([[1.0, 2.0], [2.5, 3.0]]))


def test_as_symmetric_rejects_nonfinite_and_nonsquare():
    with pytest.raises(ValueError, match="non-finite"):
        as_symmetric(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="square"):
        as_symmetric(np.ones((2, 3)))


# ----------------------------------------------------------------- sym_eig


def test_sym_eig_diagonal_examples():
    dec = sym_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(dec.eigenvalues, [3.0, 2.0, 1.0], rtol=0, atol=1e-14)
    dec = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(dec.eigenvalues, [1.0, -1.0], rtol=0, atol=1e-14)


def test_sym_eig_reconstruction_and_orthonormality():
    # 100 seeded draws across dimensions up to 16.
    rng = np.random.default_rng(11)
    for trial in range(100):
        d = int(rng.integers(1, 17))
        A = random_symmetric(rng, d)
        dec = sym_eig(A)
        norm = max(spectral_norm(A), 1e-300)
        assert spectral_norm(dec.reconstruct() - A) <= 1e-10 * norm
        gram = dec.eigenvectors.T @ dec.eigenvectors
        assert spectral_norm(gram - np.eye(d)) <= 1e-10
        assert np.all(np.diff(dec.eigenvalues) <= 0)


# ---------------------------------------------------------- singular values


def test_singular_values_examples():
    assert np.allclose(singular_values(np.diag([2.0, -5.0])), [5.0, 2.0], atol=1e-14)
    rng = np.random.default_rng(3)
    u = rng.standard_normal(5)
    u /= np.linalg.norm(u)
    v = rng.standard_normal(7)
    v /= np.linalg.norm(v)
    mu = singular_values(np.outer(u, v))
    assert abs(mu[0] - 1.0) <= 1e-12
    assert np.all(mu[1:] <= 1e-12)


def test_singular_values_match_gram_oracle():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((6, 4))
    mu = singular_values(A)
    gram_eigs = np.linalg.eigvalsh(A.T @ A)[::-1]
    oracle = np.sqrt(np.clip(gram_eigs, 0.0, None))
    assert np.allclose(mu, oracle, rtol=1e-10, atol=1e-12)
    assert np.all(np.diff(mu) <= 0) and np.all(mu >= 0)


def test_min_max_random_subspaces_upper_bound_mu_n():
    # Any n-1 constraint vectors give sup |A psi| over the complement,
    # which can only overshoot the n-th singular value.
    rng = np.random.default_rng(5)
    for _ in range(10):
        d = int(rng.integers(3, 8))
        A = rng.standard_normal((d, d))
        mu = singular_values(A)
        n = int(rng.integers(2, d + 1))
        constraints = rng.standard_normal((d, n - 1))
        Q, _ = np.linalg.qr(constraints, mode="complete")
        complement = Q[:, n - 1 :]
        bound = spectral_norm(A @ complement)
        assert mu[n - 1] <= bound + 1e-12


# ---------------------------------------------------------------- expm_sym


def test_expm_sym_trivial_cases():
    assert np.allclose(expm_sym(np.zeros((2, 2)), -1.0), np.eye(2), atol=1e-14)
    E = expm_sym(np.diag([1.0, 2.0]), -1.0)
    assert np.allclose(E, np.diag([np.exp(-1.0), np.exp(-2.0)]), atol=1e-14)
    A = random_symmetric(np.random.default_rng(6), 5)
    assert np.allclose(expm_sym(A, 0.0), np.eye(5), rtol=0, atol=1e-12)


def test_expm_sym_semigroup_law():
    rng = np.random.default_rng(7)
    A = random_psd(rng, 5)
    s, t = 0.3, 0.9
    lhs = expm_sym(A, -(s + t))
    rhs = expm_sym(A, -s) @ expm_sym(A, -t)
    assert spectral_norm(lhs - rhs) <= 1e-10 * spectral_norm(lhs)


def test_expm_sym_matches_pade_oracle():
    rng = np.random.default_rng(8)
    for t in (-1.0, 0.3, 2.0):
        A = random_symmetric(rng, 6)
        ours = expm_sym(A, t)
        oracle = scipy.linalg.expm(t * A)
        assert spectral_norm(ours - oracle) <= 1e-10 * spectral_norm(oracle)


def test_expm_sym_overflow_reported():
    with pytest.raises(OverflowError, match="700"):
        expm_sym(np.diag([800.0, 1.0]), 1.0)
    with pytest.raises(OverflowError, match="700"):
        expm_sym(np.diag([-800.0, 1.0]), -1.0)
    # Large negative exponents underflow harmlessly instead.
    E = expm_sym(np.diag([800.0, 1.0]), -1.0)
    assert E[0, 0] == 0.0


# --------------------------------------------------------- compound matrix


def test_compound_matrix_examples():
    C = compound_matrix(np.diag([3.0, 2.0, 1.0]), 2)
    assert np.allclose(C, np.diag([6.0, 3.0, 2.0]), atol=1e-12)
    assert abs(spectral_norm(C) - 6.0) <= 1e-12
    for n in (1, 2, 3, 4):
        I = compound_matrix(np.eye(4), n)
        assert np.allclose(I, np.eye(I.shape[0]), atol=1e-12)


def test_compound_matrix_order_one_is_a_copy():
    A = np.random.default_rng(9).standard_normal((3, 5))
    C = compound_matrix(A, 1)
    assert np.array_equal(C, A)
    assert C is not A


def test_compound_matrix_cauchy_binet():
    rng = np.random.default_rng(10)
    A = rng.standard_normal((5, 4))
    B = rng.standard_normal((4, 6))
    for n in (2, 3):
        lhs = compound_matrix(A @ B, n)
        rhs = compound_matrix(A, n) @ compound_matrix(B, n)
        assert spectral_norm(lhs - rhs) <= 1e-9 * max(spectral_norm(rhs), 1e-300)


def test_compound_norm_is_product_of_singular_values():
    rng = np.random.default_rng(12)
    for trial in range(20):
        d = int(rng.integers(2, 7))
        n = int(rng.integers(1, min(3, d) + 1))
        A = rng.standard_normal((d, d))
        mu = singular_values(A)
        expected = float(np.prod(mu[:n]))
        got = spectral_norm(compound_matrix(A, n))
        assert abs(got - expected) <= 1e-9 * max(expected, 1e-300)


def test_compound_matrix_guards():
    with pytest.raises(ValueError, match="dimension overflow"):
        compound_matrix(np.eye(25), 12)
    with pytest.raises(ValueError, match="order"):
        compound_matrix(np.ones((3, 3)), 4)
    with pytest.raises(ValueError, match="order"):
        compound_matrix(np.ones((3, 3)), 0)


# --------------------------------------------------------- wedge generator


def test_wedge_generator_diagonal_and_zero():
    G = wedge_generator(np.diag([4.0, 7.0, 9.0]), 2)
    assert np.allclose(G, np.diag([11.0, 13.0, 16.0]), atol=1e-14)
    assert np.array_equal(wedge_generator(np.zeros((4, 4)), 2), np.zeros((6, 6)))


def test_wedge_generator_is_symmetric():
    A = random_symmetric(np.random.default_rng(13), 5)
    G = wedge_generator(A, 3)
    assert np.array_equal(G, G.T)


def test_wedge_generator_matches_compound_of_exponential():
    rng = np.random.default_rng(14)
    A = random_symmetric(rng, 4)
    lhs = compound_matrix(expm_sym(A, -1.0), 2)
    rhs = expm_sym(wedge_generator(A, 2), -1.0)
    assert spectral_norm(lhs - rhs) <= 1e-8 * spectral_norm(rhs)


def test_wedge_semigroup_identity_psd():
    rng = np.random.default_rng(15)
    for trial in range(5):
        A = random_psd(rng, 5)
        for n in (2, 3):
            G = wedge_generator(A, n)
            for t in (0.1, 1.0):
                lhs = compound_matrix(expm_sym(A, -t), n)
                rhs = expm_sym(G, -t)
                assert spectral_norm(lhs - rhs) <= 1e-8 * max(spectral_norm(rhs), 1e-300)


# ----------------------------------------------------------------- lanczos


def test_lanczos_diagonal_map():
    diag = np.arange(1.0, 101.0)
    res = lanczos_extremal(lambda v: diag * v, dim=100, k=3, seed=1)
    assert res.converged
    assert np.allclose(res.eigenvalues, [1.0, 2.0, 3.0], rtol=0, atol=1e-8)
    assert np.all(res.residuals <= 1e-8)


def test_lanczos_identity_reports_repeated_eigenvalue():
    res = lanczos_extremal(lambda v: v.copy(), dim=37, k=2, seed=2)
    assert res.converged
    assert np.allclose(res.eigenvalues, [1.0, 1.0], rtol=0, atol=1e-12)
    assert np.all(res.residuals <= 1e-10)


def test_lanczos_degenerate_diagonal():
    diag = np.array([5.0, 1.0, 2.0, 1.0, 4.0, 3.0, 6.0, 8.0])
    res = lanczos_extremal(lambda v: diag * v, dim=8, k=3, seed=3)
    assert res.converged
    assert np.allclose(res.eigenvalues, [1.0, 1.0, 2.0], rtol=0, atol=1e-10)


def test_lanczos_dirichlet_laplacian_smallest_mode():
    h = 1.0 / 1000.0
    dim = 999

    def laplacian(v):
        w = 2.0 * v.copy()
        w[:-1] -= v[1:]
        w[1:] -= v[:-1]
        return w / h**2

    res = lanczos_extremal(laplacian, dim=dim, k=1, max_iters=dim, seed=4)
    assert res.converged
    analytic = 4.0 * np.sin(np.pi * h / 2.0) ** 2 / h**2
    assert abs(res.eigenvalues[0] - analytic) <= 1e-8 * analytic
    assert abs(res.eigenvalues[0] - np.pi**2) <= 1e-3 * np.pi**2


def test_lanczos_symmetry_check_rejects_nonsymmetric_map():
    with pytest.raises(ValueError, match="symmetry"):
        lanczos_extremal(lambda v: np.roll(v, 1), dim=50, k=1, seed=5)


def test_lanczos_partial_results_on_tiny_budget():
    h = 1.0 / 400.0

    def laplacian(v):
        w = 2.0 * v.copy()
        w[:-1] -= v[1:]
        w[1:] -= v[:-1]
        return w / h**2

    res = lanczos_extremal(laplacian, dim=399, k=5, max_iters=8, seed=6)
    assert not res.converged
    assert res.note != ""
    assert res.eigenvalues.size <= 5


def test_lanczos_guards():
    with pytest.raises(ValueError, match="k must be"):
        lanczos_extremal(lambda v: v, dim=100, k=31)
    with pytest.raises(ValueError, match="exceeds the dimension"):
        lanczos_extremal(lambda v: v, dim=5, k=6)


# ------------------------------------------------------ psd product spectra


def test_psd_product_spectrum_examples():
    assert np.allclose(psd_product_spectrum(np.eye(3), np.eye(3)), np.ones(3), atol=1e-14)
    got = psd_product_spectrum(np.diag([1.0, 2.0]), np.diag([3.0, 4.0]))
    assert np.allclose(got, [3.0, 8.0], atol=1e-12)


def test_psd_product_spectrum_matches_nonsymmetric_oracle():
    rng = np.random.default_rng(16)
    C = random_psd(rng, 6)
    D = random_psd(rng, 6)
    got = psd_product_spectrum(C, D)
    oracle = np.sort(np.linalg.eigvals(C @ D).real)
    scale = max(abs(oracle[-1]), 1.0)
    assert np.allclose(got, oracle, rtol=0, atol=1e-8 * scale)


def test_psd_product_spectrum_both_orders_agree():
    rng = np.random.default_rng(17)
    for trial in range(20):
        d = int(rng.integers(2, 9))
        C = random_psd(rng, d)
        D = random_psd(rng, d)
        cd = psd_product_spectrum(C, D)
        dc = psd_product_spectrum(D, C)
        scale = max(cd[-1], 1.0)
        assert np.max(np.abs(cd - dc)) <= 1e-8 * scale
        assert np.all(cd >= -1e-9 * scale)
        # Spectral radius of CD never exceeds the operator norm of DC.
        assert cd[-1] <= spectral_norm(D @ C) * (1 + 1e-10)


def test_psd_product_spectrum_rejects_indefinite():
    with pytest.raises(ValueError, match="not positive semidefinite"):
        psd_product_spectrum(np.diag([1.0, -1.0]), np.eye(2))


# ------------------------------------------------------------ text fixtures


def test_matrix_text_round_trip(tmp_path):
    rng = np.random.default_rng(18)
    for shape in ((3, 5), (1, 1), (4, 1)):
        A = rng.standard_normal(shape)
        path = tmp_path / "fixture.txt"
        save_matrix_text(path, A)
        B = load_matrix_text(path)
        assert np.array_equal(A, B)
    first_line = (tmp_path / "fixture.txt").read_text().splitlines()[0]
    assert first_line == "# 4 1"


def test_matrix_text_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 2\n3 4\n")
    with pytest.raises(ValueError, match="header"):
        load_matrix_text(path)
    path.write_text("# 3 2\n1 2\n3 4\n")
    with pytest.raises(ValueError, match="promises"):
        load_matrix_text(path)
