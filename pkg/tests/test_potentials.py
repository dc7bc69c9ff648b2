"""Parser, evaluation, expansion, and degeneracy tests for the potential DSL."""

import numpy as np
import pytest

from spectralab.potentials import (
    NonPolynomialError,
    ParseError,
    PolynomialForm,
    degeneracy_direction,
    evaluate,
    parse_potential,
    to_polynomial,
)

# 20-expression round-trip corpus: (source, dimension, direct arithmetic).
# The lambdas mirror the grammar's association order so agreement is exact.
CORPUS = [
    ("x1^2*x2^2", 2, lambda x: x[0] ** 2 * x[1] ** 2),
    ("x1^2*x2^4 + x1^4*x2^2", 2, lambda x: x[0] ** 2 * x[1] ** 4 + x[0] ** 4 * x[1] ** 2),
    ("0", 2, lambda x: 0.0),
    ("1.5", 2, lambda x: 1.5),
    ("x1", 2, lambda x: x[0]),
    ("x1 + x2 - 3", 2, lambda x: x[0] + x[1] - 3),
    ("x1*(x1+x2)", 2, lambda x: x[0] * (x[0] + x[1])),
    ("(x1+x2)^2", 2, lambda x: (x[0] + x[1]) ** 2),
    ("x1^2 - 2*x1*x2 + x2^2", 2, lambda x: x[0] ** 2 - 2 * x[0] * x[1] + x[1] ** 2),
    ("-x1", 2, lambda x: -x[0]),
    ("2*x1^3 - 0.5*x2", 2, lambda x: 2 * x[0] ** 3 - 0.5 * x[1]),
    ("exp(x1)", 2, lambda x: np.exp(x[0])),
    ("abs(x1*x2)", 2, lambda x: np.abs(x[0] * x[1])),
    ("exp(abs(x1) - x2^2)", 2, lambda x: np.exp(np.abs(x[0]) - x[1] ** 2)),
    ("x1^2^2", 2, lambda x: x[0] ** 4),
    ("1e-3*x1 + 2.5e2", 2, lambda x: 1e-3 * x[0] + 2.5e2),
    ("x1^2 + x2^2 + x3^2", 3, lambda x: x[0] ** 2 + x[1] ** 2 + x[2] ** 2),
    ("x1*x2*x3", 3, lambda x: x[0] * x[1] * x[2]),
    ("abs(x1)*exp(x2)", 2, lambda x: np.abs(x[0]) * np.exp(x[1])),
    ("(x1 - x2)*(x1 + x2)", 2, lambda x: (x[0] - x[1]) * (x[0] + x[1])),
]


def test_round_trip_corpus():
    rng = np.random.default_rng(20260815)
    assert len(CORPUS) == 20
    for source, nu, direct in CORPUS:
        expr = parse_potential(source, nu)
        pts = rng.uniform(-2.0, 2.0, size=(100, nu))
        got = evaluate(expr, pts)
        want = np.array([direct(p) for p in pts])
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=0.0)


def test_evaluate_examples():
    v = parse_potential("x1^2*x2^2", 2)
    assert evaluate(v, [2.0, 3.0]) == 36.0
    for t in (-5.0, 0.0, 0.3, 7.0):
        assert evaluate(v, [t, 0.0]) == 0.0
    assert evaluate(parse_potential("x1^2+x2^2", 2), [3.0, 4.0]) == 25.0


def test_evaluate_batch_and_shape_errors():
    v = parse_potential("x1+x2", 2)
    out = evaluate(v, [[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(out, [3.0, 7.0])
    with pytest.raises(ValueError):
        evaluate(v, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        evaluate(v, np.zeros((4, 3)))


def test_precedence_and_associativity():
    p = [1.7, -0.6, 2.2]
    assert evaluate(parse_potential("x1+x2*x3^2", 3), p) == p[0] + p[1] * p[2] ** 2
    assert evaluate(parse_potential("x1^2^3", 1), [1.3]) == 1.3 ** 8
    assert evaluate(parse_potential("2*x1^2", 1), [3.0]) == 18.0
    assert evaluate(parse_potential("-x1^2", 1), [3.0]) == -9.0
    assert evaluate(parse_potential("x1-x2-x3", 3), p) == (p[0] - p[1]) - p[2]


@pytest.mark.parametrize(
    "source, position",
    [
        ("x1^-2", 3),
        ("x1^2.5", 3),
        ("x3", 0),
        ("foo(x1)", 0),
        ("x1 + ", 5),
        ("(x1", 3),
        ("x1 @ x2", 3),
        ("x1 x2", 3),
    ],
)
def test_parse_errors_carry_position(source, position):
    with pytest.raises(ParseError) as err:
        parse_potential(source, 2)
    assert err.value.position == position


def test_exponent_must_be_integer_literal():
    with pytest.raises(ParseError):
        parse_potential("x1^(2)", 2)
    with pytest.raises(ParseError):
        parse_potential("x1^x2", 2)


def test_nonnegativity_certificate():
    certified = ["x1^2*x2^2", "x1^2+x2^2", "exp(x1)", "abs(x1)", "(x1-x2)^2", "3", "2*x1^2", "(x1^2)^3"]
    uncertified = ["x1", "x1 - x2", "-1", "x1^3", "-x1^2", "x1*x2"]
    for s in certified:
        assert parse_potential(s, 2).nonneg_certified, s
    for s in uncertified:
        assert not parse_potential(s, 2).nonneg_certified, s


def test_to_polynomial_examples():
    assert to_polynomial(parse_potential("x1^2*x2^2", 2)).terms == {(2, 2): 1.0}
    assert to_polynomial(parse_potential("x1^2*x2^4 + x1^4*x2^2", 2)).terms == {
        (2, 4): 1.0,
        (4, 2): 1.0,
    }
    assert to_polynomial(parse_potential("x1*(x1+x2)", 2)).terms == {(2, 0): 1.0, (1, 1): 1.0}


def test_to_polynomial_prunes_cancellations():
    assert to_polynomial(parse_potential("x1 - x1", 2)).terms == {}
    form = to_polynomial(parse_potential("(x1+x2)^2 - x1^2 - 2*x1*x2 - x2^2", 2))
    assert form.terms == {}
    assert all(c != 0.0 for c in form.terms.values())


def test_to_polynomial_preserves_evaluation():
    rng = np.random.default_rng(7)
    sources = [
        ("(x1+x2)^2*(x1-x2)", 2),
        ("x1^2*x2^2 + 0.25*(x1 - 2*x2)^3", 2),
        ("(x1*x2*x3 - 1)^2", 3),
        ("-(x1 - x2^2)^2 + x1^4", 2),
    ]
    for source, nu in sources:
        expr = parse_potential(source, nu)
        form = to_polynomial(expr)
        pts = rng.uniform(-1.5, 1.5, size=(16, nu))
        np.testing.assert_allclose(form.evaluate(pts), evaluate(expr, pts), rtol=1e-12, atol=1e-13)


def test_to_polynomial_rejects_non_polynomial():
    with pytest.raises(NonPolynomialError):
        to_polynomial(parse_potential("exp(x1)", 1))
    with pytest.raises(NonPolynomialError):
        to_polynomial(parse_potential("x1 + abs(x2)", 2))


def _poly(source, nu):
    return to_polynomial(parse_potential(source, nu))


def test_degeneracy_direction_examples():
    verdict = degeneracy_direction(_poly("x1^2", 2))
    assert verdict.degenerate and not verdict.gradient_vanishes
    np.testing.assert_allclose(verdict.direction, [0.0, 1.0], atol=1e-12)

    verdict = degeneracy_direction(_poly("x1 + x2", 2))
    assert verdict.degenerate
    np.testing.assert_allclose(verdict.direction, [1.0, -1.0] / np.sqrt(2.0), atol=1e-12)

    verdict = degeneracy_direction(_poly("x1^2*x2^4 + x1^4*x2^2", 2))
    assert not verdict.degenerate and verdict.direction is None

    verdict = degeneracy_direction(_poly("x1^2*x2^2", 2))
    assert not verdict.degenerate


def test_degeneracy_zero_and_constant_polynomials():
    verdict = degeneracy_direction(_poly("0", 2))
    assert verdict.degenerate and verdict.gradient_vanishes and verdict.direction is None
    verdict = degeneracy_direction(_poly("4.5", 3))
    assert verdict.degenerate and verdict.gradient_vanishes


def test_returned_direction_annihilates_gradient():
    rng = np.random.default_rng(11)
    for source, nu in [("x1^2", 2), ("x1 + x2", 2), ("(x1 - x2)^4", 2), ("x1^2 + 2*x1*x2 + x2^2", 2)]:
        form = _poly(source, nu)
        verdict = degeneracy_direction(form)
        assert verdict.degenerate
        v = verdict.direction
        pts = rng.uniform(-3.0, 3.0, size=(32, nu))
        eps = 1e-7
        for p in pts:
            directional = (form.evaluate(p + eps * v) - form.evaluate(p - eps * v)) / (2 * eps)
            assert abs(directional) <= 1e-6  # finite-difference slack on the 1e-9 identity
        # exact check through the expanded gradient coefficients
        shifted = [form.evaluate(pts + 1e-5 * v), form.evaluate(pts - 1e-5 * v)]
        np.testing.assert_allclose(shifted[0], shifted[1], rtol=0, atol=1e-8)


def _substitute_linear(form: PolynomialForm, T: np.ndarray) -> PolynomialForm:
    """Oracle-side composition P(T y), expanded by dict convolution."""
    nu = form.dimension
    zero = (0,) * nu

    def poly_mul(a, b):
        out = {}
        for alpha, ca in a.items():
            for beta, cb in b.items():
                gamma = tuple(i + j for i, j in zip(alpha, beta))
                out[gamma] = out.get(gamma, 0.0) + ca * cb
        return out

    linear_forms = []
    for i in range(nu):
        lf = {}
        for j in range(nu):
            if T[i, j] != 0.0:
                alpha = tuple(1 if a == j else 0 for a in range(nu))
                lf[alpha] = T[i, j]
        linear_forms.append(lf)
    total: dict = {}
    for alpha, coeff in form.terms.items():
        term = {zero: coeff}
        for axis, power in enumerate(alpha):
            for _ in range(power):
                term = poly_mul(term, linear_forms[axis])
        for gamma, c in term.items():
            total[gamma] = total.get(gamma, 0.0) + c
    return PolynomialForm(nu, {a: c for a, c in total.items() if c != 0.0})


def test_degeneracy_is_basis_independent():
    rng = np.random.default_rng(42)
    nondegenerate = [_poly("x1^2*x2^4 + x1^4*x2^2", 2), _poly("x1^2*x2^2", 2), _poly("x1^2 + x2^4", 2)]
    for form in nondegenerate:
        for _ in range(5):
            T = rng.normal(size=(form.dimension, form.dimension))
            while abs(np.linalg.det(T)) < 0.3:
                T = rng.normal(size=(form.dimension, form.dimension))
            composed = _substitute_linear(form, T)
            assert not degeneracy_direction(composed).degenerate
