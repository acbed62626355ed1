"""Algebroid structure map, tensor, brackets and classification."""

import numpy as np
import pytest

from algmech import (
    AlgebroidStructure, SectionExpr, bracket, classify, epsilon_map,
    lambda_components, parse, poisson_bracket,
)
from algmech.algebroid import section_pairing_expr
from algmech.checks import (
    bracket_tensor_residual, random_polynomial_algebroid, random_section,
)
from algmech.errors import ShapeError
from algmech.expr import Binary, evaluate, evaluate_jet2
from algmech.rng import SplitMix64
from conftest import eps_symbol


@pytest.fixture(scope="module")
def zero11():
    return AlgebroidStructure(1, 1, [["0"]], [["0"]], [[["0"]]])


class TestEpsilonMap:
    def test_zero_structure(self, zero11):
        x, xi, xdot, xidot = epsilon_map(zero11, [0.5], [2.0], [3.0], [4.0])
        assert (x[0], xi[0], xdot[0], xidot[0]) == (0.5, 4.0, 0.0, 0.0)

    def test_tangent_line(self, tangent_line):
        x, xi, xdot, xidot = epsilon_map(tangent_line, [0.5], [2.0], [3.0], [4.0])
        assert (x[0], xi[0], xdot[0], xidot[0]) == (0.5, 4.0, 2.0, 3.0)

    def test_so3(self, so3):
        x, xi, xdot, xidot = epsilon_map(so3, [], [1, 0, 0], [], [0, 1, 0])
        assert list(xi) == [0.0, 1.0, 0.0]
        assert list(xdot) == []
        assert list(xidot) == [0.0, 0.0, -1.0]

    def test_shape_validation(self, so3):
        with pytest.raises(ShapeError):
            epsilon_map(so3, [], [1, 0], [], [0, 1, 0])

    def test_linearity_in_momenta(self):
        # (xi, xidot) slots linear in (p, pi); xdot independent of them
        A = random_polynomial_algebroid(2, 3, seed=11)
        rng = SplitMix64(5)
        for _ in range(20):
            x = rng.vector_pm1(2)
            y = rng.vector_pm1(3)
            p1, p2 = rng.vector_pm1(2), rng.vector_pm1(2)
            pi1, pi2 = rng.vector_pm1(3), rng.vector_pm1(3)
            al = rng.uniform_pm1()
            pa = [al * a + b for a, b in zip(p1, p2)]
            pb = [al * a + b for a, b in zip(pi1, pi2)]
            _, xi_c, xd_c, xid_c = epsilon_map(A, x, y, pa, pb)
            _, xi_1, xd_1, xid_1 = epsilon_map(A, x, y, p1, pi1)
            _, xi_2, xd_2, xid_2 = epsilon_map(A, x, y, p2, pi2)
            assert np.allclose(xid_c, al * xid_1 + xid_2, atol=1e-12)
            assert np.allclose(xi_c, al * xi_1 + xi_2, atol=1e-12)
            assert np.allclose(xd_c, xd_1, atol=1e-12)
            assert np.allclose(xd_c, xd_2, atol=1e-12)


class TestLambdaComponents:
    def test_zero_structure(self, zero11):
        assert np.array_equal(lambda_components(zero11, [0.3], [0.7]),
                              np.zeros((2, 2)))

    def test_so3_at_e3(self, so3):
        lam = lambda_components(so3, [], [0, 0, 1])
        assert lam[0, 1] == 1.0
        assert lam[1, 0] == -1.0
        assert lam[0, 0] == lam[1, 1] == lam[2, 2] == 0.0
        assert lam[0, 2] == lam[2, 0] == lam[1, 2] == lam[2, 1] == 0.0

    def test_tangent_line_canonical(self, tangent_line):
        lam = lambda_components(tangent_line, [0.37], [1.41])
        assert np.array_equal(lam, np.array([[0.0, 1.0], [-1.0, 0.0]]))


class TestPoissonBracket:
    def test_base_functions_commute(self, so3, tangent_line):
        A = random_polynomial_algebroid(2, 2, seed=3)
        v = poisson_bracket(A, parse("x1"), parse("x2"), [0.2, -0.4], [0.5, 0.5])
        assert v == 0.0

    def test_so3(self, so3):
        assert poisson_bracket(so3, parse("xi1"), parse("xi2"), [], [0, 0, 1]) == 1.0

    def test_tangent_line(self, tangent_line):
        assert poisson_bracket(tangent_line, parse("xi1"), parse("x1"),
                               [0.9], [-0.3]) == 1.0


class TestBracket:
    def test_so3_basis(self, so3):
        br = bracket(so3, SectionExpr(["1", "0", "0"]),
                     SectionExpr(["0", "1", "0"]))
        assert np.array_equal(br([]), np.array([0.0, 0.0, 1.0]))

    def test_skew_structures_have_alternating_bracket(self, so3):
        rng = SplitMix64(17)
        X = random_section(rng, 3, 0)
        br = bracket(so3, X, X)
        assert np.allclose(br([]), 0.0, atol=1e-14)

    def test_vector_field_commutator(self, tangent_line):
        br = bracket(tangent_line, SectionExpr(["x1"]), SectionExpr(["1"]))
        for x in (-2.0, 0.0, 0.7, 3.1):
            assert br([x])[0] == -1.0

    def test_bracket_tensor_correspondence_random(self):
        A = random_polynomial_algebroid(2, 2, seed=23)
        assert bracket_tensor_residual(A, 5, 50, seed=24) <= 1e-8

    def test_leibniz_rules(self):
        # [fX, gY] = f (rho X)(g) Y - g (sigma Y)(f) X + f g [X, Y]
        A = random_polynomial_algebroid(2, 2, seed=31)
        rng = SplitMix64(32)
        n, m = A.n, A.m
        from algmech.checks import random_polynomial_expr
        from algmech.algebroid import structure_entries
        f = random_polynomial_expr(rng, n)
        g = random_polynomial_expr(rng, n)
        X = random_section(rng, m, n)
        Y = random_section(rng, m, n)
        fX = SectionExpr([Binary("*", f, c) for c in X.components])
        gY = SectionExpr([Binary("*", g, c) for c in Y.components])
        lhs_fn = bracket(A, fX, gY)
        base_fn = bracket(A, X, Y)
        xnames = ("x1", "x2")
        for _ in range(30):
            x = rng.vector_pm1(n)
            env = dict(zip(xnames, x))
            rho, sigma, _ = structure_entries(A, x)
            fv = evaluate(f, env)
            gv = evaluate(g, env)
            dg = evaluate_jet2(g, env, xnames).grad
            df = evaluate_jet2(f, env, xnames).grad
            Xv = np.array([evaluate(c, env) for c in X.components])
            Yv = np.array([evaluate(c, env) for c in Y.components])
            rhoX_g = sum(rho[a, i] * Xv[i] * dg[a]
                         for a in range(n) for i in range(m))
            sigY_f = sum(sigma[a, j] * Yv[j] * df[a]
                         for a in range(n) for j in range(m))
            rhs = fv * rhoX_g * Yv - gv * sigY_f * Xv + fv * gv * base_fn(x)
            assert np.allclose(lhs_fn(x), rhs, atol=1e-8)


class TestClassify:
    def test_zero_structure(self, zero11):
        rep = classify(zero11, 10, 1, 1e-8)
        assert rep.is_lie and rep.jacobiator_max == 0.0

    def test_so3_is_lie(self, so3):
        rep = classify(so3, 100, 42, 1e-8)
        assert rep.is_skew and rep.is_lie
        assert rep.jacobiator_max <= 1e-10

    def test_symmetric_injection_breaks_skew(self):
        c = [[[eps_symbol(i, j, k) for j in range(3)] for i in range(3)]
             for k in range(3)]
        c[2][0][1] = 1.0
        c[2][1][0] = 1.0
        rep = classify(AlgebroidStructure(0, 3, [], [], c), 50, 42, 1e-8)
        assert not rep.is_skew
        assert rep.witnesses[0][0] == ("check", "c_symmetry") or \
            dict(rep.witnesses[0])["check"] == "c_symmetry"

    def test_perturbed_so3_fails_jacobi(self):
        c = [[[eps_symbol(i, j, k) for j in range(3)] for i in range(3)]
             for k in range(3)]
        c[2][0][1] = 1.1
        rep = classify(AlgebroidStructure(0, 3, [], [], c), 100, 42, 1e-8)
        assert not rep.is_lie
        assert rep.jacobiator_max > 1e-3

    def test_reports_are_reproducible(self, so3):
        a = classify(so3, 25, 7, 1e-8)
        b = classify(so3, 25, 7, 1e-8)
        assert a == b

    def test_lie_algebra_case_ignores_base(self, so3):
        # n = 0: no x coordinates anywhere in the report path
        rep = classify(so3, 5, 0, 1e-8)
        assert rep.sample_count == 5

    def test_tangent_bundle_is_lie(self, tangent_line):
        rep = classify(tangent_line, 50, 9, 1e-8)
        assert rep.is_lie

    def test_evaluation_errors_carry_the_sample(self):
        from algmech import DomainError
        A = AlgebroidStructure(1, 1, [["log(x1)"]], [["log(x1)"]],
                               [[["0"]]])
        with pytest.raises(DomainError) as exc:
            classify(A, 20, 42, 1e-8)
        assert hasattr(exc.value, "sample_index")
        assert len(exc.value.sample_point) == 2


class TestSectionPairing:
    def test_matches_manual_sum(self):
        X = SectionExpr(["x1", "2", "x1*x1"])
        e = section_pairing_expr(X)
        env = {"x1": 0.5, "xi1": 1.0, "xi2": -2.0, "xi3": 3.0}
        assert evaluate(e, env) == 0.5 * 1.0 + 2 * (-2.0) + 0.25 * 3.0
