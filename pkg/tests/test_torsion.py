"""Tests for the constant-forcing (torsion) solves, the floor-building
sigma selection, and the boundary-distance lower-bound certificate.

Oracles: dense linear algebra for the quadratic (p=q=2) case, a
closed-form quadratic for the line-search minimizer, and monotone
structural properties for everything nonlinear.
"""

import numpy as np
import pytest

from fracsolve.gagliardo import OperatorParams, assemble_weights, operator_gradient
from fracsolve.grids import ScalarField, build_grid, disk, interval
from fracsolve.optimize import MinimizerOptions, minimize_energy
from fracsolve.reaction import ProblemExponents, SingularReaction, f_eval
from fracsolve.torsion import (
    SubsolutionCertificate,
    hopf_exponent,
    hopf_ratio,
    select_sigma,
    solve_torsion,
)


def _tables(grid, exps):
    tp = assemble_weights(grid, OperatorParams(exps.s1, exps.p))
    tq = assemble_weights(grid, OperatorParams(exps.s2, exps.q))
    return tp, tq


@pytest.fixture(scope="module")
def quad_setup():
    exps = ProblemExponents(s=0.5, s1=0.5, s2=0.5, p=2.0, q=2.0, dim=1)
    grid = build_grid(interval(0.0, 1.0), 17)
    return exps, grid, _tables(grid, exps)


@pytest.fixture(scope="module")
def nl_setup():
    exps = ProblemExponents(s=0.55, s1=0.6, s2=0.5, p=2.5, q=2.2, dim=1)
    grid = build_grid(interval(0.0, 1.0), 17)
    return exps, grid, _tables(grid, exps)


def _linear_matrix(table):
    n = table.grid.n_interior
    W = table.pair
    return 2.0 * (np.diag(W.sum(axis=1) + table.tail) - W)


class TestMinimizer:
    def test_quadratic_closed_form(self):
        rng = np.random.default_rng(0)
        M = rng.normal(size=(6, 6))
        A = M @ M.T + 6 * np.eye(6)
        b = rng.normal(size=6)

        def fun(x):
            return 0.5 * x @ A @ x - b @ x

        def grad(x):
            return A @ x - b

        res = minimize_energy(fun, grad, np.zeros(6), MinimizerOptions(tol=1e-12))
        assert res.converged
        np.testing.assert_allclose(res.x, np.linalg.solve(A, b), rtol=1e-9)

    def test_energy_monotone_along_trace(self):
        A = np.diag([1.0, 50.0, 300.0])
        b = np.array([1.0, -2.0, 0.5])
        energies = []

        def fun(x):
            val = 0.5 * x @ A @ x - b @ x
            return val

        def grad(x):
            return A @ x - b

        res = minimize_energy(
            fun, grad, np.zeros(3), MinimizerOptions(tol=1e-10), on_accept=lambda e: energies.append(e)
        )
        assert res.converged
        diffs = np.diff(energies)
        assert np.all(diffs <= 1e-12 * (1.0 + np.abs(energies[:-1])))

    def test_nonconvergence_flagged(self):
        # anisotropic quadratic: two iterations cannot reach 1e-14 stationarity
        lam = np.array([1.0, 30.0])

        def fun(x):
            return float(lam @ (x * x))

        def grad(x):
            return 2.0 * lam * x

        res = minimize_energy(
            fun, grad, np.ones(2), MinimizerOptions(tol=1e-14, max_iter=2)
        )
        assert not res.converged
        assert res.message

    def test_nonfinite_energy_raises(self):
        def fun(x):
            return float("nan")

        def grad(x):
            return np.zeros_like(x)

        with pytest.raises(RuntimeError):
            minimize_energy(fun, grad, np.zeros(2), MinimizerOptions())


class TestTorsionQuadraticOracle:
    def test_matches_dense_linear_solve(self, quad_setup):
        exps, grid, tables = quad_setup
        sigma = 0.7
        u = solve_torsion(sigma, exps, grid, tables)
        A = _linear_matrix(tables[0]) + _linear_matrix(tables[1])
        rhs = sigma * grid.cell_volume * np.ones(grid.n_interior)
        want = np.linalg.solve(A, rhs)
        got = grid.pack(u)
        assert np.linalg.norm(got - want) / np.linalg.norm(want) < 1e-8

    def test_gradient_identity_at_solution(self, quad_setup):
        exps, grid, tables = quad_setup
        sigma = 0.3
        u = solve_torsion(sigma, exps, grid, tables)
        resid = (
            operator_gradient(tables[0], u)
            + operator_gradient(tables[1], u)
            - sigma * grid.cell_volume
        )
        assert np.linalg.norm(resid) / np.sqrt(grid.n_interior) < 1e-8 * sigma


class TestTorsionNonlinear:
    def test_positive_and_symmetric(self, nl_setup):
        exps, grid, tables = nl_setup
        u = solve_torsion(1.0, exps, grid, tables)
        vals = grid.pack(u)
        assert np.all(vals > 0.0)
        np.testing.assert_allclose(vals, vals[::-1], atol=1e-8)

    def test_sup_norm_monotone_in_sigma(self, nl_setup):
        exps, grid, tables = nl_setup
        sups = []
        for sigma in np.logspace(-6, -1, 6):
            u = solve_torsion(sigma, exps, grid, tables)
            sups.append(np.max(np.abs(grid.pack(u))))
        assert np.all(np.diff(sups) > 0.0)
        assert sups[0] < 1e-3  # vanishing limit

    def test_2d_disk_positive_symmetric(self):
        exps = ProblemExponents(s=0.55, s1=0.6, s2=0.5, p=3.0, q=2.5, dim=2)
        grid = build_grid(disk(0.0, 0.0, 1.0), 11)
        tables = _tables(grid, exps)
        u = solve_torsion(1.0, exps, grid, tables)
        vals = grid.pack(u)
        assert np.all(vals > 0.0)
        full = u.values.reshape(grid.shape)
        np.testing.assert_allclose(full, full[::-1, :], atol=1e-7)
        np.testing.assert_allclose(full, full[:, ::-1], atol=1e-7)

    def test_nonconvergence_raises(self, nl_setup):
        exps, grid, tables = nl_setup
        with pytest.raises(RuntimeError):
            solve_torsion(1.0, exps, grid, tables, MinimizerOptions(max_iter=1, tol=1e-14))


class TestHopf:
    def test_exact_power_of_distance(self):
        grid = build_grid(interval(0.0, 1.0), 33)
        d = grid.distance_field()
        s1 = 0.6
        u1 = ScalarField(grid, d.values**s1)
        assert hopf_ratio(u1, d, s1) == pytest.approx(1.0, rel=1e-12)
        u2 = ScalarField(grid, 2.0 * d.values**s1)
        assert hopf_ratio(u2, d, s1) == pytest.approx(2.0, rel=1e-12)

    def test_nonpositive_field_rejected(self):
        grid = build_grid(interval(0.0, 1.0), 9)
        d = grid.distance_field()
        with pytest.raises(ValueError):
            hopf_ratio(ScalarField(grid, np.zeros(grid.points.shape[0])), d, 0.5)

    def test_exponent_plain_case(self):
        exps = ProblemExponents(s=0.55, s1=0.6, s2=0.5, p=2.5, q=2.2, dim=1)
        assert hopf_exponent(exps) == 0.6

    def test_exponent_resonant_case(self):
        # q' s2 = s1: q=2.2 -> q'=11/6; s2=0.54 -> q's2=0.99... pick exact:
        # q=3 -> q'=1.5, s2=0.4, s1=0.6 -> q's2=0.6 = s1
        exps = ProblemExponents(s=0.5, s1=0.6, s2=0.4, p=4.0, q=3.0, dim=1)
        alpha = hopf_exponent(exps)
        assert alpha > exps.s1
        assert abs(alpha - exps.q_prime * exps.s2) > 1e-9
        assert abs(alpha - exps.p_prime * exps.s1) > 1e-9
        assert alpha == pytest.approx(0.65)

    def test_exponent_resonant_with_collision(self):
        # q's2 = s1 = 0.5 and p's1 = 0.55 collides with the first alpha try
        exps = ProblemExponents(s=0.45, s1=0.5, s2=1.0 / 3.0, p=11.0, q=3.0, dim=1)
        assert exps.q_prime * exps.s2 == pytest.approx(0.5, abs=1e-12)
        assert exps.p_prime * exps.s1 == pytest.approx(0.55, abs=1e-12)
        alpha = hopf_exponent(exps)
        assert alpha == pytest.approx(0.561)


class TestSelectSigma:
    def test_singular_family_certificate(self, nl_setup):
        exps, grid, tables = nl_setup
        fam = SingularReaction(gamma=0.5, c1=0.5, c2=0.5, r=1.1)
        cert = select_sigma(fam, exps, grid, tables)
        assert isinstance(cert, SubsolutionCertificate)
        assert cert.epsilon == 1.0
        assert cert.sigma <= 0.5 + 1e-15
        assert cert.delta == pytest.approx(min(1.0, (0.5 / 1.0) ** 2.0))
        assert cert.sup_norm < cert.delta
        floor = grid.pack(cert.lower)
        assert np.all(floor > 0.0)
        assert cert.eta > 0.0
        assert cert.exponent == exps.s1
        # defining inequality: sigma strictly below the forcing at the floor
        fvals = f_eval(fam, grid.interior_points, floor)
        assert np.all(cert.sigma < fvals)

    def test_subsolution_inequality_nodal(self, nl_setup):
        exps, grid, tables = nl_setup
        fam = SingularReaction(gamma=0.5, c1=0.5, c2=0.5, r=1.1)
        cert = select_sigma(fam, exps, grid, tables)
        floor = cert.lower
        resid = (
            operator_gradient(tables[0], floor)
            + operator_gradient(tables[1], floor)
            - f_eval(fam, grid.interior_points, grid.pack(floor)) * grid.cell_volume
        )
        assert np.all(resid <= 1e-8)

    def test_bounded_family_epsilon_gate(self, nl_setup):
        exps, grid, tables = nl_setup
        fam = SingularReaction(gamma=0.5, c1=0.8, c2=0.5, r=1.1, family="bounded")
        with pytest.raises(ValueError):
            select_sigma(fam, exps, grid, tables, epsilon=0.8)
        cert = select_sigma(fam, exps, grid, tables)
        assert cert.epsilon == pytest.approx(0.4)
        assert cert.delta == pytest.approx(min(1.0, 2.0**2.0 - 1.0))
        assert cert.sup_norm < cert.delta

    def test_eta_stable_under_refinement(self):
        exps = ProblemExponents(s=0.55, s1=0.6, s2=0.5, p=2.5, q=2.2, dim=1)
        fam = SingularReaction(gamma=0.5, c1=0.5, c2=0.5, r=1.1)
        etas = []
        for res in (17, 33):
            grid = build_grid(interval(0.0, 1.0), res)
            tables = _tables(grid, exps)
            cert = select_sigma(fam, exps, grid, tables)
            etas.append(cert.eta)
        ratio = etas[1] / etas[0]
        assert 0.5 <= ratio <= 2.0

    def test_certificate_dict_fields(self, nl_setup):
        exps, grid, tables = nl_setup
        fam = SingularReaction(gamma=0.5, c1=0.5, c2=0.5, r=1.1)
        cert = select_sigma(fam, exps, grid, tables)
        d = cert.as_dict()
        for key in ("sigma", "eta", "exponent", "sup_norm", "epsilon", "delta", "halvings"):
            assert key in d
