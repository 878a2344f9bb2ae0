"""Tests for the Riesz-potential fractional gradient.

Oracles: scipy.quad / dblquad for kernel cell integrals, a brute-force
double-loop convolution for FFT alignment, and Fourier-side integral
formulas for the fractional gradient of a Gaussian (sine transform in 1D,
a J1 Hankel integral in 2D).
"""

import math

import numpy as np
import pytest
from scipy.integrate import dblquad, quad
from scipy.special import j1

from fracsolve.grids import ScalarField, build_grid, disk, interval, rectangle
from fracsolve.kernels import riesz_normalization
from fracsolve.riesz import (
    ConvolutionPlan,
    plan_riesz_convolution,
    riesz_gradient,
    riesz_potential,
)


class TestKernelTable1D:
    def test_entries_match_quad(self):
        grid = build_grid(interval(-1.0, 1.0), 17)
        alpha = 0.45
        plan = plan_riesz_convolution(grid, alpha)
        h = grid.h[0]
        m = grid.shape[0]
        assert plan.kernel.shape == (2 * m - 1,)
        gamma = riesz_normalization(1, alpha)
        # origin cell: split the endpoint singularity at zero
        half, _ = quad(lambda z: z ** (alpha - 1.0), 0.0, h / 2)
        assert plan.kernel[m - 1] == pytest.approx(2.0 * gamma * half, rel=1e-12)
        for d in (1, 2, 7):
            want, err = quad(
                lambda z: z ** (alpha - 1.0), d * h - h / 2, d * h + h / 2
            )
            assert err < 1e-12
            assert plan.kernel[m - 1 + d] == pytest.approx(gamma * want, rel=1e-12)
            assert plan.kernel[m - 1 - d] == plan.kernel[m - 1 + d]

    def test_pad_factor_must_cover_all_offsets(self):
        grid = build_grid(interval(0.0, 1.0), 9)
        with pytest.raises(ValueError):
            plan_riesz_convolution(grid, 0.5, pad_factor=1)


class TestKernelTable2D:
    def test_entries_match_dblquad(self):
        grid = build_grid(rectangle(-1.0, 1.0, -1.0, 1.0), 9)
        alpha = 0.4
        plan = plan_riesz_convolution(grid, alpha)
        h1, h2 = grid.h
        m1, m2 = grid.shape
        assert plan.kernel.shape == (2 * m1 - 1, 2 * m2 - 1)
        gamma = riesz_normalization(2, alpha)

        def cell_integral(d1, d2):
            val, err = dblquad(
                lambda z2, z1: (z1 * z1 + z2 * z2) ** ((alpha - 2.0) / 2.0),
                d1 * h1 - h1 / 2,
                d1 * h1 + h1 / 2,
                lambda z1: d2 * h2 - h2 / 2,
                lambda z1: d2 * h2 + h2 / 2,
            )
            return gamma * val

        far = cell_integral(3, 2)
        assert plan.kernel[m1 - 1 + 3, m2 - 1 + 2] == pytest.approx(far, rel=1e-8)
        adj = cell_integral(1, 0)
        assert plan.kernel[m1 - 1 + 1, m2 - 1] == pytest.approx(adj, rel=1e-4)
        # origin cell uses the exact singular average
        from fracsolve.kernels import RieszParams, riesz_cell_average

        want = riesz_cell_average(RieszParams(2, alpha), grid.h) * grid.cell_volume
        assert plan.kernel[m1 - 1, m2 - 1] == pytest.approx(want, rel=1e-10)

    def test_symmetry_all_octants(self):
        grid = build_grid(rectangle(0.0, 1.0, 0.0, 1.0), 7)
        plan = plan_riesz_convolution(grid, 0.6)
        k = plan.kernel
        np.testing.assert_array_equal(k, k[::-1, :])
        np.testing.assert_array_equal(k, k[:, ::-1])
        np.testing.assert_array_equal(k, k.T)  # square cells


class TestConvolutionAlignment:
    def test_1d_matches_double_loop(self):
        grid = build_grid(interval(0.0, 1.0), 33)
        rng = np.random.default_rng(4)
        u = ScalarField(grid, rng.normal(size=grid.points.shape[0]))
        plan = plan_riesz_convolution(grid, 0.5)
        pot = riesz_potential(plan, u)
        m = grid.shape[0]
        uv = u.values
        direct = np.zeros(m)
        for i in range(m):
            for j in range(m):
                direct[i] += uv[j] * plan.kernel[m - 1 + i - j]
        np.testing.assert_allclose(pot.reshape(-1), direct, rtol=1e-12, atol=1e-13)

    def test_2d_matches_double_loop(self):
        grid = build_grid(rectangle(0.0, 1.0, 0.0, 1.0), 9)
        rng = np.random.default_rng(8)
        u = ScalarField(grid, rng.normal(size=grid.points.shape[0]))
        plan = plan_riesz_convolution(grid, 0.7)
        pot = riesz_potential(plan, u)
        m1, m2 = grid.shape
        ug = u.values.reshape(m1, m2)
        direct = np.zeros((m1, m2))
        for i1 in range(m1):
            for i2 in range(m2):
                acc = 0.0
                for j1 in range(m1):
                    for j2 in range(m2):
                        acc += (
                            ug[j1, j2]
                            * plan.kernel[m1 - 1 + i1 - j1, m2 - 1 + i2 - j2]
                        )
                direct[i1, i2] = acc
        np.testing.assert_allclose(pot, direct, rtol=1e-11, atol=1e-13)


class TestStructure:
    def test_linearity(self):
        grid = build_grid(interval(-1.0, 1.0), 65)
        rng = np.random.default_rng(11)
        u = rng.normal(size=grid.points.shape[0])
        v = rng.normal(size=grid.points.shape[0])
        s = 0.6
        gu = riesz_gradient(grid, ScalarField(grid, u), s).values
        gv = riesz_gradient(grid, ScalarField(grid, v), s).values
        gw = riesz_gradient(grid, ScalarField(grid, 2.0 * u - 3.0 * v), s).values
        np.testing.assert_allclose(gw, 2.0 * gu - 3.0 * gv, rtol=1e-11, atol=1e-12)

    def test_scaling_identity_exact(self):
        # rescaling the domain by lam multiplies the gradient by lam^-s
        s, lam = 0.55, 2.5
        g1 = build_grid(interval(-2.0, 2.0), 33)
        g2 = build_grid(interval(-2.0 * lam, 2.0 * lam), 33)
        vals = np.exp(-g1.points[:, 0] ** 2 / 0.98)
        d1 = riesz_gradient(g1, ScalarField(g1, vals), s).values[:, 0]
        d2 = riesz_gradient(g2, ScalarField(g2, vals), s).values[:, 0]
        inner = g1.interior_mask
        np.testing.assert_allclose(
            d2[inner], lam**-s * d1[inner], rtol=1e-10, atol=1e-13
        )

    def test_odd_symmetry_for_even_field(self):
        grid = build_grid(interval(-1.0, 1.0), 41)
        u = ScalarField(grid, np.cos(0.5 * np.pi * grid.points[:, 0]) ** 2)
        plan = plan_riesz_convolution(grid, 0.35)
        pot = riesz_potential(plan, u)
        assert np.all(pot > 0.0)
        np.testing.assert_allclose(pot, pot[::-1], rtol=1e-12)
        g = riesz_gradient(grid, u, 0.65).values[:, 0]
        np.testing.assert_allclose(g[1:-1], -g[::-1][1:-1], rtol=1e-8, atol=1e-12)

    def test_gradient_field_masked_outside(self):
        grid = build_grid(disk(0.0, 0.0, 1.0), 17)
        u = ScalarField(grid, np.ones(grid.points.shape[0]))
        g = riesz_gradient(grid, u, 0.5)
        assert np.all(g.values[~grid.interior_mask] == 0.0)


def gaussian_gradient_1d(x, s, sigma):
    """Fourier-side sine-transform formula for D^s of exp(-x^2/(2 sigma^2))."""

    def integrand(xi):
        return (
            (2.0 * math.pi * xi) ** s
            * sigma
            * math.sqrt(2.0 * math.pi)
            * math.exp(-2.0 * math.pi**2 * sigma**2 * xi**2)
            * math.sin(2.0 * math.pi * xi * x)
        )

    val, err = quad(integrand, 0.0, 6.0 / sigma, limit=200)
    assert err < 1e-7  # far below the percent-level comparison tolerance
    return -2.0 * val


def gaussian_gradient_2d_radial(r, s, sigma):
    """Radial component of D^s of exp(-|x|^2/(2 sigma^2)) via a J1 integral."""

    def integrand(rho):
        return (
            rho
            * (2.0 * math.pi * rho) ** s
            * 2.0
            * math.pi
            * sigma**2
            * math.exp(-2.0 * math.pi**2 * sigma**2 * rho**2)
            * j1(2.0 * math.pi * rho * r)
        )

    val, err = quad(integrand, 0.0, 6.0 / sigma, limit=200)
    assert err < 1e-7  # far below the percent-level comparison tolerance
    return -2.0 * math.pi * val


class TestGaussianOracle:
    def test_1d_pointwise(self):
        s, sigma = 0.55, 0.6
        grid = build_grid(interval(-4.0, 4.0), 257)
        u = ScalarField(grid, np.exp(-grid.points[:, 0] ** 2 / (2 * sigma**2)))
        g = riesz_gradient(grid, u, s).values[:, 0]
        for x in (0.25, 0.75, 1.5):
            idx = int(round((x + 4.0) / grid.h[0]))
            assert abs(grid.points[idx, 0] - x) < 1e-12
            want = gaussian_gradient_1d(x, s, sigma)
            assert g[idx] == pytest.approx(want, rel=2e-2)

    def test_1d_near_one_recovers_classical_derivative(self):
        sigma = 0.6
        grid = build_grid(interval(-4.0, 4.0), 257)
        x = grid.points[:, 0]
        u = ScalarField(grid, np.exp(-(x**2) / (2 * sigma**2)))
        g = riesz_gradient(grid, u, 0.99).values[:, 0]
        classical = -x / sigma**2 * np.exp(-(x**2) / (2 * sigma**2))
        inner = np.abs(x) <= 2.0
        rel = np.linalg.norm(g[inner] - classical[inner]) / np.linalg.norm(
            classical[inner]
        )
        assert rel < 0.05

    def test_2d_pointwise(self):
        s, sigma = 0.5, 0.5
        grid = build_grid(rectangle(-2.0, 2.0, -2.0, 2.0), 65)
        r2 = np.sum(grid.points**2, axis=1)
        u = ScalarField(grid, np.exp(-r2 / (2 * sigma**2)))
        g = riesz_gradient(grid, u, s).values
        m = grid.shape[0]
        # node at (0.5, 0): 8 steps right of center along the x axis
        center = (m // 2) * m + m // 2
        idx = center + 8 * m
        np.testing.assert_allclose(grid.points[idx], [0.5, 0.0], atol=1e-12)
        want = gaussian_gradient_2d_radial(0.5, s, sigma)
        assert g[idx, 0] == pytest.approx(want, rel=3e-2)
        assert abs(g[idx, 1]) < 1e-3 * abs(want)
