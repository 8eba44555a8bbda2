"""Spectral field operations: transforms, projection, products, norms."""

import math

import numpy as np
import pytest

from nsenergy.spectral import (
    BOX_VOLUME,
    DivergenceError,
    FourierField,
    Grid,
    GridError,
    advective_term,
    curl,
    divergence,
    energy,
    enstrophy,
    gradient_tensor,
    l2_norm,
    leray_project,
    lq_norm,
    nonlinear_term,
    random_rough_field,
    resample,
    sobolev_seminorm,
    spectral_inner,
    taylor_green,
)

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def grid():
    return Grid(16)


def single_mode(grid, amplitude=1.0):
    """u = (0, amplitude sin x, 0): one wavevector, divergence-free."""
    x, y, z = grid.mesh()
    zero = np.zeros((grid.n,) * 3)
    return FourierField.from_real(
        np.stack([zero, amplitude * np.sin(x) + zero, zero]), grid
    )


class TestGrid:
    def test_validation(self):
        with pytest.raises(GridError):
            Grid(6)
        with pytest.raises(GridError):
            Grid(9)
        assert Grid(8).n == 8

    def test_cell_volume(self, grid):
        assert grid.cell_volume == pytest.approx((TWO_PI / 16) ** 3)

    def test_equality(self):
        assert Grid(16) == Grid(16)
        assert Grid(16) != Grid(32)


class TestTransforms:
    def test_round_trip(self, grid):
        rng = np.random.default_rng(0)
        samples = rng.standard_normal((3, 16, 16, 16))
        f = FourierField.from_real(samples, grid)
        back = f.to_real().components
        assert np.max(np.abs(back - samples)) <= 1e-12 * np.max(np.abs(samples))

    def test_parseval(self, grid):
        f = random_rough_field(1.0, 3, grid)
        w = grid.spectral_weights
        spectral_sum = float(np.sum(w * np.abs(f.c) ** 2))
        assert lq_norm(f, 2) ** 2 == pytest.approx(
            BOX_VOLUME * spectral_sum, rel=1e-12
        )

    def test_arithmetic(self, grid):
        f = single_mode(grid)
        g = (f + f) - f
        assert np.allclose(g.c, f.c, rtol=0, atol=1e-16)
        assert np.allclose((2.0 * f).c, 2.0 * f.c)


class TestLerayProjection:
    def test_annihilates_gradients(self, grid):
        x, y, z = grid.mesh()
        zero = np.zeros((grid.n,) * 3)
        gradphi = FourierField.from_real(
            np.stack([-np.sin(x) + zero, zero, zero]), grid
        )
        assert l2_norm(leray_project(gradphi)) <= 1e-13

    def test_fixes_divergence_free(self, grid):
        x, y, z = grid.mesh()
        zero = np.zeros((grid.n,) * 3)
        u = FourierField.from_real(
            np.stack([np.sin(x) * np.cos(y) + zero,
                      -np.cos(x) * np.sin(y) + zero, zero]), grid
        )
        p = leray_project(u)
        assert np.max(np.abs(p.c - u.c)) <= 1e-13

    def test_idempotent_self_adjoint_contractive(self, grid):
        rng = np.random.default_rng(7)
        f = FourierField.from_real(rng.standard_normal((3, 16, 16, 16)), grid)
        g = FourierField.from_real(rng.standard_normal((3, 16, 16, 16)), grid)
        pf = leray_project(f)
        assert np.max(np.abs(leray_project(pf).c - pf.c)) <= 1e-14
        assert spectral_inner(pf, g) == pytest.approx(
            spectral_inner(f, leray_project(g)), rel=1e-12
        )
        assert l2_norm(pf) <= l2_norm(f) * (1 + 1e-14)
        assert pf.divergence_defect() <= 1e-13

    def test_mean_mode_untouched(self, grid):
        const = FourierField.zero(grid)
        const.c[0, 0, 0, 0] = 2.0
        assert np.max(np.abs(leray_project(const).c - const.c)) == 0.0


class TestDifferentialOperators:
    def test_gradient_of_constant(self, grid):
        const = FourierField.zero(grid)
        const.c[:, 0, 0, 0] = 1.5
        assert np.max(np.abs(gradient_tensor(const))) == 0.0

    def test_div_of_projection(self, grid):
        f = FourierField.from_real(
            np.random.default_rng(5).standard_normal((3, 16, 16, 16)), grid
        )
        d = divergence(leray_project(f))
        scale = np.max(np.abs(f.c)) * grid.n
        assert np.max(np.abs(d)) <= 1e-13 * scale

    def test_div_of_curl(self, grid):
        f = FourierField.from_real(
            np.random.default_rng(6).standard_normal((3, 16, 16, 16)), grid
        )
        d = divergence(curl(f))
        assert np.max(np.abs(d)) <= 1e-12 * np.max(np.abs(f.c)) * grid.n

    def test_taylor_green_vorticity(self, grid):
        # omega_z = 2 sin x sin y for the (sin x cos y, -cos x sin y, 0) orientation
        x, y, z = grid.mesh()
        w = curl(taylor_green(grid)).to_real().components
        expected = 2.0 * np.sin(x) * np.sin(y) + 0 * z
        assert np.max(np.abs(w[2] - expected)) <= 1e-12
        assert np.max(np.abs(w[0])) <= 1e-13
        assert np.max(np.abs(w[1])) <= 1e-13


class TestNonlinearTerm:
    def test_taylor_green_is_pure_gradient(self, grid):
        tg = taylor_green(grid)
        assert l2_norm(nonlinear_term(tg)) <= 1e-12 * l2_norm(tg)

    def test_single_mode_self_interaction(self, grid):
        u = single_mode(grid)
        assert l2_norm(nonlinear_term(u)) <= 1e-13

    def test_rejects_divergent_input(self, grid):
        f = FourierField.from_real(
            np.random.default_rng(8).standard_normal((3, 16, 16, 16)), grid
        )
        with pytest.raises(DivergenceError):
            nonlinear_term(f)

    @pytest.mark.parametrize("sigma,seed", [(0.8, 1), (1.5, 2), (2.5, 3)])
    def test_flux_cancellation(self, sigma, seed):
        g = Grid(32)
        u = random_rough_field(sigma, seed, g)
        flux = spectral_inner(nonlinear_term(u), u)
        scale = spectral_inner(u, u) * math.sqrt(enstrophy(u))
        assert abs(flux) <= 1e-12 * scale

    def test_advective_term_matches_rotational_on_df(self, grid):
        # P[(u.grad)u] from the convective product equals the rotational form
        u = random_rough_field(1.5, 11, grid)
        a = nonlinear_term(u)
        b = leray_project(advective_term(u, u))
        assert np.max(np.abs(a.c - b.c)) <= 1e-12 * np.max(np.abs(a.c) + 1e-30)


class TestNorms:
    def test_constant_field(self, grid):
        const = FourierField.zero(grid)
        const.c[0, 0, 0, 0] = 2.0
        assert lq_norm(const, 2) == pytest.approx(2.0 * TWO_PI**1.5, rel=1e-13)

    def test_sine_l2(self, grid):
        x, y, z = grid.mesh()
        zero = np.zeros((grid.n,) * 3)
        u = FourierField.from_real(np.stack([np.sin(x) + zero, zero, zero]), grid)
        assert lq_norm(u, 2) == pytest.approx(math.sqrt(4 * math.pi**3), rel=1e-13)

    def test_sup_norm(self, grid):
        x, y, z = grid.mesh()
        zero = np.zeros((grid.n,) * 3)
        u = FourierField.from_real(np.stack([np.sin(x) + zero, zero, zero]), grid)
        assert lq_norm(u, "inf") == pytest.approx(1.0, abs=1e-2)

    def test_energy_enstrophy_taylor_green(self, grid):
        tg = taylor_green(grid)
        assert energy(tg) == pytest.approx(BOX_VOLUME / 4, rel=1e-13)
        assert enstrophy(tg) == pytest.approx(BOX_VOLUME, rel=1e-13)

    def test_seminorm_matches_enstrophy(self, grid):
        f = random_rough_field(2.0, 4, grid)
        assert sobolev_seminorm(f, 2) ** 2 == pytest.approx(enstrophy(f), rel=1e-11)

    def test_monotone_in_q_after_volume_normalization(self, grid):
        f = random_rough_field(1.2, 9, grid)
        values = [lq_norm(f, q) * BOX_VOLUME ** (-1.0 / q) for q in (2, 3, 4, 6)]
        assert all(values[i] <= values[i + 1] * (1 + 1e-12) for i in range(3))


class TestRoughFields:
    def test_deterministic(self, grid):
        a = random_rough_field(1.5, 42, grid)
        b = random_rough_field(1.5, 42, grid)
        assert np.array_equal(a.c, b.c)
        c = random_rough_field(1.5, 43, grid)
        assert not np.array_equal(a.c, c.c)

    def test_divergence_free(self, grid):
        for seed in range(5):
            assert random_rough_field(0.8, seed, grid).divergence_defect() <= 1e-13

    def test_amplitude_law(self, grid):
        sigma = 1.3
        f = random_rough_field(sigma, 0, grid)
        kx, ky, kz = grid.wavenumbers
        k2 = grid.k_squared
        mag = np.sqrt(np.sum(np.abs(f.c) ** 2, axis=0))
        mask = (k2 > 0) & (mag > 0)
        ratio = mag[mask] * k2[mask] ** ((sigma + 1.5) / 2)
        assert np.max(np.abs(ratio - 1.0)) <= 1e-10

    def test_smoothness_split_across_resolutions(self):
        # H^t spectral sums: stable for t < sigma, growing for t > sigma
        sigma = 1.0
        sums = {}
        for n in (16, 32, 64):
            g = Grid(n)
            f = random_rough_field(sigma, 5, g)
            w = g.spectral_weights
            mag2 = np.sum(np.abs(f.c) ** 2, axis=0)
            for t, key in ((sigma - 0.5, "low"), (sigma + 0.5, "high")):
                s = float(np.sum(w * g.k_squared**t * mag2))
                sums.setdefault(key, []).append(s)
        low = sums["low"]
        assert abs(low[2] / low[1] - 1) < 0.10
        high = sums["high"]
        assert high[2] / high[1] > 1.25

    def test_gradient_norm_stable_sigma2(self):
        values = []
        for n in (16, 32):
            f = random_rough_field(2.0, 21, Grid(n))
            values.append(math.sqrt(enstrophy(f)))
        assert abs(values[1] / values[0] - 1) < 0.10


class TestResample:
    def test_round_trip(self, grid):
        f = random_rough_field(1.0, 13, grid)
        up = resample(f, Grid(32))
        back = resample(up, grid)
        assert np.array_equal(back.c, f.c)
        assert l2_norm(up) == pytest.approx(l2_norm(f), rel=1e-14)

    def test_taylor_green_embeds_exactly(self):
        a = resample(taylor_green(Grid(16)), Grid(32))
        b = taylor_green(Grid(32))
        assert np.max(np.abs(a.c - b.c)) <= 1e-14
