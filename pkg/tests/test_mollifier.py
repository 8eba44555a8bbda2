"""Time-mollification kernel and trajectory smoothing properties."""

import math

import numpy as np
import pytest

from nsenergy.mollifier import (
    MollifierError,
    MollifierKernel,
    enstrophy_pairing_gap,
    even_kernel_cancellation,
    interior_mask,
    mollifier_energy_pairing,
    mollify,
    mollify_time_derivative,
)
from nsenergy.solver import InitialCondition, SolverConfig, Trajectory, solve
from nsenergy.spectral import FourierField, Grid, gradient_tensor, taylor_green


def constant_trajectory(grid, nt=101, dt=1e-3, amplitude=1.0):
    f = taylor_green(grid, amplitude=amplitude)
    return Trajectory([f.copy() for _ in range(nt)], dt=dt, viscosity=1.0,
                      grid=grid, validate=False)


def linear_trajectory(grid, nt=101, dt=1e-3):
    f = taylor_green(grid)
    return Trajectory([f * (i * dt) for i in range(nt)], dt=dt, viscosity=1.0,
                      grid=grid, validate=False)


@pytest.fixture(scope="module")
def grid():
    return Grid(8)


@pytest.fixture(scope="module")
def tg_traj():
    cfg = SolverConfig(n=8, dt=1e-3, t_end=0.5, viscosity=1.0,
                       initial=InitialCondition("taylor-green"))
    return solve(cfg)


class TestKernel:
    def test_mass_and_evenness(self):
        k = MollifierKernel(0.07)
        t = np.linspace(-0.1, 0.1, 200001)
        mass = np.trapezoid(k(t), t)
        assert abs(mass - 1.0) <= 1e-12
        assert np.array_equal(k(t), k(-t))

    def test_support(self):
        k = MollifierKernel(0.05)
        assert k(0.05) == 0.0
        assert k(-0.05) == 0.0
        assert k(0.051) == 0.0
        assert k(0.049) > 0.0

    def test_normalization_independent_quadrature(self):
        # Gauss-Legendre constant versus dense Simpson
        k = MollifierKernel(1.0)
        t = np.linspace(-1, 1, 2**20 + 1)
        v = k(t)
        h = t[1] - t[0]
        simpson = h / 3 * (v[0] + v[-1] + 4 * v[1:-1:2].sum() + 2 * v[2:-2:2].sum())
        assert abs(simpson - 1.0) <= 1e-12

    def test_derivative_is_odd_and_consistent(self):
        k = MollifierKernel(0.2)
        t = np.linspace(-0.25, 0.25, 1001)
        d = k.derivative(t)
        assert np.max(np.abs(d + k.derivative(-t))) == 0.0
        h = 1e-7
        mid = t[np.abs(np.abs(t / 0.2) - 1.0) > 0.05]
        fd = (k(mid + h) - k(mid - h)) / (2 * h)
        assert np.max(np.abs(fd - k.derivative(mid))) <= 1e-5 * np.max(np.abs(d))

    def test_bad_width(self):
        with pytest.raises(MollifierError):
            MollifierKernel(0.0)


class TestMollify:
    def test_constant_unchanged_interior(self, grid):
        # 160 grid points across the kernel support: quadrature error < 1e-12
        traj = constant_trajectory(grid, nt=501)
        eps = 0.08
        smooth = mollify(traj, eps)
        inside = interior_mask(traj, eps)
        assert inside.sum() > 20
        for i in np.where(inside)[0]:
            diff = np.max(np.abs(smooth.fields[i].c - traj.fields[i].c))
            assert diff <= 1e-12

    def test_linear_reproduced_interior(self, grid):
        # odd moments of the even kernel vanish
        traj = linear_trajectory(grid, nt=501)
        eps = 0.08
        smooth = mollify(traj, eps)
        scale = np.max(np.abs(traj.fields[-1].c))
        for i in np.where(interior_mask(traj, eps))[0]:
            diff = np.max(np.abs(smooth.fields[i].c - traj.fields[i].c))
            assert diff <= 1e-12 * scale

    def test_quadrature_defect_superpolynomial(self, grid):
        # kernel mass defect drops faster than any fixed power under
        # window refinement (smooth compactly supported integrand)
        k = MollifierKernel(1.0)
        defects = []
        for npts in (40, 80, 160):
            t = np.linspace(-1, 1, npts + 1)
            defects.append(abs(np.sum(k(t)) * (2.0 / npts) - 1.0))
        assert defects[0] / defects[1] > 100
        assert defects[1] / defects[2] > 100

    def test_smooth_second_order_interior(self, tg_traj):
        # interior mollification error is O(eps^2) for smooth data
        errors = []
        for eps in (0.08, 0.04):
            smooth = mollify(tg_traj, eps)
            i = tg_traj.index_of(0.25)
            errors.append(
                np.max(np.abs(smooth.fields[i].c - tg_traj.fields[i].c))
            )
        assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.2)

    def test_under_resolved_rejected(self, grid):
        traj = constant_trajectory(grid, nt=11, dt=1e-2)
        with pytest.raises(MollifierError):
            mollify(traj, 0.02)

    def test_too_wide_rejected(self, grid):
        traj = constant_trajectory(grid, nt=11, dt=1e-2)
        with pytest.raises(MollifierError):
            mollify(traj, 0.2)

    def test_commutes_with_gradient(self, tg_traj):
        eps = 0.02
        smooth = mollify(tg_traj, eps)
        i = tg_traj.index_of(0.2)
        lo = tg_traj.index_of(0.2 - eps)
        # gradient of mollified == mollified gradient: same linear combination
        g_smooth = gradient_tensor(smooth.fields[i])
        window = tg_traj.fields[lo:tg_traj.index_of(0.2 + eps) + 1]
        kv = MollifierKernel(eps)(smooth.times[i] - tg_traj.times[lo:lo + len(window)])
        w = np.full(len(window), tg_traj.dt)
        g_mix = sum(
            kv[j] * w[j] * gradient_tensor(window[j]) for j in range(len(window))
        )
        assert np.max(np.abs(g_smooth - g_mix)) <= 1e-12 * np.max(np.abs(g_smooth))


class TestEnergyPairing:
    def test_constant_interior_degenerate(self, grid):
        # full kernel mass: pairing = ||u||^2, deviation = +||u||^2 / 2
        traj = constant_trajectory(grid, nt=501)
        from nsenergy.spectral import energy

        e = energy(traj.fields[0])
        dev = mollifier_energy_pairing(traj, 0.08, 0.25, "interior")
        assert dev == pytest.approx(e, rel=5e-12)

    def test_constant_endpoint_vanishes(self, grid):
        traj = constant_trajectory(grid, nt=501)
        dev = mollifier_energy_pairing(traj, 0.08, 0.25, "endpoint")
        from nsenergy.spectral import energy

        assert abs(dev) <= 1e-10 * energy(traj.fields[0])

    def test_endpoint_first_order_rate(self, tg_traj):
        devs = [abs(mollifier_energy_pairing(tg_traj, eps, 0.25, "endpoint"))
                for eps in (0.04, 0.02)]
        assert devs[0] / devs[1] == pytest.approx(2.0, rel=0.2)

    def test_window_enforced(self, tg_traj):
        with pytest.raises(MollifierError):
            mollifier_energy_pairing(tg_traj, 0.05, 0.01, "interior")

    def test_unknown_convention(self, tg_traj):
        with pytest.raises(ValueError):
            mollifier_energy_pairing(tg_traj, 0.05, 0.25, "sideways")


class TestEvenKernelCancellation:
    @staticmethod
    def windowed_trajectory(grid, nt=501, dt=1e-3, margin=0.1):
        # smooth time window supported away from both ends
        base = taylor_green(grid)
        T = (nt - 1) * dt
        fields = []
        for i in range(nt):
            t = i * dt
            s = (t - margin) / (T - 2 * margin)
            w = math.exp(-1.0 / (s * (1 - s))) if 0 < s < 1 else 0.0
            fields.append(base * w)
        return Trajectory(fields, dt=dt, viscosity=1.0, grid=grid, validate=False)

    def test_windowed_smooth(self, grid):
        traj = self.windowed_trajectory(grid)
        value = even_kernel_cancellation(traj, 0.05)
        scale = max(np.max(np.abs(f.c)) for f in traj.fields) ** 2
        assert abs(value) <= 1e-8 * max(scale, 1.0)

    def test_constant_windowed(self, grid):
        traj = constant_trajectory(grid, nt=201)
        assert abs(even_kernel_cancellation(traj, 0.02)) <= 1e-10

    def test_single_snapshot_rejected(self, grid):
        traj = Trajectory([taylor_green(grid)], dt=1e-3, viscosity=1.0,
                          grid=grid, validate=False)
        with pytest.raises(MollifierError):
            even_kernel_cancellation(traj, 0.01)

    def test_wide_eps_rejected(self, grid):
        traj = constant_trajectory(grid, nt=101)
        with pytest.raises(MollifierError):
            even_kernel_cancellation(traj, 0.03)


class TestEnstrophyPairingGap:
    def test_first_order_rate_on_viscous_decay(self, tg_traj):
        gaps = [abs(enstrophy_pairing_gap(tg_traj, eps))
                for eps in (0.16, 0.08, 0.04, 0.02)]
        assert all(gaps[i] > gaps[i + 1] for i in range(len(gaps) - 1))
        logs = np.log(gaps)
        slopes = np.diff(logs) / np.diff(np.log([0.16, 0.08, 0.04, 0.02]))
        assert np.mean(slopes) >= 0.8

    def test_time_derivative_consistency(self, tg_traj):
        # d/dt of the mollified trajectory matches a finite difference
        eps = 0.05
        smooth = mollify(tg_traj, eps)
        dsmooth = mollify_time_derivative(tg_traj, eps)
        i = tg_traj.index_of(0.25)
        fd = (smooth.fields[i + 1].c - smooth.fields[i - 1].c) / (2 * tg_traj.dt)
        assert np.max(np.abs(fd - dsmooth.fields[i].c)) <= 1e-4
