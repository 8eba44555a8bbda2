"""Pseudo-spectral time integration on the periodic box.

Modes: the full nonlinear equations ("navier-stokes"), the linear heat
flow with optional forcing ("stokes"), and linear transport against an
assigned divergence-free field ("oseen").  Time stepping is classical
RK4 on the integrating-factor transform, so the viscous semigroup is
applied exactly per mode and all discretization error sits in the
advective terms.

The time-reversed final-value companion solve and the space-time
smoothing operator used to manufacture bounded transport fields live
here as well.
"""

from __future__ import annotations

import hashlib
import json
import math
import time as _time
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from . import snapshots
from .spectral import (
    FourierField,
    Grid,
    energy,
    enstrophy,
    leray_project,
    advective_term,
    nonlinear_term,
    resample,
    random_rough_field,
    taylor_green,
)

TWO_PI = 2.0 * math.pi

MODES = ("navier-stokes", "stokes", "oseen")

__all__ = [
    "Trajectory",
    "TimeSeries",
    "SolverConfig",
    "InitialCondition",
    "SolverError",
    "CFLError",
    "NumericalError",
    "step",
    "solve",
    "solve_final_value",
    "reverse",
    "spacetime_smooth",
    "write_trajectory",
    "read_trajectory",
]


class SolverError(ValueError):
    pass


class CFLError(SolverError):
    pass


class NumericalError(RuntimeError):
    def __init__(self, message: str, step_index: int):
        super().__init__(message)
        self.step_index = step_index


@dataclass
class TimeSeries:
    """Per-step scalar diagnostics recorded during a solve."""

    t: np.ndarray
    energy: np.ndarray
    enstrophy: np.ndarray


class Trajectory:
    """Uniformly sampled sequence of divergence-free snapshots."""

    def __init__(self, fields: list[FourierField], dt: float, viscosity: float,
                 grid: Grid, mode: str = "navier-stokes",
                 provenance: Optional[dict] = None, t_start: float = 0.0,
                 series: Optional[TimeSeries] = None, validate: bool = True):
        if not fields:
            raise SolverError("a trajectory needs at least one snapshot")
        self.fields = list(fields)
        self.dt = float(dt)
        self.viscosity = float(viscosity)
        self.grid = grid
        self.mode = mode
        self.provenance = dict(provenance or {})
        self.t_start = float(t_start)
        self.series = series
        if validate:
            for i, f in enumerate(self.fields):
                if f.grid != grid:
                    raise SolverError(f"snapshot {i} grid mismatch")
                f.require_divergence_free()

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(len(self.fields))

    @property
    def duration(self) -> float:
        return self.dt * (len(self.fields) - 1)

    def __len__(self) -> int:
        return len(self.fields)

    def index_of(self, t: float) -> int:
        i = int(round((t - self.t_start) / self.dt))
        if not 0 <= i < len(self.fields):
            raise SolverError(f"t = {t} outside trajectory range")
        if abs(self.t_start + i * self.dt - t) > 1e-6 * self.dt:
            raise SolverError(f"t = {t} is not a snapshot time")
        return i

    def value_at(self, t: float) -> FourierField:
        """Linear interpolation between snapshots (exact at nodes)."""
        s = (t - self.t_start) / self.dt
        s = min(max(s, 0.0), len(self.fields) - 1.0)
        j = min(int(math.floor(s)), len(self.fields) - 2) if len(self.fields) > 1 else 0
        theta = s - j
        if theta <= 1e-12 or len(self.fields) == 1:
            return self.fields[j]
        if theta >= 1 - 1e-12:
            return self.fields[j + 1]
        return FourierField(
            (1.0 - theta) * self.fields[j].c + theta * self.fields[j + 1].c,
            self.grid,
        )

    def scaled(self, factor: float) -> "Trajectory":
        return Trajectory(
            [f * factor for f in self.fields], self.dt, self.viscosity,
            self.grid, self.mode, {**self.provenance, "scaled": factor},
            self.t_start, validate=False,
        )

    def energies(self) -> np.ndarray:
        return np.array([energy(f) for f in self.fields])

    def enstrophies(self) -> np.ndarray:
        return np.array([enstrophy(f) for f in self.fields])


@dataclass(frozen=True)
class InitialCondition:
    """Named analytic field, a rough random field, or a snapshot file."""

    kind: str
    amplitude: float = 1.0
    sigma: Optional[float] = None
    seed: Optional[int] = None
    path: Optional[str] = None

    KINDS = ("taylor-green", "taylor-green-3d", "zero", "rough", "snapshot")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise SolverError(f"unknown initial condition {self.kind!r}")
        if self.kind == "rough" and (self.sigma is None or self.seed is None):
            raise SolverError("rough initial data needs sigma and seed")
        if self.kind == "snapshot" and not self.path:
            raise SolverError("snapshot initial data needs a path")

    def build(self, grid: Grid) -> FourierField:
        if self.kind == "taylor-green":
            return taylor_green(grid, "2d", self.amplitude)
        if self.kind == "taylor-green-3d":
            return taylor_green(grid, "3d", self.amplitude)
        if self.kind == "zero":
            return FourierField.zero(grid)
        if self.kind == "rough":
            return random_rough_field(self.sigma, self.seed, grid, self.amplitude)
        fld, _, _ = snapshots.read_snapshot(self.path)
        if fld.grid != grid:
            fld = resample(fld, grid)
        return leray_project(fld)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "amplitude": self.amplitude}
        if self.sigma is not None:
            out["sigma"] = self.sigma
        if self.seed is not None:
            out["seed"] = self.seed
        if self.path is not None:
            out["path"] = self.path
        return out


@dataclass
class SolverConfig:
    n: int = 32
    dt: float = 1e-3
    t_end: float = 0.5
    viscosity: float = 1.0
    initial: InitialCondition = dataclass_field(
        default_factory=lambda: InitialCondition("taylor-green")
    )
    snapshot_stride: int = 1
    mode: str = "navier-stokes"

    def validate(self) -> None:
        Grid(self.n)  # raises on bad n
        if self.dt <= 0 or self.t_end <= 0:
            raise SolverError("dt and t_end must be positive")
        if self.viscosity <= 0:
            raise SolverError("viscosity must be positive")
        if self.mode not in MODES:
            raise SolverError(f"unknown mode {self.mode!r}")
        if self.snapshot_stride < 1:
            raise SolverError("snapshot_stride must be >= 1")
        n_steps = round(self.t_end / self.dt)
        if n_steps < 1 or abs(n_steps * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise SolverError("t_end must be an integer multiple of dt")
        if n_steps % self.snapshot_stride:
            raise SolverError("step count must be divisible by snapshot_stride")

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "dt": self.dt,
            "t_end": self.t_end,
            "viscosity": self.viscosity,
            "initial": self.initial.to_dict(),
            "snapshot_stride": self.snapshot_stride,
            "mode": self.mode,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


FieldSampler = Callable[[float], FourierField]
FieldLike = Union[FourierField, FieldSampler, None]


def _as_sampler(obj: FieldLike) -> Optional[FieldSampler]:
    if obj is None:
        return None
    if isinstance(obj, FourierField):
        return lambda t: obj
    if isinstance(obj, Trajectory):
        return obj.value_at
    return obj


def _sup_bound(f: FourierField) -> float:
    """Cheap spectral bound on the pointwise Euclidean magnitude."""
    w = f.grid.spectral_weights
    comps = [float(np.sum(w * np.abs(f.c[i]))) for i in range(3)]
    return math.sqrt(sum(c * c for c in comps))


class _Stepper:
    """Integrating-factor RK4 on the spectral coefficients."""

    def __init__(self, grid: Grid, dt: float, viscosity: float, mode: str,
                 transport: FieldLike = None, forcing: FieldLike = None,
                 check_cfl: bool = True):
        if mode not in MODES:
            raise SolverError(f"unknown mode {mode!r}")
        self.grid = grid
        self.dt = dt
        self.viscosity = viscosity
        self.mode = mode
        self.transport = _as_sampler(transport)
        self.forcing = _as_sampler(forcing)
        self.check_cfl = check_cfl and mode != "stokes"
        if mode == "oseen" and self.transport is None:
            self.transport = lambda t: FourierField.zero(grid)
        self.E = np.exp(-viscosity * grid.k_squared * (0.5 * dt))
        self.E2 = self.E * self.E
        self.dx = TWO_PI / grid.n

    def _rhs(self, c: np.ndarray, t: float) -> np.ndarray:
        u = FourierField(c, self.grid)
        if self.mode == "navier-stokes":
            out = (-1.0) * nonlinear_term(u, check=False).c
        elif self.mode == "stokes":
            out = np.zeros_like(c)
        else:
            a = self.transport(t)
            out = (-1.0) * leray_project(advective_term(a, u)).c
        if self.forcing is not None:
            out = out + leray_project(self.forcing(t)).c
        return out

    def _cfl_speed(self, c: np.ndarray, t: float) -> float:
        if self.mode == "navier-stokes":
            return _sup_bound(FourierField(c, self.grid))
        return _sup_bound(self.transport(t))

    def step(self, c: np.ndarray, t: float) -> np.ndarray:
        if self.check_cfl:
            speed = self._cfl_speed(c, t)
            if speed > 0 and self.dt > 0.5 * self.dx / speed:
                raise CFLError(
                    f"dt = {self.dt} exceeds CFL bound {0.5 * self.dx / speed:.3e} "
                    f"at t = {t:.6g}"
                )
        dt, E, E2 = self.dt, self.E, self.E2
        f1 = self._rhs(c, t)
        u2 = E * (c + (0.5 * dt) * f1)
        f2 = self._rhs(u2, t + 0.5 * dt)
        u3 = E * c + (0.5 * dt) * f2
        f3 = self._rhs(u3, t + 0.5 * dt)
        u4 = E2 * c + dt * E * f3
        f4 = self._rhs(u4, t + dt)
        return E2 * c + (dt / 6.0) * (E2 * f1 + 2.0 * E * (f2 + f3) + f4)


def step(u: FourierField, dt: float, viscosity: float, mode: str = "navier-stokes",
         transport: FieldLike = None, forcing: FieldLike = None,
         t: float = 0.0, check_cfl: bool = True) -> FourierField:
    """Advance one integrating-factor RK4 step; viscous part exact.

    ``transport`` and ``forcing`` may be fields, trajectories, or
    callables of time (evaluated at the RK4 substep times).  Raises
    :class:`CFLError` when dt exceeds half a cell crossing time.
    """
    u.require_divergence_free()
    stepper = _Stepper(u.grid, dt, viscosity, mode, transport, forcing, check_cfl)
    return FourierField(stepper.step(u.c, t), u.grid)


def solve(config: SolverConfig, transport: FieldLike = None,
          forcing: FieldLike = None) -> Trajectory:
    """Integrate the configured problem from t = 0 to t_end.

    Snapshots are collected every ``snapshot_stride`` steps (always
    including t = 0 and t_end) and per-step energy/enstrophy series are
    recorded.  NaN contamination aborts with the offending step index.
    """
    config.validate()
    grid = Grid(config.n)
    u0 = config.initial.build(grid)
    u0.require_divergence_free()
    stepper = _Stepper(grid, config.dt, config.viscosity, config.mode,
                       transport, forcing)
    n_steps = config.n_steps
    stride = config.snapshot_stride
    c = u0.c.copy()
    fields = [FourierField(c.copy(), grid)]
    ts = np.empty(n_steps + 1)
    es = np.empty(n_steps + 1)
    zs = np.empty(n_steps + 1)
    ts[0], es[0], zs[0] = 0.0, energy(u0), enstrophy(u0)
    for i in range(n_steps):
        t = i * config.dt
        c = stepper.step(c, t)
        if not np.all(np.isfinite(c)):
            raise NumericalError(f"non-finite values after step {i + 1}", i + 1)
        f = FourierField(c, grid)
        ts[i + 1] = (i + 1) * config.dt
        es[i + 1] = energy(f)
        zs[i + 1] = enstrophy(f)
        if (i + 1) % stride == 0:
            fields.append(FourierField(c.copy(), grid))
    return Trajectory(
        fields=fields,
        dt=config.dt * stride,
        viscosity=config.viscosity,
        grid=grid,
        mode=config.mode,
        provenance={"config_hash": config.config_hash(),
                    "solver_dt": config.dt,
                    "seed": config.initial.seed},
        series=TimeSeries(ts, es, zs),
        validate=False,
    )


def reverse(traj: Trajectory) -> Trajectory:
    """Time reversal t -> T - t; on a uniform grid from 0 the times are fixed."""
    if abs(traj.t_start) > 0:
        raise SolverError("reverse expects a trajectory starting at t = 0")
    return Trajectory(
        fields=list(reversed(traj.fields)),
        dt=traj.dt,
        viscosity=traj.viscosity,
        grid=traj.grid,
        mode=traj.mode,
        provenance={**traj.provenance,
                    "time_reversed": not traj.provenance.get("time_reversed", False)},
        t_start=0.0,
        validate=False,
    )


def solve_final_value(config: SolverConfig, transport: Trajectory,
                      forcing: Trajectory) -> Trajectory:
    """Solve the final-value transport problem with zero terminal data.

    The problem is integrated forward in reversed time: reversing and
    negating both the transport and the forcing turns the final-value
    system into a standard transport solve from zero initial data; the
    result is reversed back, so the terminal snapshot vanishes exactly.
    """
    config.validate()
    if transport.grid.n != config.n or forcing.grid.n != config.n:
        raise SolverError("transport/forcing grids must match the config")
    for tr in (transport, forcing):
        if abs(tr.duration - config.t_end) > 1e-9 * config.t_end:
            raise SolverError("transport/forcing must span [0, t_end]")
    rev_transport = reverse(transport).scaled(-1.0)
    rev_forcing = reverse(forcing).scaled(-1.0)
    fv_config = SolverConfig(
        n=config.n, dt=config.dt, t_end=config.t_end,
        viscosity=config.viscosity,
        initial=InitialCondition("zero"),
        snapshot_stride=config.snapshot_stride,
        mode="oseen",
    )
    w = solve(fv_config, transport=rev_transport, forcing=rev_forcing)
    psi = reverse(w)
    psi.provenance["final_value"] = True
    psi.series = None
    return psi


def spacetime_smooth(traj: Trajectory, eps: float) -> Trajectory:
    """Spectral low-pass at |k| <= 1/eps composed with time mollification.

    The result is divergence-free and bounded in space-time; band-limited
    trajectories below the cutoff are only mollified in time.
    """
    from .mollifier import MollifierError, mollify

    if eps <= 0:
        raise SolverError("eps must be positive")
    cutoff = 1.0 / eps
    if cutoff > traj.grid.n / 2:
        raise SolverError(
            f"eps = {eps} too small for grid: cutoff {cutoff:.1f} exceeds n/2"
        )
    mask = traj.grid.k_squared <= cutoff**2
    low = Trajectory(
        fields=[FourierField(f.c * mask, traj.grid) for f in traj.fields],
        dt=traj.dt, viscosity=traj.viscosity, grid=traj.grid,
        mode=traj.mode, provenance={**traj.provenance, "lowpass_cutoff": cutoff},
        t_start=traj.t_start, validate=False,
    )
    try:
        return mollify(low, eps)
    except MollifierError as exc:
        raise SolverError(str(exc)) from exc


def write_trajectory(directory: Union[str, Path], traj: Trajectory) -> list[Path]:
    """Write snapshots as NSEF files snap_000000.nsef, snap_000001.nsef, ..."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, (t, f) in enumerate(zip(traj.times, traj.fields)):
        p = directory / f"snap_{i:06d}.nsef"
        snapshots.write_snapshot(p, f, t, traj.viscosity)
        paths.append(p)
    return paths


def read_trajectory(directory: Union[str, Path],
                    mode: str = "navier-stokes") -> Trajectory:
    """Load a trajectory from a directory of NSEF snapshots."""
    directory = Path(directory)
    paths = sorted(directory.glob("snap_*.nsef"))
    if not paths:
        raise SolverError(f"no snapshots found in {directory}")
    fields = []
    times = []
    viscosity = None
    for p in paths:
        f, t, nu = snapshots.read_snapshot(p)
        fields.append(f)
        times.append(t)
        viscosity = nu if viscosity is None else viscosity
        if abs(nu - viscosity) > 0:
            raise SolverError(f"{p}: inconsistent viscosity")
    if len(times) > 1:
        dts = np.diff(times)
        dt = float(dts[0])
        if np.max(np.abs(dts - dt)) > 1e-12 * max(abs(times[-1]), 1.0):
            raise SolverError("snapshot times are not uniform")
    else:
        dt = 1.0
    return Trajectory(fields=fields, dt=dt, viscosity=float(viscosity),
                      grid=fields[0].grid, mode=mode,
                      provenance={"source": str(directory)},
                      t_start=float(times[0]))


def wall_timer() -> Callable[[], float]:
    start = _time.perf_counter()
    return lambda: _time.perf_counter() - start
