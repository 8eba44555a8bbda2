"""Energy-budget diagnostics for trajectories.

Per-snapshot rows (energy, enstrophy, cumulative dissipation, balance
residual, instantaneous advective flux), mixed space-time norms at
criterion exponents with exact-arithmetic verdicts, the mollified flux
splitting, the regularized balance identity residual, and the
transport-regularity probe that measures the mixed norms predicted by
the exponent bootstrap.

Time quadrature is trapezoidal on the trajectory's snapshot grid
throughout; residual tolerances therefore scale with dt^2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .exponents import (
    Exponent,
    CriterionVerdict,
    MixedNormSpace,
    bootstrap_trace,
    classify,
    scaling_weight,
)
from .mollifier import MollifierError, mollify, mollify_time_derivative
from .solver import SolverConfig, InitialCondition, Trajectory, solve
from .spectral import (
    FourierField,
    Grid,
    advective_term,
    energy,
    enstrophy,
    leray_project,
    lq_norm,
    nonlinear_term,
    resample,
    sobolev_seminorm,
    spectral_inner,
)

__all__ = [
    "LedgerError",
    "balance_residual",
    "flux_integral",
    "FluxSplit",
    "flux_splitting",
    "hopf_identity_residual",
    "mixed_norm",
    "NormEntry",
    "LedgerReport",
    "criterion_report",
    "ProbeRow",
    "ProbeReport",
    "oseen_regularity_probe",
    "DEFAULT_CRITERION_NORMS",
]


class LedgerError(ValueError):
    pass


ExponentLike = Union[Exponent, Fraction, int, str]


def _trapezoid_weights(nt: int, dt: float) -> np.ndarray:
    w = np.full(nt, dt)
    if nt > 1:
        w[0] *= 0.5
        w[-1] *= 0.5
    else:
        w[0] = 0.0
    return w


def _cumulative_dissipation(traj: Trajectory) -> np.ndarray:
    """Trapezoidal cumulative of nu * ||grad u||^2 at snapshot times."""
    g = traj.viscosity * traj.enstrophies()
    out = np.zeros(len(g))
    if len(g) > 1:
        out[1:] = np.cumsum(0.5 * (g[1:] + g[:-1]) * traj.dt)
    return out


def balance_residual(traj: Trajectory, t: float) -> float:
    """Energy-balance defect E(t) + int_0^t nu ||grad u||^2 - E(0).

    Exactly zero at t = 0; negative values indicate apparent anomalous
    dissipation (energy lost beyond the resolved viscous drain).
    """
    i = traj.index_of(t)
    e = traj.energies()
    return float(e[i] + _cumulative_dissipation(traj)[i] - e[0])


def _flux_series(traj: Trajectory) -> np.ndarray:
    return np.array(
        [spectral_inner(nonlinear_term(f, check=False), f) for f in traj.fields]
    )


def flux_integral(traj: Trajectory, mollify_eps: Optional[float] = None) -> float:
    """Time integral of the advective energy flux ((u.grad)u, u).

    With ``mollify_eps`` the flux is paired against the time-mollified
    trajectory instead; see :func:`flux_splitting` for the term-by-term
    decomposition.  Without mollification the rotational-form product
    makes the result vanish to round-off for divergence-free data.
    """
    w = _trapezoid_weights(len(traj), traj.dt)
    if mollify_eps is None:
        return float(np.sum(w * _flux_series(traj)))
    smooth = mollify(traj, mollify_eps)
    total = 0.0
    for i, f in enumerate(traj.fields):
        total += w[i] * spectral_inner(nonlinear_term(f, check=False), smooth.fields[i])
    return total


@dataclass(frozen=True)
class FluxSplit:
    """Three-way splitting of the mollified flux pairing.

    smoothing_term:     ((u.grad)u, (u_m)_eps - (u)_eps)  [u_m = low-pass u]
    mollification_term: ((u.grad)u, (u)_eps - u)
    raw_term:           ((u.grad)u, u)
    """

    eps: float
    smoothing_term: float
    mollification_term: float
    raw_term: float

    @property
    def mollified_total(self) -> float:
        return self.mollification_term + self.raw_term


def flux_splitting(traj: Trajectory, eps: float) -> FluxSplit:
    """Term-by-term decomposition of ((u.grad)u, (u_m)_eps).

    The smooth comparison field u_m is the spectral low-pass of u at
    cutoff 1/eps (a no-op when the cutoff exceeds the grid); each term
    shrinks as eps decreases on smooth trajectories.
    """
    w = _trapezoid_weights(len(traj), traj.dt)
    cutoff = 1.0 / eps
    mask = traj.grid.k_squared <= cutoff**2
    lowpass = Trajectory(
        [FourierField(f.c * mask, traj.grid) for f in traj.fields],
        traj.dt, traj.viscosity, traj.grid, traj.mode,
        traj.provenance, traj.t_start, validate=False,
    )
    smooth_m = mollify(lowpass, eps)
    smooth = mollify(traj, eps)
    a = b = c = 0.0
    for i, f in enumerate(traj.fields):
        nl = nonlinear_term(f, check=False)
        a += w[i] * spectral_inner(nl, smooth_m.fields[i] - smooth.fields[i])
        b += w[i] * spectral_inner(nl, smooth.fields[i] - f)
        c += w[i] * spectral_inner(nl, f)
    return FluxSplit(eps=eps, smoothing_term=a, mollification_term=b, raw_term=c)


def hopf_identity_residual(traj: Trajectory, eps: float, t0: float) -> float:
    """Defect of the regularized balance identity tested against (u)_eps.

    Evaluates (u(t0), phi(t0)) - (u(0), phi(0))
      - int_0^t0 [(u, dphi/dt) - ((u.grad)u, phi) - nu (grad u, grad phi)] dt
    with phi the time-mollified trajectory itself.  For solver output
    the residual is integration plus quadrature error and decreases at
    second order under dt refinement.  The advective term is included
    for navier-stokes trajectories and absent for stokes ones.
    """
    if traj.mode not in ("navier-stokes", "stokes"):
        raise LedgerError(f"identity residual undefined for mode {traj.mode!r}")
    times = traj.times
    i0 = traj.index_of(t0)
    if not (times[0] + eps < t0 < times[-1] - eps):
        raise MollifierError(
            f"t0 = {t0} outside admissible window ({times[0] + eps}, {times[-1] - eps})"
        )
    phi = mollify(traj, eps)
    dphi = mollify_time_derivative(traj, eps)
    w = _trapezoid_weights(i0 + 1, traj.dt)
    integral = 0.0
    nu = traj.viscosity
    for i in range(i0 + 1):
        u = traj.fields[i]
        term = spectral_inner(u, dphi.fields[i])
        term -= nu * _gradient_inner(u, phi.fields[i])
        if traj.mode == "navier-stokes":
            term -= spectral_inner(nonlinear_term(u, check=False), phi.fields[i])
        integral += w[i] * term
    lhs = spectral_inner(traj.fields[i0], phi.fields[i0])
    rhs = spectral_inner(traj.fields[0], phi.fields[0]) + integral
    return lhs - rhs


def _gradient_inner(a: FourierField, b: FourierField) -> float:
    w = a.grid.spectral_weights * a.grid.deriv_k_squared
    return float(np.sum(w * (a.c * np.conj(b.c)).real)) * (2.0 * math.pi) ** 3


def mixed_norm(traj: Trajectory, r: ExponentLike, q: ExponentLike,
               derivative_order: int = 0) -> float:
    """Mixed space-time norm (int ||u(t)||_q^r dt)^(1/r), max for r = inf."""
    r = r if isinstance(r, Exponent) else Exponent(r)
    if derivative_order == 0:
        values = np.array([lq_norm(f, q) for f in traj.fields])
    elif derivative_order == 1:
        values = np.array([sobolev_seminorm(f, q) for f in traj.fields])
    else:
        raise LedgerError("derivative_order must be 0 or 1")
    if r.is_inf:
        return float(np.max(values))
    rf = float(r)
    w = _trapezoid_weights(len(traj), traj.dt)
    return float(np.sum(w * values**rf)) ** (1.0 / rf)


#: Default probe set: the classical velocity criterion pairs and one
#: gradient pair from each criterion case, plus the energy norms.
DEFAULT_CRITERION_NORMS: tuple[tuple[str, str, int], ...] = (
    ("inf", "2", 0),
    ("2", "2", 1),
    ("4", "4", 0),
    ("3", "6", 0),
    ("8/3", "8", 0),
    ("8", "8/5", 1),
    ("3", "9/5", 1),
    ("2", "12/5", 1),
    ("3/2", "4", 1),
)


@dataclass
class NormEntry:
    space: MixedNormSpace
    value: float
    verdict: CriterionVerdict
    refined_value: Optional[float] = None

    @property
    def refinement_ratio(self) -> Optional[float]:
        if self.refined_value is None:
            return None
        lo = min(self.value, self.refined_value)
        hi = max(self.value, self.refined_value)
        if lo == 0.0:
            return math.inf if hi > 0 else 1.0
        return hi / lo

    @property
    def refinement_stable(self) -> Optional[bool]:
        ratio = self.refinement_ratio
        return None if ratio is None else bool(ratio <= 2.0)


def _verdict_dict(v: CriterionVerdict) -> dict:
    def check(c):
        if c is None:
            return None
        return {"satisfied": c.satisfied,
                "margin": None if c.margin is None else str(c.margin)}

    out = {
        "space": str(v.space),
        "serrin": check(v.serrin),
        "shinbrot": check(v.shinbrot),
        "leray_hopf": check(v.leray_hopf),
        "leslie_shvydkoy": check(v.leslie_shvydkoy),
        "gradient_regularity": check(v.gradient_regularity),
        "gradient_ranges_case": v.gradient_ranges_case,
        "gradient_ranges": check(v.gradient_ranges),
    }
    if v.embedded_velocity is not None:
        out["embedded_velocity"] = _verdict_dict(v.embedded_velocity)
    return {k: val for k, val in out.items() if val is not None}


@dataclass
class LedgerReport:
    """Per-time balance rows plus aggregate mixed norms and verdicts."""

    times: np.ndarray
    energies: np.ndarray
    enstrophies: np.ndarray
    dissipation: np.ndarray
    residuals: np.ndarray
    flux: np.ndarray
    norms: list[NormEntry] = dataclass_field(default_factory=list)
    warnings: list[str] = dataclass_field(default_factory=list)

    def csv_lines(self):
        yield "t,energy,enstrophy,dissipation,residual,flux"
        for row in zip(self.times, self.energies, self.enstrophies,
                       self.dissipation, self.residuals, self.flux):
            yield ",".join(repr(float(x)) for x in row)

    def write_csv(self, path: Union[str, Path]) -> None:
        Path(path).write_text("\n".join(self.csv_lines()) + "\n")

    def aggregates(self) -> dict:
        entries = []
        for e in self.norms:
            entry = {
                "r": str(e.space.time_exp),
                "q": str(e.space.space_exp),
                "k": e.space.derivative_order,
                "value": e.value,
                "verdict": _verdict_dict(e.verdict),
            }
            if e.refined_value is not None:
                entry["refined_value"] = e.refined_value
                entry["refinement_ratio"] = e.refinement_ratio
                entry["refinement_stable"] = e.refinement_stable
            entries.append(entry)
        return {"mixed_norms": entries, "warnings": list(self.warnings)}

    def write_aggregates(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.aggregates(), indent=2, sort_keys=True) + "\n")


def criterion_report(traj: Trajectory,
                     norms: Sequence[tuple] = DEFAULT_CRITERION_NORMS,
                     refined: Optional[Trajectory] = None) -> LedgerReport:
    """Measure balance rows and criterion mixed norms for a trajectory.

    ``refined`` may hold the same flow at doubled resolution; norms are
    then measured on both and flagged stable when they agree within 2x.
    """
    e = traj.energies()
    z = traj.enstrophies()
    d = _cumulative_dissipation(traj)
    residuals = e + d - e[0]
    flux = _flux_series(traj)
    entries = []
    for (r, q, k) in norms:
        space = MixedNormSpace(Exponent(str(r)), Exponent(str(q)), k)
        value = mixed_norm(traj, space.time_exp, space.space_exp, k)
        refined_value = None
        if refined is not None:
            refined_value = mixed_norm(refined, space.time_exp, space.space_exp, k)
        entries.append(NormEntry(space, value, classify(space), refined_value))
    warnings = []
    if len(traj) > 1 and np.any(np.diff(d) < 0):
        warnings.append("cumulative dissipation is not monotone")
    return LedgerReport(
        times=traj.times, energies=e, enstrophies=z, dissipation=d,
        residuals=residuals, flux=flux, norms=entries, warnings=warnings,
    )


@dataclass
class ProbeRow:
    index: int
    alpha: Exponent
    beta: Exponent
    advective_norm: float
    pressure_norm: float
    closed_form_match: Optional[bool]
    refined_advective: Optional[float] = None
    refined_pressure: Optional[float] = None

    def _ratio(self, a: float, b: Optional[float]) -> Optional[float]:
        if b is None:
            return None
        lo, hi = min(a, b), max(a, b)
        if lo == 0.0:
            return 1.0 if hi == 0.0 else math.inf
        return hi / lo

    @property
    def advective_ratio(self) -> Optional[float]:
        return self._ratio(self.advective_norm, self.refined_advective)

    @property
    def pressure_ratio(self) -> Optional[float]:
        return self._ratio(self.pressure_norm, self.refined_pressure)

    @property
    def stable(self) -> Optional[bool]:
        ra, rp = self.advective_ratio, self.pressure_ratio
        if ra is None or rp is None:
            return None
        return bool(ra <= 2.0 and rp <= 2.0)


@dataclass
class ProbeReport:
    transport_pair: tuple[Exponent, Exponent]
    gamma: Fraction
    rows: list[ProbeRow]
    warnings: list[str]

    def table_lines(self):
        yield "n,alpha,beta,advective_norm,pressure_norm,adv_ratio,pi_ratio,stable"
        for r in self.rows:
            yield ",".join([
                str(r.index), str(r.alpha), str(r.beta),
                repr(r.advective_norm), repr(r.pressure_norm),
                "" if r.advective_ratio is None else repr(r.advective_ratio),
                "" if r.pressure_ratio is None else repr(r.pressure_ratio),
                "" if r.stable is None else str(r.stable),
            ])


def _probe_forcing(grid: Grid) -> FourierField:
    """Fixed divergence-free probe forcing, not aligned with the vortex data."""
    x, y, z = grid.mesh()
    zero = np.zeros((grid.n,) * 3)
    comps = np.stack([
        0.5 * np.sin(2 * z) + zero,
        0.5 * np.sin(2 * x) + zero,
        0.5 * np.sin(2 * y) + zero,
    ])
    return FourierField.from_real(comps, grid)


def _probe_measurements(vtraj: Trajectory, transport_at, pairs) -> list[tuple[float, float]]:
    """Mixed norms of (a.grad)v and its pressure-gradient complement."""
    adv_mags = []
    prs_mags = []
    for t, v in zip(vtraj.times, vtraj.fields):
        a = transport_at(t)
        adv = advective_term(a, v)
        grad_pi = (leray_project(adv) - adv)  # = -(I - P) adv
        adv_mags.append(adv.to_real().magnitude())
        prs_mags.append(grad_pi.to_real().magnitude())
    w = _trapezoid_weights(len(vtraj), vtraj.dt)
    out = []
    for alpha, beta in pairs:
        af = float(alpha)
        results = []
        for mags in (adv_mags, prs_mags):
            vals = np.array([lq_norm(m, beta) for m in mags])
            if math.isinf(af):
                results.append(float(np.max(vals)))
            else:
                results.append(float(np.sum(w * vals**af)) ** (1.0 / af))
        out.append((results[0], results[1]))
    return out


def oseen_regularity_probe(transport: Trajectory, r: ExponentLike, s: ExponentLike,
                           n_steps: Optional[int] = None,
                           forcing: Optional[FourierField] = None,
                           refine: bool = True,
                           snapshot_stride: int = 5,
                           viscosity: float = 1.0) -> ProbeReport:
    """Measure the transport-problem mixed norms predicted by the bootstrap.

    Solves the linear transport problem against ``transport`` (declared
    to lie in L^r(L^s)) from zero data with a fixed smooth forcing, and
    measures || (a.grad)v || and || grad pi || in each mixed norm pair
    produced by the exponent bootstrap.  The pairs are recomputed by the
    iterative rule and cross-checked against the closed forms when
    1/r + 1/s = 1/2.  With ``refine`` the solve is repeated at doubled
    resolution and norm ratios are reported (stable when within 2x).
    """
    r = r if isinstance(r, Exponent) else Exponent(r)
    s = s if isinstance(s, Exponent) else Exponent(s)
    warnings = []
    shinbrot_weight = scaling_weight(MixedNormSpace(r, s, 0), "shinbrot")
    if shinbrot_weight > 1:
        warnings.append(
            f"declared pair ({r}, {s}) has 2/r + 2/s = {shinbrot_weight} > 1: "
            "outside the Shinbrot class, probe runs as measurement only"
        )
    trace = bootstrap_trace(r, s)
    pairs = list(trace.forcing_seq)
    if n_steps is not None:
        pairs = pairs[:n_steps]
    closed = []
    for i, (alpha, beta) in enumerate(pairs):
        if trace.gamma == Fraction(1, 2):
            n = i + 1
            sv = s.value
            closed.append(alpha == Exponent(sv / (sv - n))
                          and beta == Exponent(2 * sv / (2 * n + sv)))
        else:
            closed.append(None)

    grid = transport.grid
    if forcing is None:
        forcing = _probe_forcing(grid)
    n_solver_steps = max(len(transport) - 1, 1)
    stride = snapshot_stride
    while n_solver_steps % stride:
        stride -= 1
    cfg = SolverConfig(
        n=grid.n, dt=transport.dt, t_end=transport.duration,
        viscosity=viscosity, initial=InitialCondition("zero"),
        snapshot_stride=stride, mode="oseen",
    )
    vtraj = solve(cfg, transport=transport, forcing=forcing)
    measured = _probe_measurements(vtraj, transport.value_at, pairs)

    refined_measured = [None] * len(pairs)
    if refine:
        grid2 = Grid(2 * grid.n)
        transport2 = lambda t: resample(transport.value_at(t), grid2)
        forcing2 = resample(forcing, grid2)
        cfg2 = SolverConfig(
            n=grid2.n, dt=transport.dt, t_end=transport.duration,
            viscosity=viscosity, initial=InitialCondition("zero"),
            snapshot_stride=stride, mode="oseen",
        )
        vtraj2 = solve(cfg2, transport=transport2, forcing=forcing2)
        refined_measured = _probe_measurements(vtraj2, transport2, pairs)

    rows = []
    for i, ((alpha, beta), (an, pn), ref) in enumerate(
            zip(pairs, measured, refined_measured)):
        row = ProbeRow(index=i + 1, alpha=alpha, beta=beta,
                       advective_norm=an, pressure_norm=pn,
                       closed_form_match=closed[i])
        if ref is not None:
            row.refined_advective, row.refined_pressure = ref
        rows.append(row)
    return ProbeReport(transport_pair=(r, s), gamma=trace.gamma,
                       rows=rows, warnings=warnings)
