"""Exact arithmetic over Lebesgue/Sobolev integrability exponents.

Everything in this module is computed with rational numbers (plus a
distinguished infinity), so every identity can be tested with zero
tolerance.  The module covers:

* Hoelder conjugates, the 3D Sobolev embedding exponent ``3q/(3-q)``,
  and the time-integrability gain ``1/p_* = 1/p - 1/2``.
* The piecewise map ``q -> p(q)`` giving the smallest time exponent for
  which a gradient bound ``grad u in L^p(L^q)`` yields energy balance,
  together with the interpolation weights ``theta`` used case by case.
* Scaling weights (parabolic ``2/r + 3/s``, gradient ``2/p + 3/q`` and
  the non-scaling-invariant ``2/r + 2/s``) and the one-parameter family
  of space-time scalings indexed by ``alpha``.
* The maximal-regularity bootstrap: alternating Hoelder combination with
  a transport pair ``(r, s)`` and the ``star`` embedding, including the
  closed forms ``alpha_n = s/(s-n)``, ``beta_n = 2s/(2n+s)`` valid when
  ``1/r + 1/s = 1/2``, the stopping index ``N = floor(s/2) - 1`` and the
  interpolation blend reaching ``L^{2s/(2+s)}(L^{s/(s-1)})``.
* A region diagram over the ``(1/q, 1/p)`` square labelling each point
  with the strongest criterion it satisfies.

All functions are pure and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Union

__all__ = [
    "Exponent",
    "INF",
    "ExponentRangeError",
    "IterationStop",
    "ShinbrotRegimeError",
    "MixedNormSpace",
    "CriterionCheck",
    "CriterionVerdict",
    "BootstrapStep",
    "BootstrapTrace",
    "ShinbrotEndgame",
    "RegionPoint",
    "holder_conjugate",
    "sobolev_exponent",
    "sobolev_embeds_all_finite",
    "star_exponent",
    "gradient_ranges_time_exponent",
    "gradient_ranges_case",
    "scaling_weight",
    "general_scaling_exponent",
    "classify",
    "proof_case_theta",
    "bootstrap_step",
    "bootstrap_trace",
    "shinbrot_endgame",
    "region_diagram",
    "region_landmarks",
]

RationalLike = Union[int, Fraction, str, "Exponent"]


class ExponentRangeError(ValueError):
    """An exponent lies outside the admissible range of an operation."""


class ShinbrotRegimeError(ValueError):
    """Transport pair lies below the Shinbrot regime (1/r + 1/s > 1/2)."""


class IterationStop(Exception):
    """Bootstrap iteration produced an exponent leaving (1, inf)."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def _as_fraction(value: Union[int, Fraction, str]) -> Fraction:
    if isinstance(value, float):
        raise TypeError("floats are rejected: exponent arithmetic is exact")
    return Fraction(value)


class Exponent:
    """An integrability exponent: an exact rational in [1, inf] with inf.

    Internally the reciprocal is stored, so that Hoelder-type identities
    are plain additions and infinity is the honest value 0.
    """

    __slots__ = ("_recip",)

    def __init__(self, value: RationalLike):
        if isinstance(value, Exponent):
            self._recip = value._recip
            return
        if isinstance(value, str) and value.strip() in ("inf", "oo", "infinity"):
            self._recip = Fraction(0)
            return
        v = _as_fraction(value)
        if v < 1:
            raise ExponentRangeError(f"exponent must be >= 1, got {v}")
        self._recip = 1 / v

    @classmethod
    def from_reciprocal(cls, recip: Fraction) -> "Exponent":
        recip = Fraction(recip)
        if recip < 0 or recip > 1:
            raise ExponentRangeError(f"reciprocal must lie in [0, 1], got {recip}")
        obj = object.__new__(cls)
        obj._recip = recip
        return obj

    @classmethod
    def parse(cls, text: str) -> "Exponent":
        """Parse 'inf', an integer, or a fraction string like '9/5'."""
        return cls(text.strip())

    @property
    def is_inf(self) -> bool:
        return self._recip == 0

    @property
    def reciprocal(self) -> Fraction:
        return self._recip

    @property
    def value(self) -> Fraction:
        if self.is_inf:
            raise ExponentRangeError("infinite exponent has no rational value")
        return 1 / self._recip

    def __float__(self) -> float:
        return math.inf if self.is_inf else float(self.value)

    def _coerce(self, other) -> Optional["Exponent"]:
        if isinstance(other, Exponent):
            return other
        if isinstance(other, (int, Fraction, str)):
            try:
                return Exponent(other)
            except (ExponentRangeError, ValueError, ZeroDivisionError):
                return None
        return None

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        return NotImplemented if o is None else self._recip == o._recip

    def __lt__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else self._recip > o._recip

    def __le__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else self._recip >= o._recip

    def __gt__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else self._recip < o._recip

    def __ge__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else self._recip <= o._recip

    def __hash__(self) -> int:
        return hash(self._recip)

    def __str__(self) -> str:
        return "inf" if self.is_inf else str(self.value)

    def __repr__(self) -> str:
        return f"Exponent('{self}')"


INF = Exponent("inf")


def _exp(value: RationalLike) -> Exponent:
    return value if isinstance(value, Exponent) else Exponent(value)


@dataclass(frozen=True)
class MixedNormSpace:
    """The Bochner class L^{time_exp}(0,T; W^{derivative_order, space_exp})."""

    time_exp: Exponent
    space_exp: Exponent
    derivative_order: int = 0

    def __post_init__(self):
        object.__setattr__(self, "time_exp", _exp(self.time_exp))
        object.__setattr__(self, "space_exp", _exp(self.space_exp))
        if self.derivative_order not in (0, 1):
            raise ExponentRangeError("derivative_order must be 0 or 1")

    def __str__(self) -> str:
        inner = f"W^(1,{self.space_exp})" if self.derivative_order else f"L^{self.space_exp}"
        return f"L^{self.time_exp}({inner})"


class CriterionCheck(NamedTuple):
    """Outcome of one criterion: flag plus exact margin (threshold - weight)."""

    satisfied: bool
    margin: Optional[Fraction]


@dataclass(frozen=True)
class CriterionVerdict:
    """Per-criterion flags and exact margins for a mixed-norm space.

    For velocity spaces (derivative_order 0) the four velocity criteria
    are populated; gradient fields are None.  For gradient spaces the
    gradient criteria are populated together with the verdict of the
    Sobolev-embedded velocity space (time_exp, space_exp*).

    Margin conventions (all exact rationals, satisfied iff margin >= 0
    and any side condition holds):
      serrin               1   - (2/r + 3/s),   side s > 3
      shinbrot             1   - (2/r + 2/s),   side s >= 4
      leray_hopf           3/2 - (2/r + 3/s)
      leslie_shvydkoy      1/2 - (1/r + 1/s),   side 3 <= r <= s
      gradient_regularity  2   - (2/p + 3/q),   side q > 3/2
      gradient_ranges      1/p_required(q) - 1/p  (reciprocal scale)
    """

    space: MixedNormSpace
    serrin: Optional[CriterionCheck] = None
    shinbrot: Optional[CriterionCheck] = None
    leray_hopf: Optional[CriterionCheck] = None
    leslie_shvydkoy: Optional[CriterionCheck] = None
    gradient_regularity: Optional[CriterionCheck] = None
    gradient_ranges_case: Optional[str] = None
    gradient_ranges: Optional[CriterionCheck] = None
    embedded_velocity: Optional["CriterionVerdict"] = None


def holder_conjugate(q: RationalLike) -> Exponent:
    """Conjugate exponent: 1/q + 1/q' = 1, with 1 <-> inf."""
    q = _exp(q)
    return Exponent.from_reciprocal(1 - q.reciprocal)


def sobolev_exponent(q: RationalLike) -> Exponent:
    """3D Sobolev embedding exponent q* = 3q/(3-q); inf for q >= 3.

    At q = 3 the embedding reaches every finite exponent but not inf
    itself; query :func:`sobolev_embeds_all_finite` for that borderline.
    """
    q = _exp(q)
    if q >= 3:
        return INF
    return Exponent.from_reciprocal(q.reciprocal - Fraction(1, 3))


def sobolev_embeds_all_finite(q: RationalLike) -> bool:
    """True at the borderline q = 3: W^{1,3} embeds in every finite L^r only."""
    return _exp(q) == 3


def star_exponent(p: RationalLike) -> Exponent:
    """Time-integrability gain 1/p_* = 1/p - 1/2; inf for p >= 2."""
    p = _exp(p)
    if p == 1:
        raise ExponentRangeError("star exponent requires p > 1")
    if p >= 2:
        return INF
    return Exponent.from_reciprocal(p.reciprocal - Fraction(1, 2))


def gradient_ranges_time_exponent(q: RationalLike) -> Exponent:
    """Smallest time exponent p(q) for the gradient criteria, piecewise in q.

    q/(2q-3) on (3/2, 9/5), 5q/(5q-6) on [9/5, 3], 1 + 2/q above 3;
    continuous at both junctions (value 3 at q = 9/5, 5/3 at q = 3).
    """
    q = _exp(q)
    if q <= Fraction(3, 2):
        raise ExponentRangeError(f"gradient criteria require q > 3/2, got {q}")
    iq = q.reciprocal
    if q < Fraction(9, 5):
        # 1/p = 2 - 3/q
        return Exponent.from_reciprocal(2 - 3 * iq)
    if q <= 3:
        # 1/p = 1 - 6/(5q)
        return Exponent.from_reciprocal(1 - Fraction(6, 5) * iq)
    # 1/p = q/(q+2)
    return Exponent.from_reciprocal(1 / (1 + 2 * iq))


def gradient_ranges_case(q: RationalLike) -> Optional[str]:
    """Case label of the gradient criterion containing q, or None."""
    q = _exp(q)
    if q <= Fraction(3, 2):
        return None
    if q < Fraction(9, 5):
        return "i"
    if q <= 3:
        return "ii"
    return "iii"


_WEIGHT_COEFFS = {
    "parabolic-velocity": (2, 3),
    "parabolic-gradient": (2, 3),
    "shinbrot": (2, 2),
}


def scaling_weight(space: MixedNormSpace, kind: str) -> Fraction:
    """Scaling weight a/r + b/s with (a, b) selected by ``kind``."""
    try:
        a, b = _WEIGHT_COEFFS[kind]
    except KeyError:
        raise ValueError(f"unknown weight kind {kind!r}") from None
    return a * space.time_exp.reciprocal + b * space.space_exp.reciprocal


def general_scaling_exponent(r: RationalLike, s: RationalLike,
                             alpha: Union[int, Fraction]) -> Fraction:
    """Norm scaling power alpha - 3/s - (alpha+1)/r of the alpha-indexed family."""
    r, s = _exp(r), _exp(s)
    alpha = _as_fraction(alpha)
    return alpha - 3 * s.reciprocal - (alpha + 1) * r.reciprocal


def _check(margin: Fraction, side: bool = True) -> CriterionCheck:
    return CriterionCheck(side and margin >= 0, margin)


def classify(space: MixedNormSpace) -> CriterionVerdict:
    """Exact membership flags and margins for every criterion.

    Gradient spaces additionally report the embedded velocity space
    (time_exp, space_exp*) with its own velocity-level verdict.
    """
    r, s = space.time_exp, space.space_exp
    if space.derivative_order == 0:
        return CriterionVerdict(
            space=space,
            serrin=_check(1 - scaling_weight(space, "parabolic-velocity"), s > 3),
            shinbrot=_check(1 - scaling_weight(space, "shinbrot"), s >= 4),
            leray_hopf=_check(Fraction(3, 2) - scaling_weight(space, "parabolic-velocity")),
            leslie_shvydkoy=_check(
                Fraction(1, 2) - (r.reciprocal + s.reciprocal),
                r >= 3 and r <= s,
            ),
        )
    p, q = r, s
    case = gradient_ranges_case(q)
    if case is None:
        ranges = CriterionCheck(False, None)
    else:
        p_req = gradient_ranges_time_exponent(q)
        ranges = _check(p_req.reciprocal - p.reciprocal)
    embedded = classify(MixedNormSpace(p, sobolev_exponent(q), 0))
    return CriterionVerdict(
        space=space,
        gradient_regularity=_check(
            2 - scaling_weight(space, "parabolic-gradient"), q > Fraction(3, 2)
        ),
        gradient_ranges_case=case,
        gradient_ranges=ranges,
        embedded_velocity=embedded,
    )


_THETA_RANGES = {
    "i": (Fraction(3, 2), Fraction(9, 5), False, False),
    "ii1": (Fraction(9, 5), Fraction(12, 5), True, False),
    "ii2": (Fraction(12, 5), Fraction(3), True, True),
    "iii": (Fraction(3), None, False, True),
}


def proof_case_theta(case: str, q: RationalLike) -> Fraction:
    """Convex-interpolation weight theta used in each gradient-criterion case.

    (i)    theta = (3-2q)/(3(q-2))   solving 1/(2q') = theta/q* + (1-theta)/6
    (ii)_1 theta = (5q-9)/(5q-6)     solving 1/(2q') = theta/2 + (1-theta)/q*
    (ii)_2 theta = (5q-12)/(5q-6)    solving 1/r = theta/2 + (1-theta)/q*,
                                     with 1/r = 1/2 - 1/q
    (iii)  theta = 1 - 1/q           solving 1/(2q') = theta/2

    q = inf is admitted in case (iii), where theta = 1.
    """
    q = _exp(q)
    try:
        lo, hi, lo_closed, hi_closed = _THETA_RANGES[case]
    except KeyError:
        raise ValueError(f"unknown case {case!r}; expected i, ii1, ii2, iii") from None
    in_lo = q >= lo if lo_closed else q > lo
    in_hi = True if hi is None else (q <= hi if hi_closed else q < hi)
    if not (in_lo and in_hi):
        raise ExponentRangeError(f"q = {q} outside the range of case {case}")
    if case == "iii":
        return 1 - q.reciprocal
    qq = q.value
    if case == "i":
        return (3 - 2 * qq) / (3 * (qq - 2))
    if case == "ii1":
        return (5 * qq - 9) / (5 * qq - 6)
    return (5 * qq - 12) / (5 * qq - 6)


class BootstrapStep(NamedTuple):
    forcing: tuple[Exponent, Exponent]
    next_grad: tuple[Exponent, Exponent]


def bootstrap_step(grad: tuple[RationalLike, RationalLike],
                   r: RationalLike, s: RationalLike) -> BootstrapStep:
    """One regularity-exchange step against a transport pair (r, s).

    The forcing pair is the Hoelder combination of (r, s) with the
    current gradient pair; the next gradient pair applies the star
    embedding in time and keeps the space exponent.  Raises
    :class:`IterationStop` when a produced exponent leaves (1, inf).
    """
    a, b = (_exp(grad[0]), _exp(grad[1]))
    r, s = _exp(r), _exp(s)
    ft = r.reciprocal + a.reciprocal
    fs = s.reciprocal + b.reciprocal
    if ft >= 1:
        raise IterationStop("time forcing exponent reached the limiting value 1")
    if fs >= 1:
        raise IterationStop("space forcing exponent reached the limiting value 1")
    forcing_time = Exponent.from_reciprocal(ft)
    forcing_space = Exponent.from_reciprocal(fs)
    return BootstrapStep(
        forcing=(forcing_time, forcing_space),
        next_grad=(star_exponent(forcing_time), forcing_space),
    )


@dataclass(frozen=True)
class BootstrapTrace:
    """Recorded bootstrap iteration for a transport pair (r, s).

    ``gradient_seq[0]`` is the energy-space start (2, 2); for n >= 1,
    ``forcing_seq[n-1]`` (paper-style index n) is the Hoelder
    combination of (r, s) with ``gradient_seq[n-1]`` and
    ``gradient_seq[n]`` applies the star embedding to it.
    """

    transport: tuple[Exponent, Exponent]
    gamma: Fraction
    gradient_seq: tuple[tuple[Exponent, Exponent], ...]
    forcing_seq: tuple[tuple[Exponent, Exponent], ...]
    stop_reason: str

    @property
    def target_space(self) -> Exponent:
        """Space exponent s/(s-1) at which the iteration may stop."""
        return holder_conjugate(self.transport[1])


def bootstrap_trace(r: RationalLike, s: RationalLike, max_steps: int = 64) -> BootstrapTrace:
    """Iterate :func:`bootstrap_step` from the energy-space pair (2, 2).

    Requires 1/r + 1/s <= 1/2.  Stops once the forcing space exponent
    reaches s/(s-1) (target-reached), when an exponent leaves (1, inf),
    or after ``max_steps``.  When 1/r + 1/s = 1/2 exactly the recorded
    forcing pairs equal the closed forms (s/(s-n), 2s/(2n+s)).
    """
    r, s = _exp(r), _exp(s)
    gamma = r.reciprocal + s.reciprocal
    if gamma > Fraction(1, 2):
        raise ShinbrotRegimeError(
            f"1/r + 1/s = {gamma} > 1/2: below the Shinbrot regime"
        )
    target = holder_conjugate(s)
    grad = (Exponent(2), Exponent(2))
    gradient_seq = [grad]
    forcing_seq: list[tuple[Exponent, Exponent]] = []
    stop_reason = "max-steps"
    for _ in range(max_steps):
        try:
            step = bootstrap_step(grad, r, s)
        except IterationStop:
            stop_reason = "exponent-left-(1,inf)"
            break
        forcing_seq.append(step.forcing)
        gradient_seq.append(step.next_grad)
        grad = step.next_grad
        if step.forcing[1] <= target:
            stop_reason = "target-reached"
            break
        if step.forcing[0].is_inf or grad[0].is_inf or grad[1].is_inf:
            stop_reason = "exponent-left-(1,inf)"
            break
    return BootstrapTrace(
        transport=(r, s),
        gamma=gamma,
        gradient_seq=tuple(gradient_seq),
        forcing_seq=tuple(forcing_seq),
        stop_reason=stop_reason,
    )


@dataclass(frozen=True)
class ShinbrotEndgame:
    """Stopping data for the duality bootstrap at transport exponent s > 4.

    ``steps`` is N = floor(s/2) - 1, ``theta`` the interpolation blend
    between the forcing pairs N and N+1, ``target`` the space
    L^{2s/(2+s)}(L^{s/(s-1)}).  For even s the arrival is exact after
    s/2 - 1 steps and theta = 1 (no blend).
    """

    s: Exponent
    steps: int
    theta: Fraction
    target: MixedNormSpace
    even_arrival: bool

    def forcing_pair(self, n: int) -> tuple[Exponent, Exponent]:
        """Closed-form forcing pair (s/(s-n), 2s/(2n+s))."""
        sv = self.s.value
        return (Exponent(sv / (sv - n)), Exponent(2 * sv / (2 * n + sv)))


def shinbrot_endgame(s: RationalLike) -> ShinbrotEndgame:
    """Stopping index, blend weight and target space for s > 4."""
    s = _exp(s)
    if s.is_inf:
        raise ExponentRangeError("endgame requires a finite s")
    sv = s.value
    if sv <= 4:
        raise ExponentRangeError(
            f"endgame requires s > 4 (s = {sv}; s = 4 is a single plain step)"
        )
    half_floor = math.floor(sv / 2)
    steps = half_floor - 1
    theta = Fraction(2 * half_floor - sv + 2, 2)
    target = MixedNormSpace(
        Exponent(2 * sv / (2 + sv)), Exponent(sv / (sv - 1)), 0
    )
    even = sv.denominator == 1 and sv.numerator % 2 == 0
    return ShinbrotEndgame(s=s, steps=steps, theta=theta, target=target,
                           even_arrival=even)


class RegionPoint(NamedTuple):
    inv_q: Fraction
    inv_p: Fraction
    region: str


#: Landmark points of the criterion diagram: the best-exponent corner
#: (q, p) = (9/5, 3), a scaling-invariant gradient point (3, 2), and the
#: plain weak-solution point (2, 2).
REGION_LANDMARKS = (
    (Fraction(5, 9), Fraction(1, 3)),
    (Fraction(1, 3), Fraction(1, 2)),
    (Fraction(1, 2), Fraction(1, 2)),
)


def region_landmarks() -> tuple[RegionPoint, ...]:
    return tuple(_region_point(iq, ip) for iq, ip in REGION_LANDMARKS)


def _region_point(inv_q: Fraction, inv_p: Fraction) -> RegionPoint:
    # weight = 2/p + 3/q on reciprocals
    weight = 2 * inv_p + 3 * inv_q
    if weight <= 2:
        return RegionPoint(inv_q, inv_p, "gradient-regularity")
    q = Exponent.from_reciprocal(inv_q)
    case = gradient_ranges_case(q)
    if case is not None:
        p_req = gradient_ranges_time_exponent(q)
        if inv_p <= p_req.reciprocal:
            return RegionPoint(inv_q, inv_p, f"gradient-ranges-{case}")
    return RegionPoint(inv_q, inv_p, "none")


def region_diagram(nq: int = 200, np_: int = 200,
                   include_landmarks: bool = True) -> list[RegionPoint]:
    """Label a rational grid over (1/q, 1/p) in (0,1)^2 by strongest criterion.

    Labels, strongest first: "gradient-regularity" (2/p + 3/q <= 2),
    "gradient-ranges-{i,ii,iii}" (p at least the piecewise map at q),
    otherwise "none".  Landmark points are appended so that plots and
    the emitted CSV always contain the reference exponents.
    """
    rows = [
        _region_point(Fraction(i, nq), Fraction(j, np_))
        for i in range(1, nq)
        for j in range(1, np_)
    ]
    if include_landmarks:
        rows.extend(region_landmarks())
    return rows


def region_csv_lines(rows: Iterable[RegionPoint]) -> Iterable[str]:
    yield "inv_q,inv_p,region"
    for row in rows:
        yield f"{row.inv_q},{row.inv_p},{row.region}"
