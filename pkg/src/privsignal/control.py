"""Signal timing optimization on a dual-ring NEMA intersection.

Streams are indexed 0..7 for NEMA movements 1..8.  Ring 1 holds movements
1-4 and ring 2 movements 5-8; the barrier separates {1, 2, 5, 6} from
{3, 4, 7, 8}.  A plan covers one cycle starting at the current barrier, so
the first phase of each ring starts at t = 0.

Two models share the first-stage constraints:

* ``build_p1``: deterministic LP with one soft under-saturation row per stream.
* ``build_p2``: sample-path LP with one soft row per stream and scenario.

The first 17 variables of both are ``C, gs1..gs8, ge1..ge8``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, NotOptimal
from .estimation import LAMBDA_MIN, joint_rates
from .lp import LinearProgram, LpBuilder, LpSolution

N_STREAMS = 8
LEFT_STREAMS = (0, 2, 4, 6)
THROUGH_STREAMS = (1, 3, 5, 7)
BARRIER_RING1 = (0, 1)
BARRIER_RING2 = (4, 5)
# Cost per second of cycle length.  The delay objective is flat in the greens of
# streams with no queued CVs; this breaks such ties toward the shortest cycle
# without changing which plans are optimal otherwise.
CYCLE_TIE_BREAK = 1e-6


class PhaseCase(str, enum.Enum):
    START_15 = "15"
    START_37 = "37"

    @property
    def rings(self):
        if self is PhaseCase.START_15:
            return (0, 1, 2, 3), (4, 5, 6, 7)
        return (2, 3, 0, 1), (6, 7, 4, 5)

    @property
    def next(self) -> "PhaseCase":
        return PhaseCase.START_37 if self is PhaseCase.START_15 else PhaseCase.START_15


def _per_stream(value, name):
    arr = np.broadcast_to(np.asarray(value, dtype=np.float64), (N_STREAMS,)).copy()
    if np.any(~np.isfinite(arr)):
        raise InvalidConfig(f"{name} must be finite")
    return arr


@dataclass
class ControllerConfig:
    """Per-stream timing parameters (seconds, s/veh for headways)."""

    yellow: np.ndarray = field(default_factory=lambda: np.full(N_STREAMS, 3.0))
    red_clear: np.ndarray = field(default_factory=lambda: np.zeros(N_STREAMS))
    lost_start: np.ndarray = field(default_factory=lambda: np.full(N_STREAMS, 2.0))
    lost_yellow: np.ndarray = field(default_factory=lambda: np.full(N_STREAMS, 1.0))
    headway: np.ndarray = field(
        default_factory=lambda: np.array([2.0, 1.0] * 4))
    g_min: np.ndarray = field(default_factory=lambda: np.full(N_STREAMS, 10.0))
    g_max: np.ndarray = field(default_factory=lambda: np.full(N_STREAMS, 60.0))
    c_min: float = 40.0
    c_max: float = 120.0

    def __post_init__(self):
        for name in ("yellow", "red_clear", "lost_start", "lost_yellow", "headway", "g_min", "g_max"):
            setattr(self, name, _per_stream(getattr(self, name), name))
        self.validate()

    def validate(self) -> None:
        if np.any(self.headway <= 0):
            raise InvalidConfig("saturation headways must be positive")
        for name in ("yellow", "red_clear", "lost_start", "lost_yellow", "g_min"):
            if np.any(getattr(self, name) < 0):
                raise InvalidConfig(f"{name} must be nonnegative")
        if np.any(self.g_min > self.g_max):
            raise InvalidConfig("g_min exceeds g_max")
        if not 0 <= self.c_min <= self.c_max:
            raise InvalidConfig("need 0 <= c_min <= c_max")

    @property
    def lambda_max(self) -> np.ndarray:
        """Saturation flow per stream (veh/s): the estimator's upper clamp."""
        return 1.0 / self.headway

    @property
    def interval(self) -> np.ndarray:
        """Yellow plus red clearance per stream."""
        return self.yellow + self.red_clear


@dataclass
class SignalTimingPlan:
    cycle: float
    g_start: np.ndarray
    g_end: np.ndarray
    phase_case: PhaseCase

    @property
    def green(self) -> np.ndarray:
        return self.g_end - self.g_start

    def barrier_time(self, cfg: ControllerConfig) -> float:
        """End of the plan's first phase group (when the next decision happens)."""
        last = self.phase_case.rings[0][1]
        return float(self.g_end[last] + cfg.interval[last])

    def red_durations(self, cfg: ControllerConfig) -> np.ndarray:
        return self.cycle - self.green - cfg.yellow

    def violations(self, cfg: ControllerConfig, tol: float = 1e-6) -> list[str]:
        """Names of every broken timing invariant (empty when the plan is valid)."""
        bad = []
        green = self.green
        ring1, ring2 = self.phase_case.rings
        for name, ring in (("ring1", ring1), ("ring2", ring2)):
            total = sum(green[k] + cfg.interval[k] for k in ring)
            if abs(total - self.cycle) > tol:
                bad.append(f"{name} sum {total} != C {self.cycle}")
            if abs(self.g_start[ring[0]]) > tol:
                bad.append(f"{name} does not start at 0")
            for a, b in zip(ring, ring[1:]):
                if abs(self.g_end[a] + cfg.interval[a] - self.g_start[b]) > tol:
                    bad.append(f"precedence {a + 1}->{b + 1}")
        lhs = green[list(BARRIER_RING1)].sum()
        rhs = green[list(BARRIER_RING2)].sum()
        if abs(lhs - rhs) > tol:
            bad.append(f"barrier {lhs} != {rhs}")
        for k in range(N_STREAMS):
            if green[k] < cfg.g_min[k] - tol or green[k] > cfg.g_max[k] + tol:
                bad.append(f"green of stream {k + 1} = {green[k]}")
        if self.cycle < cfg.c_min - tol or self.cycle > cfg.c_max + tol:
            bad.append(f"cycle {self.cycle}")
        return bad


def _first_stage(cfg: ControllerConfig, phase_case: PhaseCase, eta_hat) -> LpBuilder:
    cfg.validate()
    phase_case = PhaseCase(phase_case)
    eta = np.maximum(np.asarray(eta_hat, dtype=np.float64), 0.0)
    if eta.shape != (N_STREAMS,):
        raise InvalidConfig(f"expected {N_STREAMS} counts, got shape {eta.shape}")
    lp = LpBuilder()
    lp.var("C", cfg.c_min, cfg.c_max, cost=CYCLE_TIE_BREAK)
    for k in range(N_STREAMS):
        lp.var(f"gs{k + 1}", 0.0, cfg.c_max, cost=eta[k])
    for k in range(N_STREAMS):
        lp.var(f"ge{k + 1}", 0.0, cfg.c_max)

    def green(k, sign=1.0):
        return {f"ge{k + 1}": sign, f"gs{k + 1}": -sign}

    for ring in phase_case.rings:
        coeffs = {"C": -1.0}
        for k in ring:
            coeffs.update(green(k))
        lp.row(coeffs, "==", -sum(cfg.interval[k] for k in ring))
        lp.row({f"gs{ring[0] + 1}": 1.0}, "==", 0.0)
        for a, b in zip(ring, ring[1:]):
            lp.row({f"ge{a + 1}": 1.0, f"gs{b + 1}": -1.0}, "==", -cfg.interval[a])
    barrier = {}
    for k in BARRIER_RING1:
        barrier.update(green(k))
    for k in BARRIER_RING2:
        barrier.update(green(k, -1.0))
    lp.row(barrier, "==", 0.0)
    for k in range(N_STREAMS):
        lp.row(green(k), ">=", cfg.g_min[k])
        lp.row(green(k), "<=", cfg.g_max[k])
    return lp


def _queue_row(lp: LpBuilder, q: str, k: int, lam: float, cfg: ControllerConfig, r_s0: float):
    # Q >= lam (gs - r0) - (ge - gs + y - ls - ly) / h
    h = cfg.headway[k]
    lp.row(
        {q: 1.0, f"gs{k + 1}": -lam - 1.0 / h, f"ge{k + 1}": 1.0 / h},
        ">=",
        -lam * r_s0 + (cfg.yellow[k] - cfg.lost_start[k] - cfg.lost_yellow[k]) / h,
    )


def _check_rates(lam, r_s0):
    lam = np.asarray(lam, dtype=np.float64)
    r_s0 = np.asarray(r_s0, dtype=np.float64)
    if lam.shape[-1] != N_STREAMS or r_s0.shape != (N_STREAMS,):
        raise InvalidConfig("arrival rates and red starts need one entry per stream")
    if np.any(lam < 0) or np.any(~np.isfinite(lam)) or np.any(~np.isfinite(r_s0)):
        raise InvalidConfig("arrival rates must be finite and nonnegative")
    return lam, r_s0


def build_p1(agg, lam, cfg: ControllerConfig, phase_case, r_s0, penalty: float | None = None) -> LinearProgram:
    """Deterministic model: queued-CV delay plus a residual-queue penalty.

    ``agg`` supplies ``eta_hat``; ``lam`` is an :class:`ArrivalEstimate` or an
    array of rates.  ``penalty`` defaults to ``cfg.c_max`` per residual vehicle.
    """
    lam_k = getattr(lam, "lambda_k", lam)
    lam_k, r_s0 = _check_rates(lam_k, r_s0)
    penalty = cfg.c_max if penalty is None else penalty
    lp = _first_stage(cfg, phase_case, agg.eta_hat)
    for k in range(N_STREAMS):
        lp.var(f"Q{k + 1}", cost=penalty)
        _queue_row(lp, f"Q{k + 1}", k, lam_k[k], cfg, r_s0[k])
    return lp.build()


@dataclass
class ScenarioSet:
    positions: np.ndarray   # (M, K) aggregated queued positions, vehicles
    times: np.ndarray       # (M, K) aggregated arrival times, seconds
    rates: np.ndarray       # (M, K) clamped arrival rates implied by each scenario
    fallbacks: int = 0

    @property
    def size(self) -> int:
        return self.positions.shape[0]


def _scenario_rates(P, T, gamma):
    """Unclamped rates per scenario (NaN where the denominator is not positive)."""
    denom = T @ gamma
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = gamma[None, :] * (P.sum(axis=1) / denom)[:, None]
    lam[denom <= 0] = np.nan
    return lam


def sample_scenarios(agg, sens, budget, m_count: int, gamma, rng: np.random.Generator,
                     lambda_max=np.inf, lambda_min: float = LAMBDA_MIN,
                     max_attempts: int = 100) -> ScenarioSet:
    """Draw (P, T) scenarios from the Laplace posteriors around the perturbed sums.

    A scenario is rejected when any entry is negative or when an implied rate
    of a stream with nonzero proportion leaves ``[lambda_min, lambda_max]``.
    After ``max_attempts`` rejections the clamped point values are used.
    """
    if m_count < 1:
        raise InvalidConfig("need at least one scenario")
    gamma = np.asarray(gamma, dtype=np.float64)
    k = gamma.size
    sens = [sens] * k if not isinstance(sens, (list, tuple)) else list(sens)
    eps = budget.epsilon
    b_p = np.array([s.delta_p for s in sens]) / eps
    b_t = np.array([s.delta_t for s in sens]) / eps
    p_hat = np.asarray(agg.p_hat, dtype=np.float64)
    t_hat = np.asarray(agg.t_hat, dtype=np.float64)
    upper = np.broadcast_to(np.asarray(lambda_max, dtype=np.float64), (k,))
    active = gamma > 0

    P = np.empty((m_count, k))
    T = np.empty((m_count, k))
    todo = np.arange(m_count)
    for _ in range(max_attempts):
        if todo.size == 0:
            break
        P[todo] = p_hat + rng.laplace(0.0, 1.0, (todo.size, k)) * b_p
        T[todo] = t_hat + rng.laplace(0.0, 1.0, (todo.size, k)) * b_t
        lam = _scenario_rates(P[todo], T[todo], gamma)
        ok = (P[todo] >= 0).all(axis=1) & (T[todo] >= 0).all(axis=1)
        with np.errstate(invalid="ignore"):
            in_range = ((lam >= lambda_min) & (lam <= upper)) | ~active
        ok &= np.isfinite(lam).all(axis=1) & in_range.all(axis=1)
        todo = todo[~ok]
    fallbacks = todo.size
    if fallbacks:
        P[todo] = np.maximum(p_hat, 0.0)
        T[todo] = np.maximum(t_hat, 0.0)

    rates = np.empty((m_count, k))
    for m in range(m_count):
        r = joint_rates(P[m], T[m], gamma)
        rates[m] = lambda_min if r is None else np.clip(r, lambda_min, upper)
    return ScenarioSet(P, T, rates, fallbacks)


def point_scenario(agg, gamma, lambda_max=np.inf, lambda_min: float = LAMBDA_MIN) -> ScenarioSet:
    """The single scenario at the clamped perturbed sums."""
    P = np.maximum(np.asarray(agg.p_hat, dtype=np.float64), 0.0)[None, :]
    T = np.maximum(np.asarray(agg.t_hat, dtype=np.float64), 0.0)[None, :]
    r = joint_rates(P[0], T[0], gamma)
    upper = np.broadcast_to(np.asarray(lambda_max, dtype=np.float64), P.shape[1:])
    rates = (np.full(P.shape, lambda_min) if r is None
             else np.clip(r, lambda_min, upper)[None, :])
    return ScenarioSet(P, T, rates)


def build_p2(scenarios: ScenarioSet, eta_hat, gamma, cfg: ControllerConfig, phase_case, r_s0,
             penalty: float | None = None) -> LinearProgram:
    """Sample-path model: first-stage delay plus the scenario-average residual penalty.

    ``gamma`` is the history-based proportion already folded into
    ``scenarios.rates``; it is accepted for interface symmetry and checked
    for shape only.
    """
    if scenarios.size < 1:
        raise InvalidConfig("need at least one scenario")
    if np.asarray(gamma).shape != (N_STREAMS,):
        raise InvalidConfig("gamma needs one entry per stream")
    rates, r_s0 = _check_rates(scenarios.rates, r_s0)
    penalty = cfg.c_max if penalty is None else penalty
    lp = _first_stage(cfg, phase_case, eta_hat)
    weight = penalty / scenarios.size
    for m in range(scenarios.size):
        for k in range(N_STREAMS):
            q = f"Q{k + 1}_{m}"
            lp.var(q, cost=weight)
            _queue_row(lp, q, k, rates[m, k], cfg, r_s0[k])
    return lp.build()


def plan_from_solution(sol: LpSolution, phase_case) -> SignalTimingPlan:
    """Read the unrounded plan from the first 17 variables of a P1/P2 solution."""
    if not sol.optimal or sol.x is None:
        raise NotOptimal(f"solution status is {sol.status.value}")
    x = sol.x
    return SignalTimingPlan(float(x[0]), x[1:9].copy(), x[9:17].copy(), PhaseCase(phase_case))


def extract_plan(sol: LpSolution, phase_case, cfg: ControllerConfig) -> SignalTimingPlan:
    """Executable plan: times on a 0.1 s grid with ring sums and barrier kept exact.

    Greens are rounded to deciseconds; stream 6 absorbs the barrier
    difference and streams 4 and 8 absorb the ring-sum difference.  If that
    pushes a green outside its bounds the cycle is nudged by the shortfall,
    and any remainder is traded with the other phase of the same group.
    """
    raw = plan_from_solution(sol, phase_case)
    bad = raw.violations(cfg, tol=1e-6)
    if bad:
        raise NotOptimal(f"LP solution violates timing constraints: {bad}")
    case = raw.phase_case
    dec = lambda v: np.rint(np.asarray(v) * 10).astype(np.int64)  # noqa: E731
    dur = dec(raw.green)
    gmin, gmax = dec(cfg.g_min), dec(cfg.g_max)
    inter = dec(cfg.interval)
    cyc = int(dec(raw.cycle))
    cmin, cmax = int(dec(cfg.c_min)), int(dec(cfg.c_max))

    dur[5] = dur[0] + dur[1] - dur[4]
    if not gmin[5] <= dur[5] <= gmax[5]:
        dur[5] = int(np.clip(dur[5], gmin[5], gmax[5]))
        dur[4] = dur[0] + dur[1] - dur[5]
    for _ in range(4):
        d3 = cyc - dur[[0, 1, 2]].sum() - inter[[0, 1, 2, 3]].sum()
        d7 = cyc - dur[[4, 5, 6]].sum() - inter[[4, 5, 6, 7]].sum()
        shift = 0
        for d, k in ((d3, 3), (d7, 7)):
            if d < gmin[k]:
                shift = max(shift, gmin[k] - d)
            elif d > gmax[k]:
                shift = min(shift, gmax[k] - d)
        if shift == 0:
            break
        cyc = int(np.clip(cyc + shift, cmin, cmax))
    dur[3], dur[7] = d3, d7
    # Residual rounding slack moves between the two phases of the same ring
    # and barrier group, which leaves the cycle and barrier untouched.
    for k, other in ((3, 2), (7, 6)):
        lo = max(gmin[k] - dur[k], dur[other] - gmax[other])
        hi = min(gmax[k] - dur[k], dur[other] - gmin[other])
        if lo > 0 or hi < 0:
            move = lo if lo > 0 else hi
            if lo <= hi:
                dur[k] += move
                dur[other] -= move

    g_start = np.zeros(N_STREAMS, dtype=np.int64)
    g_end = np.zeros(N_STREAMS, dtype=np.int64)
    for ring in case.rings:
        t = 0
        for k in ring:
            g_start[k] = t
            g_end[k] = t + dur[k]
            t = g_end[k] + inter[k]
    plan = SignalTimingPlan(cyc / 10.0, g_start / 10.0, g_end / 10.0, case)
    bad = plan.violations(cfg, tol=1e-9)
    if bad:
        raise NotOptimal(f"rounded plan violates timing constraints: {bad}")
    return plan
