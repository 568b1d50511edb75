"""Point-queue simulation of an isolated four-leg signalized intersection.

Every controlled stream is a vertical (point) queue at the stopline.  A
vehicle's *virtual arrival* is the time it would reach the stopline at free
speed.  It joins the queue (one stop) when it arrives outside the effective
green or behind a standing queue; otherwise it passes, spaced at least one
saturation headway behind the previous departure.

Queued vehicles discharge from ``g_s + l_s``, one per headway ``h``, until the
effective green ends at ``g_e + y - l_y``.  Vehicles still waiting at that
moment are the stream's residual queue for the cycle.

The simulation advances in *segments* chosen by a controller: each segment
lists the green windows of the streams it serves (absolute times) and an end
time.  Every window must end before its segment does, so each stream is
resolved exactly, one segment at a time.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .aggregation import CvState
from .control import N_STREAMS, ControllerConfig
from .errors import ConfigError

LINK_LENGTH = 300.0   # m, also the zone-of-interest radius
JAM_SPACING = 7.0     # m per queued vehicle
FREE_SPEED = 13.9     # m/s
TRAVEL_TIME = LINK_LENGTH / FREE_SPEED
POSITION_OFFSET = 0.5

PATTERNS = ("HighBalanced", "LowBalanced", "Unbalanced")
LINKS = ("EB", "WB", "NB", "SB")
# (left-turn stream, through stream) fed by each link; right turns are uncontrolled.
LINK_STREAMS = {"EB": (4, 1), "WB": (0, 5), "NB": (6, 3), "SB": (2, 7)}
TURN_RATIOS = (0.25, 0.65, 0.10)
DEMAND_BLOCK = 900.0
# Demand multipliers per 15-minute block (cycled); they average to 1 over an hour.
DEMAND_SHAPE = (0.9, 1.05, 1.1, 0.95)


# ---------------------------------------------------------------------------
# Demand
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DemandProfile:
    """Piecewise-constant link demand (veh/h) and fixed turning ratios."""

    pattern: str
    rates: dict            # link -> tuple of veh/h per block, cycled over time
    turning: dict          # link -> (left, through, right)
    block: float = DEMAND_BLOCK

    def __post_init__(self):
        for link, ratios in self.turning.items():
            if abs(sum(ratios) - 1.0) > 1e-12 or min(ratios) < 0:
                raise ConfigError(f"turning ratios of {link} must be a distribution")
        for link, sched in self.rates.items():
            if min(sched) < 0:
                raise ConfigError(f"negative demand on {link}")

    def rate(self, link: str, t) -> np.ndarray:
        """Demand of ``link`` (veh/h) at time(s) ``t``."""
        sched = np.asarray(self.rates[link], dtype=np.float64)
        idx = (np.floor(np.asarray(t, dtype=np.float64) / self.block).astype(np.int64)) % sched.size
        return sched[idx]

    def mean_rate(self, link: str) -> float:
        return float(np.mean(self.rates[link]))

    @property
    def total(self) -> float:
        """Mean intersection demand (veh/h)."""
        return sum(self.mean_rate(link) for link in self.rates)


def build_demand(pattern: str) -> DemandProfile:
    """Demand for one of the named flow patterns (no randomness involved)."""
    if pattern == "HighBalanced":
        base = dict.fromkeys(LINKS, 750.0)
    elif pattern == "LowBalanced":
        base = dict.fromkeys(LINKS, 500.0)
    elif pattern == "Unbalanced":
        base = {"EB": 1000.0, "WB": 1000.0, "NB": 500.0, "SB": 500.0}
    else:
        raise ConfigError(f"unknown flow pattern {pattern!r}; expected one of {PATTERNS}")
    rates = {link: tuple(v * m for m in DEMAND_SHAPE) for link, v in base.items()}
    return DemandProfile(pattern, rates, dict.fromkeys(LINKS, TURN_RATIOS))


@dataclass
class Arrivals:
    """Generated vehicles sorted by virtual stopline arrival time.

    ``stream`` is -1 for right-turners, which bypass the signal.  ``cv_draw``
    is the uniform that decided the CV flag; keeping it lets runs at
    different penetrations share one arrival stream with nested CV sets.
    """

    time: np.ndarray
    link: np.ndarray
    stream: np.ndarray
    is_cv: np.ndarray
    cv_draw: np.ndarray

    def __len__(self) -> int:
        return self.time.size

    def with_penetration(self, penetration: float) -> "Arrivals":
        _check_penetration(penetration)
        return Arrivals(self.time, self.link, self.stream, self.cv_draw < penetration, self.cv_draw)


def _check_penetration(penetration):
    if not 0.0 <= penetration <= 1.0:
        raise ConfigError(f"penetration must be in [0, 1], got {penetration}")


def generate_arrivals(profile: DemandProfile, horizon: float, penetration: float,
                      rng: np.random.Generator) -> Arrivals:
    """Thinned Poisson arrivals per link over ``[0, horizon)``."""
    _check_penetration(penetration)
    times, links, streams, draws = [], [], [], []
    for li, link in enumerate(LINKS):
        peak = max(profile.rates[link]) / 3600.0
        # Draws happen even at zero demand so other links keep their streams.
        expected = peak * horizon
        n_cand = rng.poisson(expected) if expected > 0 else 0
        cand = np.sort(rng.uniform(0.0, horizon, n_cand))
        keep = rng.random(n_cand) * peak < profile.rate(link, cand) / 3600.0
        t = cand[keep]
        turn = rng.choice(3, size=t.size, p=profile.turning[link])
        left, through = LINK_STREAMS[link]
        k = np.select([turn == 0, turn == 1], [left, through], default=-1)
        times.append(t)
        links.append(np.full(t.size, li))
        streams.append(k)
        draws.append(rng.random(t.size))
    time = np.concatenate(times)
    order = np.argsort(time, kind="stable")
    cv_draw = np.concatenate(draws)[order]
    return Arrivals(time[order], np.concatenate(links)[order], np.concatenate(streams)[order],
                    cv_draw < penetration, cv_draw)


# ---------------------------------------------------------------------------
# Stream queues
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Vehicle:
    id: int
    stream: int
    arrival: float
    is_cv: bool
    departure: float
    stops: int

    @property
    def delay(self) -> float:
        return self.departure - self.arrival


@dataclass(frozen=True)
class GreenWindow:
    start: float
    g_end: float
    effective_end: float
    residual: int
    served: int


class StreamQueue:
    """FIFO point queue of one stream."""

    def __init__(self, k: int, arrival, is_cv, ids, headway: float, lost_start: float,
                 lost_yellow: float, yellow: float):
        self.k = k
        self.arrival = np.asarray(arrival, dtype=np.float64)
        self.is_cv = np.asarray(is_cv, dtype=bool)
        self.ids = np.asarray(ids, dtype=np.int64)
        n = self.arrival.size
        self.departure = np.full(n, np.nan)
        self.stops = np.zeros(n, dtype=np.int64)
        self.joined = np.zeros(n, dtype=bool)
        self.h, self.l_s, self.l_y, self.y = headway, lost_start, lost_yellow, yellow
        self.queue: deque[int] = deque()
        self.nxt = 0
        self.red_start = 0.0
        self.last_red = math.nan
        self.windows: list[GreenWindow] = []

    def __len__(self) -> int:
        return len(self.queue)

    @property
    def residual(self) -> int:
        return self.windows[-1].residual if self.windows else 0

    def _service(self, start: float, g_end: float):
        """Outcome of one green window without touching the state."""
        arr, n = self.arrival, self.arrival.size
        e_end = g_end + self.y - self.l_y
        queue, nxt = deque(self.queue), self.nxt
        joins, served = [], []
        while nxt < n and arr[nxt] < start:
            queue.append(nxt)
            joins.append(nxt)
            nxt += 1
        last = -math.inf
        first_slot = start + self.l_s
        while True:
            if queue:
                d = max(last, first_slot) + self.h
                if d > e_end:
                    break
                while nxt < n and arr[nxt] < d:
                    queue.append(nxt)
                    joins.append(nxt)
                    nxt += 1
                served.append((queue.popleft(), d))
                last = d
            else:
                if nxt >= n or arr[nxt] > e_end:
                    break
                d = max(arr[nxt], last + self.h)
                if d > e_end:
                    queue.append(nxt)
                    joins.append(nxt)
                else:
                    served.append((nxt, d))
                    last = d
                nxt += 1
        while nxt < n and arr[nxt] <= e_end:
            queue.append(nxt)
            joins.append(nxt)
            nxt += 1
        return served, joins, queue, nxt, e_end

    def preview_departures(self, start: float, g_end: float) -> np.ndarray:
        """Departure times if the stream were green over ``[start, g_end]``."""
        served, *_ = self._service(start, g_end)
        return np.array([d for _, d in served])

    def serve(self, start: float, g_end: float, t_end: float) -> GreenWindow:
        if g_end < start:
            raise ValueError("green window ends before it starts")
        served, joins, queue, nxt, e_end = self._service(start, g_end)
        if e_end > t_end + 1e-9 or g_end + self.y > t_end + 1e-9:
            raise ValueError("green window extends past the segment end")
        for i, d in served:
            self.departure[i] = d
        self.stops[joins] += 1
        self.joined[joins] = True
        self.queue, self.nxt = queue, nxt
        self.last_red = start - self.red_start
        self.red_start = g_end + self.y
        w = GreenWindow(start, g_end, e_end, len(queue), len(served))
        self.windows.append(w)
        self.hold(t_end)
        return w

    def hold(self, t_end: float) -> None:
        """Red until ``t_end``: every arrival before then joins the queue."""
        arr, n = self.arrival, self.arrival.size
        start = self.nxt
        while self.nxt < n and arr[self.nxt] < t_end:
            self.queue.append(self.nxt)
            self.nxt += 1
        idx = np.arange(start, self.nxt)
        self.stops[idx] += 1
        self.joined[idx] = True

    def red_start_at(self, t: float) -> float:
        best = 0.0
        for w in self.windows:
            r = w.g_end + self.y
            if r <= t:
                best = r
        return best

    def queued_mask(self, t: float) -> np.ndarray:
        dep = self.departure
        return self.joined & (self.arrival <= t) & ~(dep <= t)


# ---------------------------------------------------------------------------
# Intersection
# ---------------------------------------------------------------------------

@dataclass
class Decision:
    """One segment chosen by a controller."""

    windows: dict                       # stream -> (absolute green start, absolute green end)
    t_end: float
    label: str = ""
    log: dict = field(default_factory=dict)


class Controller(Protocol):
    name: str

    def reset(self, sim: "Intersection", rng: np.random.Generator) -> None: ...

    def step(self, sim: "Intersection") -> Decision: ...


class Intersection:
    """Eight point queues driven segment by segment."""

    def __init__(self, arrivals: Arrivals, cfg: ControllerConfig | None = None,
                 travel_time: float = TRAVEL_TIME):
        self.cfg = cfg or ControllerConfig()
        self.arrivals = arrivals
        self.travel_time = travel_time
        self.now = 0.0
        ids = np.arange(len(arrivals))
        self.streams = []
        for k in range(N_STREAMS):
            m = arrivals.stream == k
            self.streams.append(StreamQueue(
                k, arrivals.time[m], arrivals.is_cv[m], ids[m], self.cfg.headway[k],
                self.cfg.lost_start[k], self.cfg.lost_yellow[k], self.cfg.yellow[k]))

    def execute(self, decision: Decision) -> dict:
        """Run one segment; returns the green windows served, by stream."""
        if decision.t_end < self.now:
            raise ValueError("segment ends in the past")
        served = {}
        for k, sq in enumerate(self.streams):
            if k in decision.windows:
                s, e = decision.windows[k]
                if s < self.now - 1e-9:
                    raise ValueError("green window starts before the segment")
                served[k] = sq.serve(s, e, decision.t_end)
            else:
                sq.hold(decision.t_end)
        self.now = decision.t_end
        return served

    @property
    def red_starts(self) -> np.ndarray:
        return np.array([sq.red_start for sq in self.streams])

    @property
    def last_red(self) -> np.ndarray:
        return np.array([sq.last_red for sq in self.streams])

    def queue_lengths(self) -> np.ndarray:
        return np.array([len(sq) for sq in self.streams])

    def snapshot(self, t: float | None = None) -> list[CvState]:
        """State every CV in the zone of interest would report at time ``t``.

        Queued CVs report their ordinal position and the time they reached the
        stopline after the stream's red start (0 for earlier, residual
        arrivals); approaching CVs and CVs that passed the stopline within one
        link travel time report ``delta = 0``.
        """
        t = self.now if t is None else t
        if t > self.now + 1e-9:
            raise ValueError("snapshot time lies beyond the simulated horizon")
        max_pos = LINK_LENGTH / JAM_SPACING
        tt = self.travel_time
        out = []
        for k, sq in enumerate(self.streams):
            queued = sq.queued_mask(t)
            q_idx = np.flatnonzero(queued)
            red = sq.red_start_at(t)
            for pos, i in enumerate(q_idx, start=1):
                if pos > max_pos:
                    break
                if sq.is_cv[i]:
                    out.append(CvState.in_stream(k, N_STREAMS, 1, pos - POSITION_OFFSET,
                                                 max(sq.arrival[i] - red, 0.0)))
            dep = sq.departure
            moving = (~queued & (
                ((sq.arrival > t) & (sq.arrival - t <= tt))
                | ((dep <= t) & (t - dep <= tt))
                | ((sq.arrival <= t) & ~(dep <= t) & ~sq.joined)))
            for _ in np.flatnonzero(moving & sq.is_cv):
                out.append(CvState.in_stream(k, N_STREAMS, 0, 0.0, 0.0))
        return out

    def queued_counts(self, t: float | None = None) -> np.ndarray:
        t = self.now if t is None else t
        return np.array([int(sq.queued_mask(t).sum()) for sq in self.streams])

    def conservation(self, t: float | None = None) -> dict:
        """Vehicle accounting at ``t``: entered = departed + queued + approaching."""
        t = self.now if t is None else t
        tt = self.travel_time
        entered = departed = queued = approaching = 0
        for sq in self.streams:
            arr, dep = sq.arrival, sq.departure
            q = sq.queued_mask(t)
            entered += int(np.sum(arr - tt <= t))
            departed += int(np.sum(dep <= t))
            queued += int(q.sum())
            approaching += int(np.sum((arr - tt <= t) & ~q & ~(dep <= t)))
        return {"entered": entered, "departed": departed, "queued": queued,
                "approaching": approaching}

    def vehicles(self):
        for k, sq in enumerate(self.streams):
            for i in range(sq.arrival.size):
                yield Vehicle(int(sq.ids[i]), k, float(sq.arrival[i]), bool(sq.is_cv[i]),
                              float(sq.departure[i]), int(sq.stops[i]))


# ---------------------------------------------------------------------------
# Actuated baseline
# ---------------------------------------------------------------------------

ACTUATED_GAP = 3.0
PHASE_PAIRS = ((0, 4), (1, 5), (2, 6), (3, 7))


def actuated_step(detections, green_start: float, g_min: float, g_max: float,
                  gap: float = ACTUATED_GAP) -> float:
    """Green duration of a gap-based actuated phase.

    ``detections`` are stopline passage times on the served streams,
    computed as if the phase stayed green until its maximum.  The phase
    extends while successive detections are at most ``gap`` apart, and ends
    ``gap`` after the last detection, bounded by ``[g_min, g_max]``.
    """
    d = np.sort(np.asarray(detections, dtype=np.float64))
    t_min, t_max = green_start + g_min, green_start + g_max
    prior = d[d <= t_min]
    cur = prior[-1] if prior.size else green_start
    if t_min - cur > gap:
        return float(g_min)
    for x in d[d > t_min]:
        if cur + gap >= t_max or x - cur > gap:
            break
        cur = x
    return float(min(cur + gap, t_max) - green_start)


class ActuatedController:
    """Fully actuated control over concurrent phase pairs (1,5) (2,6) (3,7) (4,8)."""

    name = "actuated"

    def __init__(self, gap: float = ACTUATED_GAP):
        self.gap = gap
        self.phase = 0

    def reset(self, sim: Intersection, rng: np.random.Generator) -> None:
        self.phase = 0

    def step(self, sim: Intersection) -> Decision:
        cfg = sim.cfg
        pair = PHASE_PAIRS[self.phase]
        start = sim.now
        g_min = max(cfg.g_min[k] for k in pair)
        g_max = min(cfg.g_max[k] for k in pair)
        det = np.concatenate([sim.streams[k].preview_departures(start, start + g_max) for k in pair])
        green = actuated_step(det, start, g_min, g_max, self.gap)
        end = start + green
        self.phase = (self.phase + 1) % len(PHASE_PAIRS)
        t_end = end + max(cfg.interval[k] for k in pair)
        return Decision({k: (start, end) for k in pair}, t_end, label=f"{pair[0] + 1}{pair[1] + 1}")


# ---------------------------------------------------------------------------
# Runs and metrics
# ---------------------------------------------------------------------------

@dataclass
class SimMetrics:
    avg_delay: float
    total_stops: int
    residual_vehicles: int
    n_vehicles: int
    n_censored: int
    n_segments: int
    cycle_delay: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cycle_stops: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    cycle_residual: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def stops_per_vehicle(self) -> float:
        return self.total_stops / self.n_vehicles if self.n_vehicles else 0.0

    @property
    def residual_per_cycle(self) -> float:
        n = self.cycle_residual.size
        return float(self.cycle_residual.sum() / n) if n else 0.0


@dataclass
class SimResult:
    metrics: SimMetrics
    rows: list
    sim: Intersection


def _check_window(horizon, warmup, eval_window):
    if not 0 <= warmup < horizon:
        raise ConfigError(f"need 0 <= warmup < horizon (got {warmup}, {horizon})")
    if eval_window <= 0 or warmup + eval_window > horizon + 1e-9:
        raise ConfigError("evaluation window must be positive and end within the horizon")


def collect_metrics(sim: Intersection, rows: list, horizon: float, warmup: float,
                    eval_window: float) -> SimMetrics:
    """Delay, stops and residuals of vehicles arriving inside the evaluation window.

    Vehicles still present at the horizon are charged their delay so far.
    """
    lo, hi = warmup, warmup + eval_window
    delays, stops, censored = [], 0, 0
    for sq in sim.streams:
        m = (sq.arrival >= lo) & (sq.arrival < hi)
        dep = sq.departure[m]
        gone = ~np.isnan(dep)
        censored += int((~gone).sum())
        delays.append(np.where(gone, dep, horizon) - sq.arrival[m])
        stops += int(sq.stops[m].sum())
    delays = np.concatenate(delays) if delays else np.zeros(0)
    in_eval = [r for r in rows if r["in_eval"]]
    cyc_res = np.array([r["residual_total"] for r in in_eval], dtype=np.int64)
    cyc_stops = np.array([r["stops"] for r in in_eval], dtype=np.int64)
    cyc_delay = np.array([r["mean_delay"] for r in in_eval], dtype=np.float64)
    return SimMetrics(
        avg_delay=float(delays.mean()) if delays.size else 0.0,
        total_stops=stops,
        residual_vehicles=int(cyc_res.sum()),
        n_vehicles=int(delays.size),
        n_censored=censored,
        n_segments=len(in_eval),
        cycle_delay=cyc_delay,
        cycle_stops=cyc_stops,
        cycle_residual=cyc_res,
    )


def _segment_row(sim: Intersection, step: int, t0: float, decision: Decision, served: dict,
                 warmup: float, eval_end: float) -> dict:
    row = {"step": step, "t_start": t0, "t_end": decision.t_end, "phase": decision.label,
           "in_eval": int(warmup <= t0 < eval_end)}
    delays, stops = [], 0
    for k, sq in enumerate(sim.streams):
        w = served.get(k)
        row[f"green_{k + 1}"] = (w.g_end - w.start) if w else 0.0
        row[f"residual_{k + 1}"] = w.residual if w else 0
        dep = sq.departure
        m = (dep >= t0) & (dep < decision.t_end)
        delays.append(dep[m] - sq.arrival[m])
        stops += int(np.sum((sq.arrival >= t0) & (sq.arrival < decision.t_end) & sq.joined))
    d = np.concatenate(delays)
    row["residual_total"] = sum(row[f"residual_{k + 1}"] for k in range(N_STREAMS))
    row["departures"] = int(d.size)
    row["mean_delay"] = float(d.mean()) if d.size else 0.0
    row["stops"] = stops
    row.update(decision.log)
    return row


def simulate(arrivals: Arrivals, controller, horizon: float, warmup: float, eval_window: float,
             rng: np.random.Generator, cfg: ControllerConfig | None = None) -> SimResult:
    """Drive ``controller`` over prepared arrivals until ``horizon``."""
    _check_window(horizon, warmup, eval_window)
    sim = Intersection(arrivals, cfg)
    controller.reset(sim, rng)
    rows = []
    eval_end = warmup + eval_window
    while sim.now < horizon:
        t0 = sim.now
        decision = controller.step(sim)
        if decision.t_end <= t0:
            raise RuntimeError(f"{controller.name} returned an empty segment at t={t0}")
        served = sim.execute(decision)
        row = _segment_row(sim, len(rows), t0, decision, served, warmup, eval_end)
        rows.append(row)
    return SimResult(collect_metrics(sim, rows, horizon, warmup, eval_window), rows, sim)


def run(profile: DemandProfile, controller, horizon: float, warmup: float, eval_window: float,
        rng: np.random.Generator, penetration: float = 0.5,
        cfg: ControllerConfig | None = None) -> SimResult:
    """Generate arrivals from ``profile`` and simulate.

    ``rng`` is split into independent arrival and controller streams, so two
    controllers run with equal seeds see identical vehicles and CV flags.
    """
    _check_window(horizon, warmup, eval_window)
    arr_rng, ctrl_rng = (np.random.default_rng(s) for s in rng.bit_generator.seed_seq.spawn(2))
    arrivals = generate_arrivals(profile, horizon, penetration, arr_rng)
    return simulate(arrivals, controller, horizon, warmup, eval_window, ctrl_rng, cfg)
