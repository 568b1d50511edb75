"""Experiment configuration, rolling-horizon CV controllers, replications and CSV output."""

from __future__ import annotations

import copy
import csv
import itertools
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .aggregation import AggregateResult, Mode, plaintext_sums, prepare_record, run_round
from .control import (
    N_STREAMS, ControllerConfig, PhaseCase, build_p1, build_p2, extract_plan, point_scenario,
    sample_scenarios,
)
from .errors import ConfigError, PrivSignalError, UnknownAxis
from .estimation import LAMBDA_MIN, CycleHistory, estimate, gamma_from_history, update_history
from .lp import solve
from .privacy import (
    LaplaceSpec, ParticipantHistory, PrivacyBudget, Sensitivity, classify_vast_majority,
    sample_laplace,
)
from .sim import PATTERNS, ActuatedController, Decision, Intersection, SimMetrics, build_demand, run

CONTROLLERS = ("actuated", "lp", "privacy-lp", "privacy-tsp")

DEFAULTS = {
    "controller": "privacy-tsp",
    "pattern": "HighBalanced",
    "penetration": 0.5,
    "privacy": {"p_dire": 0.05, "q_e": 8.0, "phi": 1.0, "epsilon": None},
    "stochastic": {"scenarios": 400},
    "estimator": {"history_cycles": 10, "n_ref_window": 5, "n_ref_initial": 40.0},
    "replications": {"seeds": [1, 2, 3, 4, 5]},
    "timing": {"warmup": 300.0, "eval_window": 3600.0, "drain": 300.0, "paper_scale": False},
    "signal": {
        "yellow": 3.0, "red_clear": 0.0, "lost_start": 2.0, "lost_yellow": 1.0,
        "headway_left": 2.0, "headway_through": 1.0,
        "g_min": 10.0, "g_max": 60.0, "c_min": 40.0, "c_max": 120.0,
    },
}

PAPER_SCALE = {"warmup": 1300.0, "eval_window": 7200.0, "horizon": 10000.0, "replications": 10}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a mapping")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def leaf_paths(tree: dict = DEFAULTS, prefix: str = "") -> list[str]:
    """Dotted names of every settable config value."""
    paths = []
    for key, value in tree.items():
        if isinstance(value, dict):
            paths += leaf_paths(value, f"{prefix}{key}.")
        else:
            paths.append(prefix + key)
    return paths


def set_path(tree: dict, path: str, value) -> dict:
    """Copy of ``tree`` with the dotted ``path`` replaced."""
    if path not in leaf_paths():
        raise UnknownAxis(path)
    out = copy.deepcopy(tree)
    node = out
    *parents, leaf = path.split(".")
    for p in parents:
        node = node[p]
    node[leaf] = value
    return out


def get_path(tree: dict, path: str):
    node = tree
    for p in path.split("."):
        node = node[p]
    return node


@dataclass
class ExperimentConfig:
    """Validated experiment settings; ``raw`` keeps the resolved nested document."""

    raw: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __post_init__(self):
        self.raw = _merge(DEFAULTS, self.raw)
        self.validate()

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            doc = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        return cls(doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_yaml(Path(path).read_text())

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.raw, sort_keys=False)

    def replace(self, path: str, value) -> "ExperimentConfig":
        return ExperimentConfig(set_path(self.raw, path, value))

    # -- typed accessors ---------------------------------------------------
    controller = property(lambda self: self.raw["controller"])
    pattern = property(lambda self: self.raw["pattern"])
    penetration = property(lambda self: float(self.raw["penetration"]))
    p_dire = property(lambda self: float(self.raw["privacy"]["p_dire"]))
    q_e = property(lambda self: float(self.raw["privacy"]["q_e"]))
    phi = property(lambda self: float(self.raw["privacy"]["phi"]))
    scenarios = property(lambda self: int(self.raw["stochastic"]["scenarios"]))

    @property
    def fixed_epsilon(self) -> float | None:
        eps = self.raw["privacy"]["epsilon"]
        return None if eps is None else float(eps)

    @property
    def seeds(self) -> list[int]:
        seeds = [int(s) for s in self.raw["replications"]["seeds"]]
        if self.raw["timing"]["paper_scale"] and len(seeds) < PAPER_SCALE["replications"]:
            seeds += [max(seeds, default=0) + i + 1
                      for i in range(PAPER_SCALE["replications"] - len(seeds))]
        return seeds

    @property
    def warmup(self) -> float:
        t = self.raw["timing"]
        return PAPER_SCALE["warmup"] if t["paper_scale"] else float(t["warmup"])

    @property
    def eval_window(self) -> float:
        t = self.raw["timing"]
        return PAPER_SCALE["eval_window"] if t["paper_scale"] else float(t["eval_window"])

    @property
    def horizon(self) -> float:
        t = self.raw["timing"]
        if t["paper_scale"]:
            return PAPER_SCALE["horizon"]
        return self.warmup + self.eval_window + float(t["drain"])

    @property
    def signal(self) -> ControllerConfig:
        s = self.raw["signal"]
        headway = [s["headway_left"], s["headway_through"]] * (N_STREAMS // 2)
        return ControllerConfig(
            yellow=s["yellow"], red_clear=s["red_clear"], lost_start=s["lost_start"],
            lost_yellow=s["lost_yellow"], headway=headway, g_min=s["g_min"], g_max=s["g_max"],
            c_min=s["c_min"], c_max=s["c_max"])

    def validate(self) -> None:
        try:
            if self.controller not in CONTROLLERS:
                raise ConfigError(f"controller must be one of {CONTROLLERS}")
            if self.pattern not in PATTERNS:
                raise ConfigError(f"pattern must be one of {PATTERNS}")
            if not 0.0 <= self.penetration <= 1.0:
                raise ConfigError("penetration must lie in [0, 1]")
            if self.scenarios < 1:
                raise ConfigError("stochastic.scenarios must be >= 1")
            if not 0.0 < 8 * self.p_dire < 1.0:
                raise ConfigError("privacy.p_dire must lie in (0, 1/8)")
            if self.q_e <= 0 or self.phi <= 0:
                raise ConfigError("privacy.q_e and privacy.phi must be positive")
            if self.fixed_epsilon is not None and self.fixed_epsilon <= 0:
                raise ConfigError("privacy.epsilon must be positive when given")
            seeds = self.seeds
            if not seeds or len(set(seeds)) != len(seeds):
                raise ConfigError("replications.seeds must be a non-empty list of distinct integers")
            t = self.raw["timing"]
            if float(t["warmup"]) < 0 or float(t["eval_window"]) <= 0 or float(t["drain"]) < 0:
                raise ConfigError("timing values must be nonnegative (eval_window positive)")
            e = self.raw["estimator"]
            if int(e["history_cycles"]) < 1 or int(e["n_ref_window"]) < 1 or float(e["n_ref_initial"]) < 2:
                raise ConfigError("estimator settings out of range")
            self.signal  # noqa: B018 - builds and validates the timing parameters
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# CV-based controllers
# ---------------------------------------------------------------------------

def _zero_aggregate(mode: Mode, n: int) -> AggregateResult:
    z = np.zeros(N_STREAMS)
    return AggregateResult(z, z.copy(), z.copy(), mode, n)


class RollingHorizonController:
    """Re-optimizes a full cycle at every barrier and executes its first phase group.

    ``kind`` selects the pipeline: ``lp`` (exact secure sums, P1),
    ``privacy-lp`` (noisy sums, P1) or ``privacy-tsp`` (noisy sums, P2).
    """

    def __init__(self, exp: ExperimentConfig, kind: str, dump_dir=None):
        if kind not in CONTROLLERS[1:]:
            raise ConfigError(f"not a CV-based controller: {kind!r}")
        self.name = kind
        # When set, every decision writes its LP instance and round transcript here.
        self.dump_dir = None if dump_dir is None else Path(dump_dir)
        self.exp = exp
        self.cfg = exp.signal
        self.mode = Mode.SMPC_ONLY if kind == "lp" else Mode.SMPC_DP
        self.stochastic = kind == "privacy-tsp"

    def reset(self, sim: Intersection, rng: np.random.Generator) -> None:
        e = self.exp.raw["estimator"]
        if self.dump_dir is not None:
            self.dump_dir.mkdir(parents=True, exist_ok=True)
        self.rng = rng
        self.case = PhaseCase.START_15
        self.hist = CycleHistory(N_STREAMS, int(e["history_cycles"]))
        self.hist_exact = CycleHistory(N_STREAMS, int(e["history_cycles"]))
        self.participants = ParticipantHistory(int(e["n_ref_window"]), float(e["n_ref_initial"]))
        self.red_ref = np.full(N_STREAMS, self.cfg.c_max / 2)
        self.lam = np.full(N_STREAMS, LAMBDA_MIN)
        self.lam_exact = np.full(N_STREAMS, LAMBDA_MIN)
        self.step_idx = 0
        self.diagnostics: list[dict] = []

    def _budget(self) -> PrivacyBudget | None:
        if self.exp.fixed_epsilon is not None:
            return PrivacyBudget(self.exp.p_dire, self.participants.n_ref, self.exp.fixed_epsilon)
        try:
            return self.participants.budget(self.exp.p_dire)
        except PrivSignalError:
            pass
        # A sparse spell can drag the sliding mean below the point where any
        # positive epsilon exists; skipping would then stall the count release
        # for good, so fall back to the cold-start reference instead.
        try:
            return PrivacyBudget.from_risk(self.exp.p_dire, self.participants.initial)
        except PrivSignalError:
            return None

    def step(self, sim: Intersection) -> Decision:
        cfg, t = self.cfg, sim.now
        states = sim.snapshot()
        records = [prepare_record(s) for s in states]
        n = len(records)
        sens = [Sensitivity(self.exp.q_e, self.exp.phi, r) for r in self.red_ref]
        budget = self._budget() if self.mode is Mode.SMPC_DP else None
        skipped = n < 2 or (self.mode is Mode.SMPC_DP and budget is None)

        diag = {"step": self.step_idx, "time": t, "n_cvs": n,
                "n_queued_cvs": sum(s.delta for s in states), "skipped": int(skipped),
                "n_ref": budget.n_ref if budget is not None else math.nan,
                "epsilon": budget.epsilon if budget is not None else math.nan}
        if skipped:
            agg = _zero_aggregate(self.mode, n)
        else:
            agg, transcript = run_round(records, self.mode, budget, sens, self.rng,
                                        round_id=self.step_idx)
            if self.dump_dir is not None:
                with open(self.dump_dir / f"transcript_{self.step_idx:05d}.tsv", "w") as fh:
                    transcript.dump(fh)
            if self.mode is Mode.SMPC_DP and self.exp.fixed_epsilon is None:
                # The party count is released through the same mechanism (sensitivity 1).
                noisy_n = n + sample_laplace(LaplaceSpec(1.0 / budget.epsilon), self.rng)
                self.participants.push(max(noisy_n, 2.0))
            else:
                self.participants.push(n)
            update_history(self.hist, agg.eta_hat)
        exact = plaintext_sums(records) if records else np.zeros(3 * N_STREAMS)
        if n:
            update_history(self.hist_exact, exact[:N_STREAMS])

        gamma = gamma_from_history(self.hist)
        est = estimate(agg.p_hat, agg.t_hat, gamma, cfg.lambda_max)
        if not (skipped or est.degenerate):
            self.lam = est.lambda_k
        gx = gamma_from_history(self.hist_exact)
        est_x = estimate(exact[N_STREAMS:2 * N_STREAMS], exact[2 * N_STREAMS:], gx, cfg.lambda_max)
        if not est_x.degenerate:
            self.lam_exact = est_x.lambda_k

        r_s0 = sim.red_starts - t
        t0 = time.perf_counter()
        if self.stochastic:
            if budget is None or skipped:
                scen = point_scenario(agg, gamma, cfg.lambda_max)
                scen.rates[:] = self.lam
            else:
                scen = sample_scenarios(agg, sens, budget, self.exp.scenarios, gamma, self.rng,
                                        cfg.lambda_max)
            lp = build_p2(scen, agg.eta_hat, gamma, cfg, self.case, r_s0)
            diag["scenario_fallbacks"] = scen.fallbacks
        else:
            lp = build_p1(agg, self.lam, cfg, self.case, r_s0)
            diag["scenario_fallbacks"] = 0
        t1 = time.perf_counter()
        if self.dump_dir is not None:
            with open(self.dump_dir / f"lp_{self.step_idx:05d}.txt", "w") as fh:
                lp.dump(fh)
        sol = solve(lp)
        t2 = time.perf_counter()
        plan = extract_plan(sol, self.case, cfg)

        if budget is not None:
            b_t = [s.delta_t / budget.epsilon for s in sens]
            diag.update(b_eta=1.0 / budget.epsilon, b_pos=self.exp.q_e / budget.epsilon)
        else:
            b_t = [math.nan] * N_STREAMS
            diag.update(b_eta=math.nan, b_pos=math.nan)
        for k in range(N_STREAMS):
            diag[f"b_time_{k + 1}"] = b_t[k]
        rep = classify_vast_majority(states, sens)
        diag.update(type1=rep.type1, type2=rep.type2, type3=rep.type3,
                    build_time=t1 - t0, solve_time=t2 - t1, lp_method=sol.method,
                    iterations=sol.iterations, objective=sol.objective,
                    cycle=plan.cycle, phase_case=self.case.value)
        log = {}
        for k in range(N_STREAMS):
            diag[f"lambda_hat_{k + 1}"] = self.lam[k]
            diag[f"lambda_exact_{k + 1}"] = self.lam_exact[k]
            log[f"lambda_hat_{k + 1}"] = self.lam[k]
            log[f"lambda_exact_{k + 1}"] = self.lam_exact[k]
        self.diagnostics.append(diag)

        ring1, ring2 = self.case.rings
        windows = {k: (t + plan.g_start[k], t + plan.g_end[k]) for k in (*ring1[:2], *ring2[:2])}
        t_end = t + max(plan.g_end[r[1]] + cfg.interval[r[1]] for r in (ring1, ring2))
        label = self.case.value
        self.red_ref = plan.red_durations(cfg)
        self.case = self.case.next
        self.step_idx += 1
        return Decision(windows, t_end, label=label, log=log)


def make_controller(exp: ExperimentConfig, kind: str | None = None, dump_dir=None):
    kind = kind or exp.controller
    if kind == "actuated":
        return ActuatedController()
    return RollingHorizonController(exp, kind, dump_dir)


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    controller: str
    seed: int
    metrics: SimMetrics
    cycles: list
    diagnostics: list

    def lambda_correlation(self) -> float:
        """Pearson correlation of perturbed vs exact-aggregate rate estimates (all steps, streams)."""
        if not self.diagnostics:
            return math.nan
        hat = np.array([[d[f"lambda_hat_{k + 1}"] for k in range(N_STREAMS)] for d in self.diagnostics])
        ex = np.array([[d[f"lambda_exact_{k + 1}"] for k in range(N_STREAMS)] for d in self.diagnostics])
        if hat.std() == 0 or ex.std() == 0:
            return math.nan
        return float(np.corrcoef(hat.ravel(), ex.ravel())[0, 1])

    def mean_solve_time(self) -> float:
        return float(np.mean([d["solve_time"] for d in self.diagnostics])) if self.diagnostics else 0.0


def run_replication(exp: ExperimentConfig, seed: int, kind: str | None = None,
                    dump_dir=None) -> RunResult:
    """Simulate one seed; ``dump_dir`` keeps per-decision LP and transcript files."""
    kind = kind or exp.controller
    ctrl = make_controller(exp, kind, dump_dir)
    try:
        res = run(build_demand(exp.pattern), ctrl, exp.horizon, exp.warmup, exp.eval_window,
                  np.random.default_rng(seed), exp.penetration, exp.signal)
    except PrivSignalError as exc:
        raise RuntimeError(f"{kind} run with seed {seed} failed: {exc}") from exc
    return RunResult(kind, seed, res.metrics, res.rows, getattr(ctrl, "diagnostics", []))


def run_experiment(exp: ExperimentConfig, workers: int = 1, dump_dir=None) -> list[RunResult]:
    """One :class:`RunResult` per replication seed."""
    if dump_dir is not None:
        return [run_replication(exp, s, dump_dir=Path(dump_dir) / f"seed_{s}") for s in exp.seeds]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(run_replication, [exp] * len(exp.seeds), exp.seeds))
    return [run_replication(exp, s) for s in exp.seeds]


# ---------------------------------------------------------------------------
# Tables and files
# ---------------------------------------------------------------------------

SUMMARY_COLUMNS = ["controller", "pattern", "penetration", "seed", "avg_delay", "total_stops",
                   "stops_per_vehicle", "residual_vehicles", "residual_per_cycle", "n_vehicles",
                   "n_censored", "n_segments", "mean_solve_time", "lambda_correlation"]
CYCLE_COLUMNS = (["controller", "seed", "step", "cycle", "t_start", "t_end", "phase", "in_eval"]
                 + [f"green_{k}" for k in range(1, 9)] + [f"residual_{k}" for k in range(1, 9)]
                 + ["residual_total", "departures", "mean_delay", "stops"]
                 + [f"lambda_exact_{k}" for k in range(1, 9)] + [f"lambda_hat_{k}" for k in range(1, 9)])
DIAGNOSTIC_COLUMNS = (["controller", "seed", "step", "time", "n_cvs", "n_queued_cvs", "skipped",
                       "n_ref", "epsilon", "b_eta", "b_pos"] + [f"b_time_{k}" for k in range(1, 9)]
                      + ["type1", "type2", "type3", "scenario_fallbacks", "build_time", "solve_time",
                         "lp_method", "iterations", "objective", "cycle", "phase_case"]
                      + [f"lambda_exact_{k}" for k in range(1, 9)]
                      + [f"lambda_hat_{k}" for k in range(1, 9)])
SWEEP_COLUMNS = ["axis", "value", "controller", "replications", "avg_delay_mean", "avg_delay_std",
                 "stops_per_vehicle_mean", "stops_per_vehicle_std", "residual_vehicles_mean",
                 "residual_vehicles_std", "type1_fraction", "mean_solve_time"]


def summary_row(exp: ExperimentConfig, r: RunResult) -> dict:
    m = r.metrics
    return {"controller": r.controller, "pattern": exp.pattern, "penetration": exp.penetration,
            "seed": r.seed, "avg_delay": m.avg_delay, "total_stops": m.total_stops,
            "stops_per_vehicle": m.stops_per_vehicle, "residual_vehicles": m.residual_vehicles,
            "residual_per_cycle": m.residual_per_cycle, "n_vehicles": m.n_vehicles,
            "n_censored": m.n_censored, "n_segments": m.n_segments,
            "mean_solve_time": r.mean_solve_time(), "lambda_correlation": r.lambda_correlation()}


def cycle_rows(r: RunResult) -> list[dict]:
    rows = []
    for row in r.cycles:
        out = dict.fromkeys(CYCLE_COLUMNS, "")
        out.update({k: v for k, v in row.items() if k in out})
        out.update(controller=r.controller, seed=r.seed, cycle=row["step"] // 2)
        rows.append(out)
    return rows


def diagnostic_rows(r: RunResult) -> list[dict]:
    rows = []
    for d in r.diagnostics:
        out = dict.fromkeys(DIAGNOSTIC_COLUMNS, "")
        out.update({k: v for k, v in d.items() if k in out})
        out.update(controller=r.controller, seed=r.seed)
        rows.append(out)
    return rows


def _write_csv(path: Path, columns: list, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for row in rows:
            w.writerow({c: row.get(c, "") for c in columns})


def write_outputs(exp: ExperimentConfig, results: list[RunResult], outdir) -> Path:
    """Write ``summary.csv``, ``cycles.csv``, ``diagnostics.csv`` and ``config.yaml``."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, [summary_row(exp, r) for r in results])
    _write_csv(out / "cycles.csv", CYCLE_COLUMNS, [row for r in results for row in cycle_rows(r)])
    _write_csv(out / "diagnostics.csv", DIAGNOSTIC_COLUMNS,
               [row for r in results for row in diagnostic_rows(r)])
    (out / "config.yaml").write_text(exp.to_yaml())
    return out


def _mean_std(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def aggregate_row(axis: str, value, exp: ExperimentConfig, results: list[RunResult]) -> dict:
    d_mean, d_std = _mean_std([r.metrics.avg_delay for r in results])
    s_mean, s_std = _mean_std([r.metrics.stops_per_vehicle for r in results])
    q_mean, q_std = _mean_std([r.metrics.residual_vehicles for r in results])
    t1 = sum(d["type1"] for r in results for d in r.diagnostics)
    tot = sum(d["type1"] + d["type2"] + d["type3"] for r in results for d in r.diagnostics)
    return {"axis": axis, "value": value, "controller": exp.controller,
            "replications": len(results), "avg_delay_mean": d_mean, "avg_delay_std": d_std,
            "stops_per_vehicle_mean": s_mean, "stops_per_vehicle_std": s_std,
            "residual_vehicles_mean": q_mean, "residual_vehicles_std": q_std,
            "type1_fraction": t1 / tot if tot else math.nan,
            "mean_solve_time": float(np.mean([r.mean_solve_time() for r in results]))}


def sweep(base: ExperimentConfig, axis, values, outdir=None, workers: int = 1) -> list[dict]:
    """Run ``base`` once per value of the dotted config ``axis`` with shared seeds.

    ``axis`` may also be a sequence of paths, in which case ``values`` is a
    matching sequence of value lists and the cross product is run (the
    ``value`` column then reads ``a;b``).  Returns one summary row per cell;
    with ``outdir`` each cell also gets its own run directory plus a
    top-level ``sweep.csv``.
    """
    axes = [axis] if isinstance(axis, str) else list(axis)
    grids = [values] if isinstance(axis, str) else [list(v) for v in values]
    if len(axes) != len(grids):
        raise ConfigError("one value list is needed per sweep axis")
    known = leaf_paths()
    for a in axes:
        if a not in known:
            raise UnknownAxis(a)
    label = ";".join(axes)
    rows = []
    for i, cell in enumerate(itertools.product(*grids)):
        exp = base
        for a, v in zip(axes, cell):
            exp = exp.replace(a, v)
        value = cell[0] if len(cell) == 1 else ";".join(str(v) for v in cell)
        results = run_experiment(exp, workers)
        rows.append(aggregate_row(label, value, exp, results))
        if outdir is not None:
            tag = ",".join(f"{a}={v}" for a, v in zip(axes, cell))
            write_outputs(exp, results, Path(outdir) / f"{i:02d}_{tag}")
    if outdir is not None:
        Path(outdir).mkdir(parents=True, exist_ok=True)
        _write_csv(Path(outdir) / "sweep.csv", SWEEP_COLUMNS, rows)
    return rows


def coerce_value(axis: str, text: str):
    """Parse a command-line value using the type of the axis's default."""
    default = get_path(DEFAULTS, axis)
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{axis} expects a boolean, got {text!r}")
    if isinstance(default, list):
        return [int(v) for v in text.replace(";", ",").split(",") if v.strip()]
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float) or default is None:
        if text.lower() in ("none", "null", ""):
            return None
        return float(text)
    return text


__all__ = [
    "CONTROLLERS", "DEFAULTS", "ExperimentConfig", "RollingHorizonController", "RunResult",
    "aggregate_row", "coerce_value", "make_controller", "run_experiment", "run_replication",
    "sweep", "write_outputs",
]
