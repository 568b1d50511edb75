"""Compare the four controllers on a short paired-seed experiment.

Every controller sees the same vehicles and the same CV flags for a given
seed, so differences come from the control logic alone.  Results land in
runs/demo/<controller>/ as CSV files (see docs/outputs.md).
"""

from pathlib import Path

from privsignal import ExperimentConfig, run_experiment, write_outputs

exp = ExperimentConfig({
    "timing": {"warmup": 300.0, "eval_window": 1200.0, "drain": 120.0},
    "replications": {"seeds": [1, 2]},
    "stochastic": {"scenarios": 100},
})
for ctrl in ("actuated", "lp", "privacy-lp", "privacy-tsp"):
    cfg = exp.replace("controller", ctrl)
    results = run_experiment(cfg)
    out = write_outputs(cfg, results, Path("runs/demo") / ctrl)
    delay = sum(r.metrics.avg_delay for r in results) / len(results)
    resid = sum(r.metrics.residual_vehicles for r in results) / len(results)
    print(f"{ctrl:>12}: delay {delay:5.2f} s, residual vehicles {resid:6.1f}  -> {out}")
