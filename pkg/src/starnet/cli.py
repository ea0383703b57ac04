"""Command-line entry point: ``starnet {simulate,fit,diagnose,stats}``.

Exit status 0 on success, 2 on validation errors, 3 on numerical failures.
Errors are reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import zipfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.stats import norm

from . import diagnostics as dg
from .errors import NumericalError, ValidationError
from .io import (
    fit_options_from_config,
    load_config,
    params_from_json,
    params_to_json,
    read_covariates,
    read_panel,
    spec_from_config,
    write_covariates,
    write_panel,
)
from .model import ModelParams, UndirectedModelParams
from .simulate import SIM_STUDY_COVARIATE_NAMES, SimConfig, sim_study_truth, simulate_star
from .vb.design import bases_at, stats_at
from .vb.fit import fit
from .vb.state import VariationalState

log = logging.getLogger("starnet")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def save_npz(path, arrays: dict) -> None:
    """Like ``np.savez`` but with fixed zip timestamps so equal inputs give equal bytes."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            with zf.open(info, "w") as fh:
                np.lib.format.write_array(fh, np.asarray(arrays[name]), allow_pickle=False)


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


class Run:
    """Resolved configuration for one command invocation."""

    def __init__(self, cfg: dict, base: Path, seed=None, workers=None):
        self.cfg = cfg
        self.base = base
        self.seed = seed if seed is not None else cfg.get("seed", 0)
        self.workers = workers or cfg.get("workers") or os.cpu_count() or 1
        self.out = self.path(cfg.get("output_dir", "."))
        self.spec = spec_from_config(cfg)

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base / p

    def data(self, key: str, default: str) -> Path:
        d = self.cfg.get("data", {})
        return self.path(d[key]) if key in d else self.out / default


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(run: Run) -> None:
    sim = run.cfg.get("simulate", {})
    n, T = sim.get("n", 30), sim.get("T", 10)
    spec = run.spec
    if "params" in sim:
        try:
            params = params_from_json(sim["params"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"config simulate/params: {exc}") from None
    else:
        if not spec.directed:
            raise ValidationError("config simulate/params is required for undirected simulation")
        params = sim_study_truth(sim.get("truth", "dependence") == "dependence")
        if sim.get("truth") == "independence" and spec.has_effects:
            spec = replace(spec, covariance_design="none")
    try:
        config = SimConfig(n=n, T=T, seed=run.seed, params=params, spec=spec,
                           initial_density=sim.get("initial_density", 0.05))
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    network, covariates, _ = simulate_star(config)
    run.out.mkdir(parents=True, exist_ok=True)
    write_panel(run.out / "panel.txt", network)
    write_covariates(run.out / "covariates", covariates, static=SIM_STUDY_COVARIATE_NAMES[:2])
    names = covariates.names + spec.stat_selection
    _write_json(run.out / "truth.json", params_to_json(params, names))
    log.info("simulated n=%d T=%d into %s", n, T, run.out)


def _load_inputs(run: Run):
    network = read_panel(run.data("panel", "panel.txt"))
    covariates = read_covariates(run.data("covariates", "covariates/manifest.json"))
    if network.directed != run.spec.directed:
        raise ValidationError("panel directedness does not match config model/directed")
    return network, covariates


def _comparison(report, truth) -> dict:
    true_coef = np.r_[truth.beta, truth.theta]
    if true_coef.size != len(report.names):
        raise ValidationError("truth parameters do not match the fitted coefficients")
    out = {
        "coefficients": [
            {"name": nm, "true": float(tv), "posterior_mean": float(m), "error": float(m - tv)}
            for nm, tv, m in zip(report.names, true_coef, report.coef_mean)
        ],
        "truth": params_to_json(truth),
    }
    if isinstance(truth, (ModelParams, UndirectedModelParams)):
        out["attenuation_factor"] = dg.attenuation_factor(truth)
        out["attenuation_note"] = dg.ATTENUATION_NOTE
    return out


def cmd_fit(run: Run) -> None:
    network, covariates = _load_inputs(run)
    options = replace(fit_options_from_config(run.cfg), seed=run.seed)
    report = fit(network, covariates, run.spec, options)
    truth_path = run.data("truth", "truth.json")
    if truth_path.exists():
        report.comparison = _comparison(report, params_from_json(json.loads(truth_path.read_text())))
    run.out.mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    doc["actors"] = [str(lab) for lab in network.labels]
    _write_json(run.out / "fit_report.json", doc)
    z = norm.ppf(0.975)
    with open(run.out / "posterior.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "mean", "sd", "lower95", "upper95"])
        for nm, m, s in zip(report.names, report.coef_mean, report.coef_sd):
            w.writerow([nm, repr(float(m)), repr(float(s)), repr(float(m - z * s)), repr(float(m + z * s))])
    arrays = report.state.to_arrays()
    arrays["times"] = np.asarray(report.times)
    save_npz(run.out / "state.npz", arrays)
    log.info("fit %s after %d iterations", "converged" if report.converged else "stopped", report.iterations)


def cmd_diagnose(run: Run) -> None:
    if not run.spec.has_effects:
        raise ValidationError("no random effects in spec")
    with np.load(run.data("state", "state.npz")) as z:
        arrays = {k: z[k] for k in z.files}
    times = arrays.pop("times")
    state = VariationalState.from_arrays(arrays)
    if state.mu_eff.shape[1] == 0:
        raise ValidationError("no random effects in spec")
    dcfg = run.cfg.get("diagnostics", {})
    draws = dcfg.get("draws", dg.DEFAULT_DRAWS)
    norms = dg.sample_effect_norms(state, draws, run.seed)
    K_s, K_r, _ = run.spec.K
    s2R = dg.sigma2_R_proxy(state.M_R) if run.spec.directed else 0.0
    comp_sig = max(np.sqrt(dg.comparator_sigma2(p, s2R, K_s, K_r)) for p in dcfg.get("p_values", dg.DEFAULT_P_VALUES))
    top = max(norms.max(), comp_sig * (np.sqrt(state.n * (K_s + K_r)) + 6.0))
    grid = dg.default_epsilon_grid(top, dcfg.get("grid_points", dg.DEFAULT_GRID_POINTS))
    ball = dg.posterior_ball_curves(state, grid, draws, run.seed, labels=[int(t) for t in times])
    comp = dg.comparator_curves(state.n, K_s, K_r, s2R, dcfg.get("p_values", dg.DEFAULT_P_VALUES), grid)
    run.out.mkdir(parents=True, exist_ok=True)
    dg.write_curves_csv(run.out / "ball_curves.csv", ball, "posterior")
    dg.write_curves_csv(run.out / "comparator_curves.csv", comp, "comparator")
    _write_json(run.out / "diagnostics.json", {
        "sigma2_R_proxy": s2R, "K_s": K_s, "K_r": K_r, "draws": draws,
        "median_norm": {str(int(t)): c.quantile(0.5) for t, c in zip(times, ball)},
        "comparator_median": {str(c.label): c.quantile(0.5) for c in comp},
    })


def cmd_stats(run: Run) -> None:
    network = read_panel(run.data("panel", "panel.txt"))
    spec = run.spec
    L = spec.lag_depth
    arrays, rows = {}, []
    for t in range(L, network.T + 1):
        G, labels = stats_at(network, spec, t)
        arrays[f"G_t{t}"] = G
        for lab, g in zip(labels, G):
            rows.append([t, lab, repr(float(g.sum())), repr(float(g.mean()))])
        if spec.has_effects:
            bases = bases_at(network, spec, t)
            for k, H in enumerate(bases.H_s):
                arrays[f"H_s{k + 1}_t{t}"] = H
            for k, H in enumerate(bases.H_r):
                arrays[f"H_r{k + 1}_t{t}"] = H
    run.out.mkdir(parents=True, exist_ok=True)
    save_npz(run.out / "stats.npz", arrays)
    with open(run.out / "stats_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "statistic", "total", "mean"])
        w.writerows(rows)


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "diagnose": cmd_diagnose, "stats": cmd_stats}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="starnet", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument("--workers", type=int, help="worker count (default: available cores)")
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"status": "error", "kind": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        if args.seed is not None and args.seed < 0:
            raise ValidationError("--seed must be nonnegative")
        if args.workers is not None and args.workers < 1:
            raise ValidationError("--workers must be positive")
        cfg = load_config(args.config)
        run = Run(cfg, Path(args.config).resolve().parent, args.seed, args.workers)
        COMMANDS[args.command](run)
    except NumericalError as exc:
        return _fail("numerical", str(exc), EXIT_NUMERICAL)
    except (ValidationError, ValueError, FileNotFoundError) as exc:
        return _fail("validation", str(exc), EXIT_VALIDATION)
    except np.linalg.LinAlgError as exc:
        return _fail("numerical", str(exc), EXIT_NUMERICAL)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
