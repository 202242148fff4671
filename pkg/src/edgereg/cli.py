"""Command-line surface: file-based, reproducible workflows.

Subcommands
-----------
simulate   write replicate datasets + ground truth for a simulation design
fit        run the sampler on a dataset (or a directory of replicates)
select     emit graph documents (JSON + DOT) from a draw archive
evaluate   score fitted replicates against ground truth into a CSV report
diagnose   per-parameter trace reports (Geweke, ESS) from a fitted archive

Configuration precedence: command-line flags override the --config JSON
file, which overrides built-in defaults.  The effective configuration is
echoed into every output manifest.  Exit codes: 0 success, 2 configuration
error, 3 numerical abort, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import io as eio
from .diagnostics import batch_geweke, histogram_bins
from .evaluate import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_KAPPA_GRID,
    EvalReport,
    bauc,
    best_univariate_aucs,
    confusion,
    point_at_fpr,
    roc_sweep,
)
from .inference import predict_graph
from .model import Dataset, standardize_columns
from .sampler import ChainAbort, ChainConfig, compute_m_s, purity_selectors, run_chain
from .simulate import (
    build_sim1,
    build_sim2,
    derive_seeds,
    generate_dataset,
    purity_covariates,
    sim_truth_edges,
)

__all__ = ["main", "RunConfig", "ConfigError"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Declarative run configuration; every field has a usable default."""

    mode: str = "purity"            # purity | group | general
    sim: int = 1                    # simulation design (simulate)
    p: int = 20
    n_reference: int = 0            # 0 -> design default (50 or 100)
    n_mixed: int = 0                # 0 -> design default (150 or 200)
    replicates: int = 1
    iterations: int = 20_000
    burn_in: int = 10_000
    thin: int = 10
    seed: int = 0
    levels: str = "0,1"             # purity values, or ;-separated vectors
    kappa: str = "0.1"
    alpha: float = 0.1
    store_subject_level: bool = False
    adapt_sigma_lambda: bool = True
    sigma_lambda: float = 1.0
    intercept: bool = False
    workers: int = 1


_BOOL_FIELDS = {"store_subject_level", "adapt_sigma_lambda", "intercept"}


def _merge_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except OSError as err:
            raise ConfigError(f"cannot read config file: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"config file is not valid JSON: {err}") from err
        known = {f.name for f in fields(RunConfig)}
        unknown = set(loaded) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = replace(cfg, **loaded)
    overrides = {}
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = val
    if overrides:
        cfg = replace(cfg, **overrides)
    if cfg.mode not in ("purity", "group", "general"):
        raise ConfigError(f"mode must be purity|group|general, got {cfg.mode!r}")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    env_workers = os.environ.get("EDGEREG_WORKERS")
    if env_workers:
        cfg = replace(cfg, workers=int(env_workers))
    return cfg


def _parse_levels(cfg: RunConfig, q: int) -> list[np.ndarray]:
    """Purity mode: comma-separated purity values mapped to (1-pi, pi).
    Other modes: semicolon-separated comma vectors of length q."""
    text = cfg.levels.strip()
    if not text:
        raise ConfigError("levels must be non-empty")
    try:
        if cfg.mode == "purity":
            pis = [float(tok) for tok in text.split(",")]
            return [purity_covariates(pi)[0] for pi in pis]
        out = []
        for chunk in text.split(";"):
            vec = np.array([float(tok) for tok in chunk.split(",")], dtype=np.float64)
            if vec.shape != (q,):
                raise ConfigError(f"level {chunk!r} must have q={q} entries")
            out.append(vec)
        return out
    except ValueError as err:
        raise ConfigError(f"cannot parse levels {cfg.levels!r}: {err}") from err


def _parse_kappas(cfg: RunConfig) -> list[float]:
    try:
        ks = [float(tok) for tok in cfg.kappa.split(",")]
    except ValueError as err:
        raise ConfigError(f"cannot parse kappa list {cfg.kappa!r}") from err
    if any(k < 0 for k in ks):
        raise ConfigError("kappa values must be nonnegative")
    return ks


def _effective(cfg: RunConfig) -> dict:
    return asdict(cfg)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_SIM_DEFAULTS = {1: (50, 150), 2: (100, 200)}


def cmd_simulate(cfg: RunConfig, out_dir: Path) -> int:
    if cfg.sim not in (1, 2):
        raise ConfigError(f"sim must be 1 or 2, got {cfg.sim}")
    n_ref, n_mix = _SIM_DEFAULTS[cfg.sim]
    n_ref = cfg.n_reference or n_ref
    n_mix = cfg.n_mixed or n_mix
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = derive_seeds(cfg.seed, cfg.replicates)
    build = build_sim1 if cfg.sim == 1 else build_sim2
    for r, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        truth = build(rng, p=cfg.p)
        data, pis = generate_dataset(truth, n_ref, n_mix, rng)
        stem = out_dir / f"replicate_{r:03d}"
        eio.save_dataset(data, stem.with_suffix(".csv"),
                         meta={"seed": seed, "replicate": r, "sim": cfg.sim,
                               "purity": list(map(float, pis))})
        eio.save_truth(truth, out_dir / f"truth_{r:03d}",
                       meta={"seed": seed, "replicate": r, "sim": cfg.sim})
    manifest = {"command": "simulate", "config": _effective(cfg),
                "config_hash": eio.config_hash(_effective(cfg)),
                "replicates": cfg.replicates, "seeds": seeds}
    eio.write_json(out_dir / "simulate_manifest.json", manifest)
    print(f"wrote {cfg.replicates} replicate(s) to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def _selectors_for_mode(data: Dataset, mode: str):
    if mode == "purity":
        return purity_selectors(data)
    if mode == "group":
        return [data.x[:, s] == 1.0 for s in range(data.n_covariates)]
    return [np.ones(data.n_samples, dtype=bool)] * data.n_covariates


def _prepare_data(data: Dataset, cfg: RunConfig) -> Dataset:
    if cfg.mode == "purity" and data.n_covariates != 2:
        raise ConfigError("purity mode requires q = 2 covariates (1-pi, pi)")
    if cfg.intercept and cfg.mode == "general":
        x = np.column_stack([np.ones(data.n_samples), data.x])
        data = Dataset(y=data.y, x=x, node_names=data.node_names,
                       covariate_names=("intercept",) + data.covariate_names,
                       standardized=data.standardized,
                       y_means=data.y_means, y_sds=data.y_sds)
    if not data.standardized:
        y, means, sds = standardize_columns(data.y)
        data = Dataset(y=y, x=data.x, node_names=data.node_names,
                       covariate_names=data.covariate_names, standardized=True,
                       y_means=means, y_sds=sds)
    return data


def fit_one(data: Dataset, cfg: RunConfig, seed: int, out_dir: Path) -> None:
    """Fit one dataset and write the draw archive + diagnostics log."""
    data = _prepare_data(data, cfg)
    levels = _parse_levels(cfg, data.n_covariates)
    chain_cfg = ChainConfig(
        total_iterations=cfg.iterations,
        burn_in=cfg.burn_in,
        thin=cfg.thin,
        seed=seed,
        target_covariate_levels=tuple(tuple(l) for l in levels),
        store_subject_level=cfg.store_subject_level,
        adapt_sigma_lambda=cfg.adapt_sigma_lambda,
        sigma_lambda_init=cfg.sigma_lambda,
    )
    m_s = compute_m_s(data, _selectors_for_mode(data, cfg.mode))
    result = run_chain(data, chain_cfg, m_s=m_s)
    effective = dict(_effective(cfg), seed=seed)
    eio.save_draws(result.draws, out_dir, config=effective)
    eio.write_diagnostics_log(result.diagnostics, out_dir / "diagnostics.jsonl")
    summary = {
        "m_s": list(map(float, m_s)),
        "lambda": list(map(float, result.state.lam)),
        "gamma_sq": result.state.gamma_sq,
        "sigma_lambda": list(map(float, result.state.sigma_lambda)),
        "mh_accept_rate": [
            float(a) / s if s else float("nan")
            for a, s in zip(result.state.mh_accept, result.state.mh_steps)
        ],
        "node_names": list(data.node_names),
    }
    eio.write_json(out_dir / "fit_summary.json", summary)


def _fit_task(payload):
    data_path, cfg, seed, out_dir = payload
    data = eio.load_dataset(data_path)
    fit_one(data, cfg, seed, Path(out_dir))
    return str(out_dir)


def cmd_fit(cfg: RunConfig, data_path: Path, out_dir: Path) -> int:
    if data_path.is_dir():
        replicates = sorted(data_path.glob("replicate_*.csv"))
        if not replicates:
            raise ConfigError(f"no replicate_*.csv files under {data_path}")
    else:
        if not data_path.exists():
            raise FileNotFoundError(f"dataset not found: {data_path}")
        replicates = [data_path]
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = derive_seeds(cfg.seed, len(replicates))
    tasks = []
    for r, path in enumerate(replicates):
        sub = out_dir / f"fit_{r:03d}" if len(replicates) > 1 else out_dir
        sub.mkdir(parents=True, exist_ok=True)
        tasks.append((str(path), cfg, seeds[r], str(sub)))
    if cfg.workers > 1 and len(tasks) > 1:
        import multiprocessing as mp

        with mp.get_context("spawn").Pool(min(cfg.workers, len(tasks))) as pool:
            for done in pool.imap(_fit_task, tasks):
                print(f"fitted {done}")
    else:
        for task in tasks:
            print(f"fitted {_fit_task(task)}")
    return 0


# ---------------------------------------------------------------------------
# select
# ---------------------------------------------------------------------------


def cmd_select(cfg: RunConfig, draws_dir: Path, out_dir: Path) -> int:
    draws, manifest = eio.load_draws(draws_dir)
    node_names = None
    summary_path = draws_dir / "fit_summary.json"
    if summary_path.exists():
        node_names = json.loads(summary_path.read_text()).get("node_names")
    if node_names is None:
        node_names = [f"node{k}" for k in range(draws.p)]
    fit_mode = manifest.get("config", {}).get("mode", cfg.mode)
    cfg = replace(cfg, mode=fit_mode)
    levels = _parse_levels(cfg, draws.levels.shape[1])
    kappas = _parse_kappas(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = 0
    for x in levels:
        try:
            lv = draws.level_index(x)
        except KeyError as err:
            raise ConfigError(str(err)) from err
        for kappa in kappas:
            est = predict_graph(draws, lv, kappa=kappa, alpha=cfg.alpha)
            tag = f"level{lv}_kappa{kappa:g}_alpha{cfg.alpha:g}"
            doc = eio.graph_to_json(est, node_names, draws.p)
            doc["config_hash"] = manifest["config_hash"]
            eio.write_json(out_dir / f"graph_{tag}.json", doc)
            (out_dir / f"graph_{tag}.dot").write_text(
                eio.graph_to_dot(est, node_names, draws.p))
            written += 1
    print(f"wrote {written} graph document(s) to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def evaluate_fit(draws, truth, kappa_grid=DEFAULT_KAPPA_GRID,
                 alpha_grid=DEFAULT_ALPHA_GRID, op_kappa=0.1,
                 op_alpha=0.1) -> EvalReport:
    """Structure-recovery report for one fitted replicate.

    The normal graph is scored at purity 0, the tumor graph at purity 1;
    both levels must be recorded in the archive.
    """
    edges = sim_truth_edges(truth)
    level_for_graph = {
        "normal": draws.level_index(purity_covariates(0.0)[0]),
        "tumor": draws.level_index(purity_covariates(1.0)[0]),
    }
    points = roc_sweep(draws, edges, level_for_graph, kappa_grid, alpha_grid)
    universe = frozenset(range(draws.n_edge))
    report = EvalReport(roc_points=points)
    for graph in ("normal", "tumor"):
        gp = [pt for pt in points if pt.graph == graph]
        est = predict_graph(draws, level_for_graph[graph], kappa=op_kappa,
                            alpha=op_alpha)
        tpr, fpr = confusion(est.selected, edges[graph], universe)
        auc1, auc2 = best_univariate_aucs(points, graph)
        matched = point_at_fpr(points, graph, 0.1)
        report.graph_metrics[graph] = {
            "tpr": tpr,
            "fpr": fpr,
            "bauc": bauc(gp),
            "auc1": auc1,
            "auc2": auc2,
            "tpr_at_fpr10": matched.tpr,
        }
    return report


def cmd_evaluate(cfg: RunConfig, sim_dir: Path, fit_dir: Path, out_csv: Path) -> int:
    replicates = sorted(sim_dir.glob("replicate_*.csv"))
    if not replicates:
        raise ConfigError(f"no replicates under {sim_dir}")
    rows = []
    per_graph = {"normal": [], "tumor": []}
    kappas = _parse_kappas(cfg)
    op_kappa = kappas[0]
    for r, rep_path in enumerate(replicates):
        truth = eio.load_truth(sim_dir / f"truth_{r:03d}")
        sub = fit_dir / f"fit_{r:03d}"
        if not sub.exists() and len(replicates) == 1:
            sub = fit_dir
        draws, manifest = eio.load_draws(sub)
        rep_report = evaluate_fit(draws, truth, op_kappa=op_kappa,
                                  op_alpha=cfg.alpha)
        seed = manifest["config"].get("seed", "")
        for graph, m in rep_report.graph_metrics.items():
            rows.append(dict(method="edge_regression", graph=graph, replicate=r,
                             seed=seed, **m))
            per_graph[graph].append(m)
    for graph, ms in per_graph.items():
        if not ms:
            continue
        keys = ["tpr", "fpr", "auc1", "auc2", "bauc", "tpr_at_fpr10"]
        mean_row = dict(method="edge_regression_mean", graph=graph,
                        replicate="", seed="")
        sd_row = dict(method="edge_regression_sd", graph=graph,
                      replicate="", seed="")
        for key in keys:
            vals = np.array([m[key] for m in ms])
            mean_row[key] = float(vals.mean())
            sd_row[key] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        rows.append(mean_row)
        rows.append(sd_row)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    eio.write_eval_csv(rows, out_csv)
    print(f"wrote evaluation report to {out_csv}")
    return 0


# ---------------------------------------------------------------------------
# diagnose
# ---------------------------------------------------------------------------


def _collect_traces(draws, records, params_filter=None) -> dict:
    traces = {}
    q, e = draws.beta.shape[1], draws.beta.shape[2]
    for s in range(q):
        for k in range(e):
            traces[f"beta[{s},{k}]"] = draws.beta[:, s, k]
    for i in range(draws.p):
        traces[f"omega[{i}]"] = draws.omega[:, i]
    if records:
        lam = np.array([rec["lambda"] for rec in records])
        for s in range(lam.shape[1]):
            traces[f"lambda[{s}]"] = lam[:, s]
        traces["gamma_sq"] = np.array([rec["gamma_sq"] for rec in records])
    if params_filter:
        keys = [k for k in traces if any(sub in k for sub in params_filter)]
        traces = {k: traces[k] for k in keys}
    return traces


def cmd_diagnose(cfg: RunConfig, fit_dir: Path, out_csv: Path,
                 params: str | None = None) -> int:
    draws, _ = eio.load_draws(fit_dir)
    log_path = fit_dir / "diagnostics.jsonl"
    records = eio.read_diagnostics_log(log_path) if log_path.exists() else []
    filt = [tok.strip() for tok in params.split(",")] if params else None
    traces = _collect_traces(draws, records, filt)
    if not traces:
        raise ConfigError("no traces match the requested parameter filter")
    reports = batch_geweke(traces)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "mean", "sd", "geweke_z", "geweke_p", "ess"])
        for rep in reports:
            writer.writerow([
                rep.parameter,
                repr(rep.mean),
                repr(rep.sd),
                "" if rep.geweke_z is None else repr(rep.geweke_z),
                "" if rep.geweke_p is None else repr(rep.geweke_p),
                "" if rep.ess is None else repr(rep.ess),
            ])
    counts, edges = histogram_bins(reports)
    eio.write_json(out_csv.with_suffix(".hist.json"), {
        "bin_edges": list(map(float, edges)),
        "counts": list(map(int, counts)),
        "n_parameters": len(reports),
    })
    print(f"wrote {len(reports)} trace report(s) to {out_csv}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing / dispatch
# ---------------------------------------------------------------------------


def _add_common(sp):
    sp.add_argument("--config", help="JSON config file (flags override it)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgereg", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate replicate datasets + truth")
    _add_common(sp)
    sp.add_argument("--sim", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--n-reference", dest="n_reference", type=int)
    sp.add_argument("--n-mixed", dest="n_mixed", type=int)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("fit", help="run the sampler on a dataset or directory")
    _add_common(sp)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--mode", choices=("purity", "group", "general"))
    sp.add_argument("--iterations", type=int)
    sp.add_argument("--burn-in", dest="burn_in", type=int)
    sp.add_argument("--thin", type=int)
    sp.add_argument("--levels")
    sp.add_argument("--sigma-lambda", dest="sigma_lambda", type=float)
    sp.add_argument("--store-subject-level", dest="store_subject_level",
                    action="store_const", const=True)
    sp.add_argument("--no-adapt", dest="adapt_sigma_lambda",
                    action="store_const", const=False)
    sp.add_argument("--intercept", action="store_const", const=True)

    sp = sub.add_parser("select", help="emit graph JSON/DOT from an archive")
    _add_common(sp)
    sp.add_argument("--draws", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--kappa")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--levels")

    sp = sub.add_parser("evaluate", help="score fits against ground truth")
    _add_common(sp)
    sp.add_argument("--sim-dir", dest="sim_dir", required=True)
    sp.add_argument("--fit-dir", dest="fit_dir", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--kappa")
    sp.add_argument("--alpha", type=float)

    sp = sub.add_parser("diagnose", help="trace reports from a fitted archive")
    _add_common(sp)
    sp.add_argument("--fit", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--params")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg, Path(args.out))
        if args.command == "fit":
            return cmd_fit(cfg, Path(args.data), Path(args.out))
        if args.command == "select":
            return cmd_select(cfg, Path(args.draws), Path(args.out))
        if args.command == "evaluate":
            return cmd_evaluate(cfg, Path(args.sim_dir), Path(args.fit_dir),
                                Path(args.out))
        if args.command == "diagnose":
            return cmd_diagnose(cfg, Path(args.fit), Path(args.out), args.params)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, eio.ArchiveMismatch) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ChainAbort as err:
        snapshot_path = Path("chain_abort_snapshot.npz")
        if err.state is not None:
            np.savez(snapshot_path, **err.state.snapshot())
            print(f"error: {err} (state snapshot: {snapshot_path})", file=sys.stderr)
        else:
            print(f"error: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
