"""Command-line entry point.

Subcommands: ``generate`` (write a benchmark dataset directory plus its
validation report), ``cluster`` (centralized fit), ``fedrun`` (federated
simulation), ``ablate`` (distance-transform comparison), ``evaluate``
(standalone metrics over saved label files). Every command takes
``--config``; ``--seed`` and ``--out`` override the config in place.
Reports embed their config, so a report path re-runs its experiment.

Exit codes: 0 success, 1 validation/config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import figures, metrics, report as reporting
from .config import ConfigError, ExperimentConfig, parse_config, render_config
from .dataset import MultiViewDataset, load_dataset, save_dataset
from .federation import (
    CertificationError,
    FedConfig,
    payload_bytes,
    pooled_predictions,
    prepare_and_validate,
    run_federation,
)
from .solver import ClusterConfig, fit, dataset_coeffs, per_view_labels
from .synthgen import assemble_benchmark, load_iris_two_view, partition_federated, validate_generated

log = logging.getLogger("fedheat")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = os.environ.get("FEDHEAT_LOG", "warn").lower()
    if level not in _LOG_LEVELS:
        level = "warn"
    logging.basicConfig(level=_LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s")


def _resolve_dataset(cfg: ExperimentConfig) -> tuple[MultiViewDataset, object | None]:
    """Dataset for a consuming command; iris also carries its canonical split."""
    if cfg.dataset_source == "path":
        return load_dataset(cfg.dataset_path), None
    if cfg.dataset_source == "iris":
        dataset, split = load_iris_two_view(cfg.seed)
        return dataset, split
    return assemble_benchmark(cfg.n_per_cluster, cfg.noise_scale, cfg.seed), None


def _rep_cluster_config(cfg: ExperimentConfig, rep: int) -> ClusterConfig:
    base = cfg.cluster
    return ClusterConfig(
        c=base.c, m=base.m, alpha=base.alpha, epsilon=base.epsilon, t_max=base.t_max,
        seed=base.seed + rep, init=base.init, hkc_type=base.hkc_type, hkc_eps=base.hkc_eps,
        recompute_hkc_per_iter=base.recompute_hkc_per_iter, distance=base.distance,
    )


def _mean_std_lines(name: str, values: list[float]) -> list[str]:
    arr = np.asarray(values, dtype=float)
    return [
        f"{name}.mean: {float(arr.mean())!r}",
        f"{name}.std: {float(arr.std())!r}",
    ]


def cmd_generate(cfg: ExperimentConfig, out_dir: str) -> int:
    started = time.perf_counter()
    lines: list[str] = []
    if cfg.dataset_source == "path":
        raise ConfigError("generate needs dataset.source = synthetic or iris, not path")
    if cfg.dataset_source == "iris":
        dataset, split = load_iris_two_view(cfg.seed)
        lines.append("dataset: iris-two-view")
        lines.append(f"split_sizes: {','.join(str(ix.size) for ix in split.client_indices)}")
        passed = True
        lines.append("validation: skipped (shape templates apply to synthetic data only)")
    else:
        dataset = assemble_benchmark(cfg.n_per_cluster, cfg.noise_scale, cfg.seed)
        validation = validate_generated(dataset)
        passed = validation.passed
        lines.append("dataset: synthetic-benchmark")
        lines.extend("validation." + line for line in validation.lines())
    data_dir = os.path.join(out_dir, "dataset")
    save_dataset(dataset, data_dir)
    lines.append(f"n: {dataset.n_samples}")
    lines.append(f"views: {dataset.n_views}")
    figures.save_dataset_views(dataset, os.path.join(out_dir, ""))
    reporting.write_report(
        os.path.join(out_dir, "report.txt"), "generate", render_config(cfg), cfg.seed,
        lines, time.perf_counter() - started,
    )
    if not passed:
        log.error("generated dataset failed validation, see report")
        return 1
    return 0


def _evaluate_model(dataset, model, cluster_cfg):
    pred = model.labels
    features = np.concatenate(dataset.views, axis=1)
    coeffs = dataset_coeffs(dataset, cluster_cfg)
    per_view = per_view_labels(dataset, model, coeffs, cluster_cfg)
    return metrics.full_report(
        pred, dataset.labels, features=features, per_view=per_view, c=cluster_cfg.c
    )


def cmd_cluster(cfg: ExperimentConfig, out_dir: str) -> int:
    started = time.perf_counter()
    dataset, _ = _resolve_dataset(cfg)
    lines: list[str] = [f"n: {dataset.n_samples}", f"views: {dataset.n_views}"]
    tracked: dict[str, list[float]] = {}
    first_model = None
    for rep in range(cfg.repetitions):
        rep_cfg = _rep_cluster_config(cfg, rep)
        rep_start = time.perf_counter()
        model = fit(dataset, rep_cfg)
        runtime = time.perf_counter() - rep_start
        if first_model is None:
            first_model = model
        rep_report = _evaluate_model(dataset, model, rep_cfg)
        lines.append(f"rep {rep} (seed {rep_cfg.seed}):")
        lines.append(f"  iterations: {model.iterations}")
        lines.append(f"  objective_final: {float(model.objective_history[-1])!r}")
        lines.append(f"  view_weights: {','.join(repr(float(w)) for w in model.weights)}")
        lines.extend("  " + line for line in rep_report.lines())
        if model.diagnostics:
            lines.append(f"  diagnostics: {len(model.diagnostics)} degenerate-cluster events")
        log.info("rep %d runtime %.2fs", rep, runtime)
        for name in metrics.MetricReport.FIELDS:
            value = getattr(rep_report, name)
            if value is not None:
                tracked.setdefault(name, []).append(value)
    for name, values in tracked.items():
        lines.extend(_mean_std_lines(f"metric.{name}", values))
    lines.append("objective_history_file: history.csv")
    lines.append("predictions_file: predictions.csv")
    reporting.write_csv(
        os.path.join(out_dir, "history.csv"), ["iteration", "objective"],
        [[i + 1, j] for i, j in enumerate(first_model.objective_history)],
    )
    reporting.write_labels(os.path.join(out_dir, "predictions.csv"), first_model.labels)
    figures.save_objective_history(first_model.objective_history, os.path.join(out_dir, "objective.png"))
    if dataset.labels is not None:
        counts, _ = metrics.confusion_matrix(first_model.labels, dataset.labels)
        figures.save_confusion(counts, os.path.join(out_dir, "confusion.png"))
    reporting.write_report(
        os.path.join(out_dir, "report.txt"), "cluster", render_config(cfg), cfg.seed,
        lines, time.perf_counter() - started,
    )
    return 0


def cmd_fedrun(cfg: ExperimentConfig, out_dir: str) -> int:
    started = time.perf_counter()
    dataset, canonical_split = _resolve_dataset(cfg)
    split = canonical_split or partition_federated(dataset, cfg.fractions, cfg.seed)
    client_datasets = [dataset.subset(ix) for ix in split.client_indices]
    lines: list[str] = [
        f"n: {dataset.n_samples}",
        f"clients: {split.n_clients}",
        f"client_sizes: {','.join(str(ix.size) for ix in split.client_indices)}",
    ]
    if split.n_clients >= 2 and cfg.values["federation"]["certify"]:
        client_datasets, certification = prepare_and_validate(
            client_datasets,
            [cfg.cluster.c] * split.n_clients,
            eta_min=cfg.values["federation"]["eta_min"],
            xi_min=cfg.values["federation"]["xi_min"],
        )
        lines.append(f"certification.eta_global: {certification['eta_global']!r}")
        lines.append(f"certification.xi_global: {certification['xi_global']!r}")
        lines.append(f"certification.outlier_flags: {certification['outlier_flags']}")
    features = np.concatenate(dataset.views, axis=1)
    expected_payload = payload_bytes(cfg.cluster.c, dataset.dims) * split.n_clients
    first_result = None
    first_pred = None
    tracked: dict[str, list[float]] = {}
    for rep in range(cfg.repetitions):
        fed_cfg = FedConfig(
            cluster=_rep_cluster_config(cfg, rep), privacy=cfg.privacy, **cfg.fed_extras
        )
        result = run_federation(client_datasets, fed_cfg)
        pred = pooled_predictions(result, split.client_indices, dataset.n_samples)
        rep_report = metrics.full_report(pred, dataset.labels, features=features)
        if first_result is None:
            first_result, first_pred = result, pred
        lines.append(f"rep {rep} (seed {cfg.seed + rep}):")
        lines.append(f"  rounds_run: {len(result.round_log)}")
        lines.append(f"  converged_round: {result.converged_round}")
        lines.append(
            f"  global_view_weights: {','.join(repr(float(w)) for w in result.global_model.weights)}"
        )
        for state in result.clients:
            lines.append(
                f"  client {state.client_id}: n {state.n_samples}"
                f" objective_final {float(state.objective_history[-1])!r}"
                f" gamma {state.gamma!r} rho {state.rho!r}"
            )
        lines.extend("  " + line for line in rep_report.lines())
        for name in metrics.MetricReport.FIELDS:
            value = getattr(rep_report, name)
            if value is not None:
                tracked.setdefault(name, []).append(value)
    for name, values in tracked.items():
        lines.extend(_mean_std_lines(f"metric.{name}", values))
    lines.append(f"payload_bytes_per_round: {expected_payload}")
    lines.append("round_log_file: rounds.csv")
    lines.append("predictions_file: predictions.csv")
    rounds_rows = []
    client_ids = sorted(first_result.round_log[0]["client_objectives"])
    for rec in first_result.round_log:
        row = [rec["round"]]
        row.extend(rec["client_objectives"][cid] for cid in client_ids)
        row.extend([rec["payload_bytes"], rec["converged"]])
        rounds_rows.append(row)
    reporting.write_csv(
        os.path.join(out_dir, "rounds.csv"),
        ["round"] + [f"client_{cid}_objective" for cid in client_ids] + ["payload_bytes", "converged"],
        rounds_rows,
    )
    reporting.write_labels(os.path.join(out_dir, "predictions.csv"), first_pred)
    figures.save_round_trace(first_result.round_log, os.path.join(out_dir, "rounds.png"))
    if dataset.labels is not None:
        counts, _ = metrics.confusion_matrix(first_pred, dataset.labels)
        figures.save_confusion(counts, os.path.join(out_dir, "confusion.png"))
    reporting.write_report(
        os.path.join(out_dir, "report.txt"), "fedrun", render_config(cfg), cfg.seed,
        lines, time.perf_counter() - started,
    )
    return 0


_ABLATION_ROWS = (
    ("euclidean", "squared_euclidean", "minmax"),
    ("hkc_type1_minmax", "heat_kernel", "minmax"),
    ("hkc_type2_meandev", "heat_kernel", "meandev"),
)


def cmd_ablate(cfg: ExperimentConfig, out_dir: str) -> int:
    started = time.perf_counter()
    dataset, _ = _resolve_dataset(cfg)
    if dataset.labels is None:
        raise ConfigError("ablation needs a labeled dataset")
    keep = np.isin(dataset.labels, cfg.ablate_subset)
    if not keep.any():
        raise ConfigError(f"subset labels {cfg.ablate_subset} select no samples")
    sub = dataset.subset(np.flatnonzero(keep))
    relabel = {old: new for new, old in enumerate(sorted(set(cfg.ablate_subset)))}
    sub.labels = np.array([relabel[y] for y in sub.labels])
    c = len(relabel)
    lines = [f"subset_labels: {','.join(str(v) for v in cfg.ablate_subset)}", f"n_subset: {sub.n_samples}"]
    rows = []
    for name, distance, hkc in _ABLATION_ROWS:
        accs, nmis, runtimes = [], [], []
        for rep in range(cfg.repetitions):
            run_cfg = ClusterConfig(
                c=c, m=cfg.cluster.m, alpha=cfg.cluster.alpha, epsilon=cfg.cluster.epsilon,
                t_max=cfg.cluster.t_max, seed=cfg.seed + rep, init=cfg.cluster.init,
                hkc_type=hkc, hkc_eps=cfg.cluster.hkc_eps, distance=distance,
            )
            rep_start = time.perf_counter()
            model = fit(sub, run_cfg)
            runtimes.append(time.perf_counter() - rep_start)
            accs.append(metrics.accuracy_matched(model.labels, sub.labels))
            nmis.append(metrics.nmi(model.labels, sub.labels))
        row = {
            "estimator": name,
            "accuracy": float(np.mean(accs)),
            "nmi": float(np.mean(nmis)),
            "runtime_s": float(np.mean(runtimes)),
        }
        rows.append(row)
        lines.append(
            f"{name}: accuracy {row['accuracy']!r} nmi {row['nmi']!r} runtime_s {row['runtime_s']:.3f}"
        )
    reporting.write_csv(
        os.path.join(out_dir, "ablation.csv"),
        ["estimator", "accuracy", "nmi", "runtime_s"],
        [[r["estimator"], r["accuracy"], r["nmi"], round(r["runtime_s"], 6)] for r in rows],
    )
    figures.save_ablation(rows, os.path.join(out_dir, "ablation.png"))
    reporting.write_report(
        os.path.join(out_dir, "report.txt"), "ablate", render_config(cfg), cfg.seed,
        lines, time.perf_counter() - started,
    )
    return 0


def cmd_evaluate(cfg: ExperimentConfig, out_dir: str) -> int:
    started = time.perf_counter()
    if not cfg.evaluate_predictions or not cfg.evaluate_labels:
        raise ConfigError("evaluate needs [evaluate] predictions and labels paths")
    try:
        pred = reporting.read_labels(cfg.evaluate_predictions)
        truth = reporting.read_labels(cfg.evaluate_labels)
    except OSError as exc:
        raise ConfigError(f"cannot read label file: {exc}") from exc
    if len(pred) != len(truth):
        raise ConfigError(f"length mismatch: {len(pred)} predictions vs {len(truth)} labels")
    full = metrics.full_report(pred, truth)
    lines = [f"n: {len(pred)}"]
    lines.extend(full.lines())
    counts, _ = metrics.confusion_matrix(pred, truth)
    figures.save_confusion(counts, os.path.join(out_dir, "confusion.png"))
    reporting.write_report(
        os.path.join(out_dir, "report.txt"), "evaluate", render_config(cfg), cfg.seed,
        lines, time.perf_counter() - started,
    )
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "cluster": cmd_cluster,
    "fedrun": cmd_fedrun,
    "ablate": cmd_ablate,
    "evaluate": cmd_evaluate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedheat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="config file or emitted report")
        cmd.add_argument("--seed", type=int, default=None, help="override run.seed")
        cmd.add_argument("--out", default=None, help="output directory (does not affect numerics)")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.values["run"]["seed"] = args.seed
            cfg.cluster.seed = args.seed
        out_dir = args.out if args.out is not None else cfg.out_dir
        os.makedirs(out_dir, exist_ok=True)
        return _COMMANDS[args.command](cfg, out_dir)
    except (ConfigError, CertificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit code 2
        log.exception("command failed")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
