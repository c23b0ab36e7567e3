"""Pipeline orchestration: generate -> score -> train/eval -> correlate.

Each stage reads its inputs from the run's output directory and writes its
own artifacts there, so stages are independently resumable: delete one table
and rerun its stage to reproduce it bit-for-bit.  Every table carries a
comment header with the global seed and the config digest, contains no
timestamps, and formats floats with shortest round-trip repr, which makes a
rerun from the same config byte-identical.

Per-circuit work derives its seed from (global seed, circuit id), so fanning
circuits out over worker processes cannot change any result.
"""
from __future__ import annotations

import concurrent.futures
import csv
import json
import os
from pathlib import Path
from typing import Optional

from .circuits import (
    DeviceModel,
    GeneratorConfig,
    generate_candidates,
    load_device,
    load_genome,
    save_genome,
)
from .config import RunConfig
from .data import (
    Dataset,
    load_dataset,
    make_synthetic,
    preprocess_classification,
    preprocess_regression,
    save_dataset,
    select_scoring_subset,
)
from .metrics import MetricReport, classification_metrics, correlation_report, regression_metrics
from .scoring import CLASSIFICATION_VARIANTS, ScoreCard, ScoringConfig, score_circuit_variants
from .seeding import spawn_seed
from .training import TrainConfig, predict_batch, train

CLASSIFICATION_METRIC_NAMES = ("mse", "accuracy", "f1", "pr_auc")
REGRESSION_METRIC_NAMES = ("mse", "spearman_r")


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name for error reporting."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


def _fmt(value: float) -> str:
    return repr(float(value))


def write_table(path: Path, header: list[str], rows: list[list[str]], seed: int, digest: str) -> None:
    """Write a delimited table atomically with the seed/digest comment line."""
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# seed={seed} digest={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)


def read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: empty table")
    return rows[0], rows[1:]


def circuit_id(index: int) -> str:
    return f"c{index:04d}"


def _circuit_seed(config: RunConfig, cid: str) -> int:
    return spawn_seed(config.seed, "circuit", cid)


def _out(config: RunConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def load_run_device(config: RunConfig) -> DeviceModel:
    if not Path(config.device).exists():
        raise StageError("setup", f"device file not found: {config.device}")
    return load_device(config.device)


def ensure_dataset(config: RunConfig) -> Dataset:
    """Materialize the run's dataset at out/dataset.csv and load it back.

    Always reloading from the materialized file keeps the synthetic-build and
    resume paths numerically identical.
    """
    out = _out(config)
    target = out / "dataset.csv"
    task = config.dataset.task
    if not target.exists():
        meta: dict = {"task": task}
        if config.dataset.synthetic is not None:
            spec = config.dataset.synthetic
            dataset = make_synthetic(
                task,
                d=spec.d,
                n_features=spec.n_features,
                imbalance_ratio=spec.imbalance_ratio,
                noise_level=spec.noise_level,
                seed=spawn_seed(config.seed, "dataset"),
                train_fraction=spec.train_fraction,
            )
        else:
            src = Path(config.dataset.path)
            if not src.exists():
                raise StageError("setup", f"dataset file not found: {src}")
            raw = load_dataset(src)
            if config.dataset.preprocess:
                if task == "classification":
                    dataset = preprocess_classification(raw.labels, raw.features, raw.split)
                else:
                    dataset, scaler, n_clamped = preprocess_regression(
                        raw.labels, raw.features, raw.split
                    )
                    meta["target_scaler"] = {"min": scaler.train_min, "max": scaler.train_max}
                    meta["clamped_test_rows"] = n_clamped
            else:
                dataset = load_dataset(src, task_kind=task)
        save_dataset(dataset, target)
        meta.update(
            rows=int(dataset.features.shape[0]),
            n_features=int(dataset.n_features),
            train_rows=int(dataset.rows("train").size),
            test_rows=int(dataset.rows("test").size),
        )
        with open(out / "dataset_meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return load_dataset(target, task_kind=task)


def stage_generate(config: RunConfig) -> list[dict]:
    """Write one genome file per candidate plus the manifest; returns manifest rows."""
    device = load_run_device(config)
    dataset = ensure_dataset(config)
    gen_config = GeneratorConfig(
        n_candidates=config.generator.n_candidates,
        gate_budget=config.generator.gate_budget,
        embed_fraction=config.generator.embed_fraction,
        trainable_fraction=config.generator.trainable_fraction,
        entangle_fraction=config.generator.entangle_fraction,
        n_features=dataset.n_features,
        seed=spawn_seed(config.seed, "generate"),
    )
    try:
        genomes = generate_candidates(device, gen_config)
    except ValueError as exc:
        raise StageError("generate", str(exc)) from exc
    out = _out(config)
    (out / "genomes").mkdir(exist_ok=True)
    digest = config.science_digest()
    manifest_rows = []
    for i, genome in enumerate(genomes):
        cid = circuit_id(i)
        rel = f"genomes/{cid}.genome"
        (out / rel).write_text(save_genome(genome), encoding="utf-8")
        manifest_rows.append(
            {
                "circuit_id": cid,
                "file": rel,
                "seed": _circuit_seed(config, cid),
                "config_digest": digest,
            }
        )
    write_table(
        out / "manifest.csv",
        ["circuit_id", "file", "seed", "config_digest"],
        [[r["circuit_id"], r["file"], str(r["seed"]), r["config_digest"]] for r in manifest_rows],
        config.seed,
        digest,
    )
    return manifest_rows


def read_manifest(config: RunConfig, stage: str = "score") -> list[tuple[str, Path, int]]:
    out = _out(config)
    path = out / "manifest.csv"
    if not path.exists():
        raise StageError(stage, f"manifest not found at {path}; run generate first")
    _, rows = read_table(path)
    entries = []
    for row in rows:
        cid, rel, seed = row[0], row[1], int(row[2])
        genome_path = out / rel
        if not genome_path.exists():
            raise StageError(stage, f"genome file missing: {genome_path}")
        entries.append((cid, genome_path, seed))
    return entries


def _score_worker(args) -> dict[str, ScoreCard]:
    cid, genome_text, device, feats, labels, configs, seed = args
    genome = load_genome(genome_text)
    return score_circuit_variants(cid, genome, device, feats, labels, configs, seed)


def stage_score(
    config: RunConfig,
    variants: Optional[list[str]] = None,
    jobs: int = 1,
) -> dict[str, list[ScoreCard]]:
    """Score every manifest circuit under each configured variant.

    One scorecard table per variant (scorecards_<variant>.csv); rows are
    written sorted by circuit id through a single writer regardless of jobs.
    """
    device = load_run_device(config)
    dataset = ensure_dataset(config)
    entries = read_manifest(config)
    variants = variants or config.scoring.variants
    task = config.dataset.task
    for variant in variants:
        family = "classification" if variant in CLASSIFICATION_VARIANTS else "regression"
        if family != task:
            raise StageError(
                "score", f"variant {variant!r} is a {family} score but the dataset task is {task!r}"
            )
    subset_rows = select_scoring_subset(
        dataset, config.scoring.subset_size, spawn_seed(config.seed, "subset")
    )
    feats = dataset.features[subset_rows]
    labels = dataset.labels[subset_rows]
    out = _out(config)
    variant_configs: dict[str, tuple[ScoringConfig, str]] = {}
    for variant in variants:
        sc_config = ScoringConfig(
            variant=variant,
            subset_size=config.scoring.subset_size,
            n_param_draws=config.scoring.n_param_draws,
            alpha=config.scoring.alpha,
            n_replicas=config.scoring.n_replicas,
            sigma=config.scoring.sigma,
        )
        variant_configs[variant] = (sc_config, sc_config.digest(config.seed))
    tasks = [
        (
            cid,
            genome_path.read_text(encoding="utf-8"),
            device,
            feats,
            labels,
            variant_configs,
            spawn_seed(seed, "score"),
        )
        for cid, genome_path, seed in entries
    ]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            per_circuit = list(pool.map(_score_worker, tasks))
    else:
        per_circuit = [_score_worker(t) for t in tasks]
    results: dict[str, list[ScoreCard]] = {}
    for variant in variants:
        cards = sorted((by_variant[variant] for by_variant in per_circuit), key=lambda c: c.circuit_id)
        write_table(
            out / f"scorecards_{variant}.csv",
            ["circuit_id", "cnr", "repcap", "final_score", "config_digest"],
            [[c.circuit_id, _fmt(c.cnr), _fmt(c.repcap), _fmt(c.final_score), c.config_digest] for c in cards],
            config.seed,
            variant_configs[variant][1],
        )
        results[variant] = cards
    return results


def read_scorecards(config: RunConfig, variant: str, stage: str = "correlate") -> dict[str, float]:
    """Final scores by circuit id from a variant's scorecard table."""
    path = _out(config) / f"scorecards_{variant}.csv"
    if not path.exists():
        raise StageError(stage, f"scorecards not found at {path}; run score first")
    _, rows = read_table(path)
    return {row[0]: float(row[3]) for row in rows}


def _train_worker(args) -> tuple[str, str, Optional[MetricReport], list[float], list[float]]:
    """Returns (circuit_id, status, report_or_none, loss_trace, params)."""
    cid, genome_text, task, train_feats, train_targets, test_feats, test_targets, tc = args
    try:
        genome = load_genome(genome_text)
        report = train(genome, train_feats, train_targets, tc)
        preds = predict_batch(genome, report.params, test_feats, tc.measurement_qubits)
        if task == "classification":
            metric = classification_metrics(preds, test_targets)
        else:
            metric = regression_metrics(preds, test_targets)
        return cid, "ok", metric, report.loss_trace, [float(p) for p in report.params]
    except Exception as exc:  # per-circuit isolation: a sweep must survive pathologies
        return cid, f"error: {exc}", None, [], []


def stage_train_eval(
    config: RunConfig,
    top_k: Optional[int] = None,
    variant: Optional[str] = None,
    jobs: int = 1,
) -> list[dict]:
    """Train selected circuits and evaluate them on the test split.

    top_k = None trains every circuit in the manifest; otherwise the top k by
    final score under ``variant`` (default: first configured variant).
    """
    dataset = ensure_dataset(config)
    entries = read_manifest(config, stage="train-eval")
    task = config.dataset.task
    if top_k is not None:
        variant = variant or config.scoring.variants[0]
        scores = read_scorecards(config, variant, stage="train-eval")
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        keep = {cid for cid, _ in ranked[:top_k]}
        entries = [e for e in entries if e[0] in keep]
    train_rows = dataset.rows("train")
    test_rows = dataset.rows("test")
    if train_rows.size == 0 or test_rows.size == 0:
        raise StageError("train-eval", "dataset needs both train and test rows")
    out = _out(config)
    (out / "reports").mkdir(exist_ok=True)
    metric_names = CLASSIFICATION_METRIC_NAMES if task == "classification" else REGRESSION_METRIC_NAMES
    tasks = []
    for cid, genome_path, seed in entries:
        tc = TrainConfig(
            epochs=config.training.epochs,
            batch_size=config.training.batch_size,
            learning_rate=config.training.learning_rate,
            measurement_qubits=tuple(config.training.measurement_qubits),
            seed=spawn_seed(seed, "train"),
        )
        tasks.append(
            (
                cid,
                genome_path.read_text(encoding="utf-8"),
                task,
                dataset.features[train_rows],
                dataset.labels[train_rows],
                dataset.features[test_rows],
                dataset.labels[test_rows],
                tc,
            )
        )
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_train_worker, tasks))
    else:
        outcomes = [_train_worker(t) for t in tasks]
    outcomes.sort(key=lambda o: o[0])
    digest = config.science_digest()
    rows = []
    summaries = []
    for cid, status, metric, trace, params in outcomes:
        if metric is not None:
            values = [_fmt(metric.get(name)) for name in metric_names]
            write_table(
                out / "reports" / f"{cid}_trace.csv",
                ["epoch", "loss"],
                [[str(e), _fmt(l)] for e, l in enumerate(trace)],
                config.seed,
                digest,
            )
            write_table(
                out / "reports" / f"{cid}_params.csv",
                ["param_slot", "value"],
                [[str(i), _fmt(p)] for i, p in enumerate(params)],
                config.seed,
                digest,
            )
        else:
            values = [""] * len(metric_names)
        rows.append([cid, status] + values)
        summary = {"circuit_id": cid, "status": status}
        if metric is not None:
            summary.update({name: metric.get(name) for name in metric_names})
        summaries.append(summary)
    write_table(
        out / "metrics.csv",
        ["circuit_id", "status"] + list(metric_names),
        rows,
        config.seed,
        digest,
    )
    return summaries


def read_metrics(config: RunConfig) -> dict[str, dict[str, float]]:
    path = _out(config) / "metrics.csv"
    if not path.exists():
        raise StageError("correlate", f"metrics not found at {path}; run train-eval first")
    header, rows = read_table(path)
    names = header[2:]
    table: dict[str, dict[str, float]] = {}
    for row in rows:
        if row[1] != "ok":
            continue
        table[row[0]] = {name: float(v) for name, v in zip(names, row[2:])}
    return table


def stage_correlate(
    config: RunConfig,
    metric_names: Optional[list[str]] = None,
    variants: Optional[list[str]] = None,
) -> list[dict]:
    """Spearman rho between final scores and test metrics, per variant.

    Writes correlation_<metric>.csv plus per-variant scatter data and a
    standalone SVG scatter for each (variant, metric) pair.
    """
    variants = variants or config.scoring.variants
    task = config.dataset.task
    if metric_names is None:
        metric_names = ["mse", "pr_auc"] if task == "classification" else ["mse", "spearman_r"]
    metric_table = read_metrics(config)
    scores_by_variant = {v: read_scorecards(config, v) for v in variants}
    out = _out(config)
    digest = config.science_digest()
    results = []
    for metric_name in metric_names:
        metric_values = {
            cid: vals[metric_name] for cid, vals in metric_table.items() if metric_name in vals
        }
        try:
            rows, scatter = correlation_report(scores_by_variant, metric_values, metric_name)
        except ValueError as exc:
            raise StageError("correlate", str(exc)) from exc
        write_table(
            out / f"correlation_{metric_name}.csv",
            ["variant", "metric", "spearman_rho", "n_circuits"],
            [[r.variant, r.metric, _fmt(r.rho), str(r.n_circuits)] for r in rows],
            config.seed,
            digest,
        )
        for row in rows:
            pairs = scatter[row.variant]
            write_table(
                out / f"scatter_{row.variant}_{metric_name}.csv",
                ["circuit_id", "final_score", metric_name],
                [[cid, _fmt(s), _fmt(m)] for cid, s, m in pairs],
                config.seed,
                digest,
            )
            svg = scatter_svg(
                [(s, m) for _, s, m in pairs],
                xlabel=f"final score ({row.variant})",
                ylabel=metric_name,
                title=f"rho = {row.rho:.4f} (n = {row.n_circuits})",
            )
            (out / f"scatter_{row.variant}_{metric_name}.svg").write_text(svg, encoding="utf-8")
            results.append(
                {
                    "variant": row.variant,
                    "metric": metric_name,
                    "rho": row.rho,
                    "n_circuits": row.n_circuits,
                }
            )
    return results


def run_pipeline(
    config: RunConfig,
    top_k: Optional[int] = None,
    variant: Optional[str] = None,
    metric_names: Optional[list[str]] = None,
    jobs: int = 1,
) -> dict:
    manifest = stage_generate(config)
    scorecards = stage_score(config, jobs=jobs)
    metrics = stage_train_eval(config, top_k=top_k, variant=variant, jobs=jobs)
    correlations = stage_correlate(config, metric_names=metric_names)
    return {
        "n_circuits": len(manifest),
        "variants": sorted(scorecards),
        "n_trained": sum(1 for m in metrics if m["status"] == "ok"),
        "correlations": correlations,
    }


def scatter_svg(points: list[tuple[float, float]], xlabel: str, ylabel: str, title: str) -> str:
    """Minimal deterministic SVG scatter plot (no plotting dependency)."""
    width, height = 480, 360
    ml, mr, mt, mb = 60, 16, 28, 44
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_pad = (x_hi - x_lo) * 0.05 or 0.5
    y_pad = (y_hi - y_lo) * 0.05 or 0.5
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def sx(v: float) -> float:
        return ml + (v - x_lo) / (x_hi - x_lo) * (width - ml - mr)

    def sy(v: float) -> float:
        return height - mb - (v - y_lo) / (y_hi - y_lo) * (height - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="16" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif">{title}</text>',
    ]
    # axes
    parts.append(
        f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" '
        f'stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black" stroke-width="1"/>'
    )
    for i in range(5):
        fx = x_lo + (x_hi - x_lo) * i / 4
        fy = y_lo + (y_hi - y_lo) * i / 4
        px, py = sx(fx), sy(fy)
        parts.append(
            f'<line x1="{px:.1f}" y1="{height - mb}" x2="{px:.1f}" y2="{height - mb + 4}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px:.1f}" y="{height - mb + 16}" text-anchor="middle" font-size="9" '
            f'font-family="sans-serif">{fx:.3g}</text>'
        )
        parts.append(f'<line x1="{ml - 4}" y1="{py:.1f}" x2="{ml}" y2="{py:.1f}" stroke="black"/>')
        parts.append(
            f'<text x="{ml - 6}" y="{py + 3:.1f}" text-anchor="end" font-size="9" '
            f'font-family="sans-serif">{fy:.3g}</text>'
        )
    parts.append(
        f'<text x="{(ml + width - mr) / 2:.1f}" y="{height - 8}" text-anchor="middle" '
        f'font-size="11" font-family="sans-serif">{xlabel}</text>'
    )
    parts.append(
        f'<text x="14" y="{(mt + height - mb) / 2:.1f}" text-anchor="middle" font-size="11" '
        f'font-family="sans-serif" transform="rotate(-90 14 {(mt + height - mb) / 2:.1f})">{ylabel}</text>'
    )
    for x, y in points:
        parts.append(
            f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="#1f77b4" fill-opacity="0.75"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
