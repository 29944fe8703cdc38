"""Command-line interface for data generation, training, and experiments.

Every report-producing command writes machine-readable JSON, a rendered text
table, and (where tabular/curved data exists) CSV and PNG figures into the
output directory.
"""

import argparse
import sys
from pathlib import Path

from . import report as rpt
from .checkpoint import load_checkpoint
from .config import ExperimentConfig, config_hash
from .data.manifest import DatasetManifest, load_split_arrays, split_dataset
from .data.synthetic import band_means, generate_synthetic, linear_probe_oa
from .experiments import run_ablation, run_attention_comparison
from .gradcheck import standard_checks
from .model import DFCRNet
from .training import (
    BandStats,
    evaluate_model,
    save_outcome_checkpoint,
    set_determinism,
    train_model,
)


def _add_common(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", required=config_required, help="experiment config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the run seed")
    parser.add_argument(
        "--deterministic", action="store_true",
        help="pin algorithms and omit volatile report fields",
    )
    parser.add_argument("--out", default=None, help="override the output directory")


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config)
    if args.deterministic:
        config.deterministic = True
    if args.out:
        config.output_dir = args.out
    if args.seed is not None:
        config.seeds = (args.seed,)
    return config


def _ensure_manifest(config: ExperimentConfig) -> DatasetManifest:
    """Load the configured manifest, generating the synthetic set if absent."""
    if config.data.manifest:
        return DatasetManifest.load(config.data.manifest)
    manifest_path = Path(config.data.out_dir) / "manifest.json"
    if manifest_path.exists():
        return DatasetManifest.load(manifest_path)
    return _generate(config)


def _generate(config: ExperimentConfig) -> DatasetManifest:
    data = config.data
    manifest = generate_synthetic(
        data.counts, data.tile_size, data.seed, data.out_dir
    )
    split_dataset(manifest, data.fractions, data.seed, data.stratified)
    manifest.save(Path(data.out_dir) / "manifest.json")
    return manifest


def cmd_generate_data(args) -> int:
    config = _load_config(args)
    if args.seed is not None:
        config.data.seed = args.seed
    manifest = _generate(config)
    counts = manifest.split_counts()
    print(f"wrote {len(manifest.entries)} tiles to {config.data.out_dir}")
    print(f"splits: train={counts['train']} val={counts['val']} test={counts['test']}")
    if counts["val"]:
        train_x, train_y = load_split_arrays(manifest, "train")
        val_x, val_y = load_split_arrays(manifest, "val")
        probe = linear_probe_oa(band_means(train_x), train_y, band_means(val_x), val_y)
        print(f"linear probe on band means: OA={probe:.3f}")
    return 0


def cmd_train(args) -> int:
    config = _load_config(args)
    manifest = _ensure_manifest(config)
    seed = config.seeds[0]
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    outcome = train_model(config, seed, manifest)
    save_outcome_checkpoint(out_dir / "checkpoint.dfcr", outcome, config, seed)

    payload = {
        "config_hash": config_hash(config),
        "seed": seed,
        "deterministic": config.deterministic,
        "epochs_run": len(outcome.history.epochs),
        "steps": outcome.steps,
        "best_epoch": outcome.best_epoch,
        "best_val_oa": outcome.best_val_oa,
        "initial_train_loss": outcome.initial_train_loss,
        "final_train_loss": outcome.final_train_loss,
        "val": outcome.val_report.to_dict(),
        "test": outcome.test_report.to_dict(),
        "wall_time_s": None if config.deterministic else outcome.wall_time_s,
    }
    rpt.write_json(out_dir / "report.json", payload)
    table = rpt.render_table(
        ["split"] + rpt.METRIC_HEADERS,
        [
            ["val"] + [f"{100 * getattr(outcome.val_report, k):.2f}" for k in rpt.METRIC_KEYS],
            ["test"] + [f"{100 * getattr(outcome.test_report, k):.2f}" for k in rpt.METRIC_KEYS],
        ],
    )
    (out_dir / "report.txt").write_text(table)
    rpt.write_csv(
        out_dir / "history.csv",
        ["epoch", "train_loss", "val_oa"],
        list(zip(outcome.history.epochs, outcome.history.train_loss, outcome.history.val_oa)),
    )
    rpt.save_training_curves(out_dir / "training_curves.png", outcome.history)
    rpt.save_confusion_figure(
        out_dir / "confusion_matrix.png", outcome.test_report, manifest.class_names
    )
    print(table, end="")
    print(f"checkpoint: {out_dir / 'checkpoint.dfcr'}")
    return 0


def cmd_evaluate(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    config = ExperimentConfig.from_dict(ckpt.config)
    if args.deterministic:
        config.deterministic = True
    set_determinism(ckpt.seed, config.deterministic)
    model = DFCRNet(config.model)
    model.load_state_dict(ckpt.state_dict)

    if args.manifest:
        manifest = DatasetManifest.load(args.manifest)
    else:
        manifest = _ensure_manifest(config)
    images, labels = load_split_arrays(manifest, args.split)
    stats = BandStats(mean=ckpt.extra["band_mean"], std=ckpt.extra["band_std"])
    report = evaluate_model(model, stats.apply(images), labels)

    out_dir = Path(args.out or config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = rpt.evaluation_payload(report, args.split, ckpt.extra.get("config_hash", ""))
    rpt.write_json(out_dir / f"evaluation_{args.split}.json", payload)
    table = rpt.render_table(
        ["split"] + rpt.METRIC_HEADERS,
        [[args.split] + [f"{100 * getattr(report, k):.2f}" for k in rpt.METRIC_KEYS]],
    )
    (out_dir / f"evaluation_{args.split}.txt").write_text(table)
    rpt.save_confusion_figure(
        out_dir / f"confusion_{args.split}.png", report, manifest.class_names
    )
    print(table, end="")
    return 0


def _toggle_cell(flag: bool) -> str:
    return "x" if flag else ""


def cmd_ablate(args) -> int:
    config = _load_config(args)
    manifest = _ensure_manifest(config)
    result = run_ablation(config, manifest)

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rpt.write_json(out_dir / "ablation.json", result.to_dict())
    headers = ["Model", "GCAM", "CDLM+LFEM", "DFD"] + rpt.METRIC_HEADERS
    rows = []
    for i, row in enumerate(result.rows, start=1):
        rows.append(
            [str(i), _toggle_cell(row["gcam"]), _toggle_cell(row["cdlm_lfem"]),
             _toggle_cell(row["dfwfm"])] + rpt.run_report_row(row["report"])
        )
    table = rpt.render_table(headers, rows)
    (out_dir / "ablation.txt").write_text(table)
    rpt.write_csv(out_dir / "ablation.csv", headers, rows)
    labels = ["+".join(
        n for n, f in (("GCAM", r["gcam"]), ("CDLM/LFEM", r["cdlm_lfem"]), ("DFD", r["dfwfm"])) if f
    ) or "baseline" for r in result.rows]
    rpt.save_bar_figure(out_dir / "ablation_oa.png", labels, [r["report"] for r in result.rows])
    print(table, end="")
    return 0


def cmd_compare_attention(args) -> int:
    config = _load_config(args)
    manifest = _ensure_manifest(config)
    result = run_attention_comparison(config, manifest)

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rpt.write_json(out_dir / "attention_comparison.json", result.to_dict())
    headers = ["Attention", "Non-attn params"] + rpt.METRIC_HEADERS
    rows = [
        [row["attention"], str(result.non_attention_parameters[row["attention"]])]
        + rpt.run_report_row(row["report"])
        for row in result.rows
    ]
    table = rpt.render_table(headers, rows)
    (out_dir / "attention_comparison.txt").write_text(table)
    rpt.write_csv(out_dir / "attention_comparison.csv", headers, rows)
    rpt.save_bar_figure(
        out_dir / "attention_oa.png",
        [r["attention"] for r in result.rows],
        [r["report"] for r in result.rows],
    )
    print(table, end="")
    return 0


def cmd_gradcheck(args) -> int:
    modules = args.modules.split(",") if args.modules else None
    results = standard_checks(tolerance=args.tolerance, modules=modules)
    for result in results:
        print(result.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dfcrnet",
        description="dual-branch collaborative representation scene classifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="write the synthetic tile set and manifest")
    _add_common(p)
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("train", help="train one model and write checkpoint + report")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on one split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--manifest", default=None)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run the six-row module ablation")
    _add_common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("compare-attention", help="run the four attention variants")
    _add_common(p)
    p.set_defaults(func=cmd_compare_attention)

    p = sub.add_parser("gradcheck", help="finite-difference verification of gradients")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--modules", default=None, help="comma list: gcam,cdlm,lfem,dfwfm,model")
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
