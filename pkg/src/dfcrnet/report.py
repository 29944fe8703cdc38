"""Report rendering: JSON, text tables, CSV, and matplotlib figures.

Every report path writes the machine-readable JSON next to a rendered text
table; tabular results additionally get a CSV and a PNG figure. JSON is
serialized with sorted keys so deterministic runs produce byte-identical
files.
"""

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import MetricsReport  # noqa: E402


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def render_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path: str | Path, headers: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        writer.writerows(rows)


def mean_std_cell(entry: dict) -> str:
    if entry.get("std") is None:
        return f"{100 * entry['mean']:.2f}"
    return f"{100 * entry['mean']:.2f}±{100 * entry['std']:.2f}"


METRIC_HEADERS = ["OA(%)", "Precision(%)", "Recall(%)", "F1-Macro(%)", "Kappa(%)"]
METRIC_KEYS = ["oa", "macro_precision", "macro_recall", "macro_f1", "kappa"]


def run_report_row(report_dict: dict) -> list[str]:
    return [mean_std_cell(report_dict["aggregate"][k]) for k in METRIC_KEYS]


def save_training_curves(path: str | Path, history) -> None:
    fig, (ax_loss, ax_oa) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_loss.plot(history.epochs, history.train_loss, marker="o", ms=3)
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("training loss")
    ax_oa.plot(history.epochs, history.val_oa, marker="o", ms=3, color="tab:green")
    ax_oa.set_xlabel("epoch")
    ax_oa.set_ylabel("validation OA")
    ax_oa.set_ylim(0, 1.02)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_confusion_figure(
    path: str | Path, report: MetricsReport, class_names=None
) -> None:
    counts = report.confusion
    k = len(counts)
    names = class_names or [str(i) for i in range(k)]
    fig, ax = plt.subplots(figsize=(4 + 0.3 * k, 3.5 + 0.3 * k))
    im = ax.imshow(counts, cmap="Blues")
    ax.set_xticks(range(k), names, rotation=45, ha="right")
    ax.set_yticks(range(k), names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    for i in range(k):
        for j in range(k):
            ax.text(j, i, str(counts[i][j]), ha="center", va="center", fontsize=8)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bar_figure(path: str | Path, labels: list[str], rows: list[dict]) -> None:
    """OA bar chart with std error bars for ablation/comparison tables."""
    means = [100 * r["aggregate"]["oa"]["mean"] for r in rows]
    stds = [100 * (r["aggregate"]["oa"]["std"] or 0.0) for r in rows]
    fig, ax = plt.subplots(figsize=(1.5 + 1.1 * len(labels), 3.5))
    ax.bar(range(len(labels)), means, yerr=stds, capsize=4, color="tab:blue")
    ax.set_xticks(range(len(labels)), labels, rotation=20, ha="right")
    ax.set_ylabel("OA (%)")
    ax.set_ylim(0, 102)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def evaluation_payload(report: MetricsReport, split: str, cfg_hash: str) -> dict:
    return {
        "split": split,
        "config_hash": cfg_hash,
        "metrics": report.to_dict(),
    }
