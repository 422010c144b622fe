#!/usr/bin/env python3
"""Plot the TSV tables written by `unifi eval`, `unifi ablation` and `unifi rate-sweep`.

usage: plot_report.py REPORT_DIR [--out plots/]
"""
import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_tsv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f, delimiter="\t"))


def plot_cdf(rows, out):
    x = [float(r["error_m"]) for r in rows]
    p = [float(r["p"]) for r in rows]
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.plot(x, p)
    ax.set_xlabel("localization error (m)")
    ax.set_ylabel("CDF")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "cdf.png", dpi=150)


def plot_confusion(rows, out):
    names = [k for k in rows[0] if k != "truth"]
    counts = [[int(r[n]) for n in names] for r in rows]
    norm = [[c / max(sum(row), 1) for c in row] for row in counts]
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.imshow(norm, cmap="Blues", vmin=0, vmax=1)
    ax.set_xticks(range(len(names)), names, rotation=30, ha="right")
    ax.set_yticks(range(len(names)), [r["truth"] for r in rows])
    for i, row in enumerate(norm):
        for j, v in enumerate(row):
            ax.text(j, i, f"{v:.2f}", ha="center", va="center", color="white" if v > 0.5 else "black")
    ax.set_xlabel("predicted")
    fig.tight_layout()
    fig.savefig(out / "confusion.png", dpi=150)


def plot_sweep(rows, out):
    rate = [float(r["rate_hz"]) for r in rows]
    err = [float(r["mean_error_m"]) for r in rows]
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.plot(rate, err, marker="o")
    ax.set_xscale("log")
    ax.set_xlabel("packet rate (Hz)")
    ax.set_ylabel("mean error (m)")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "rate_sweep.png", dpi=150)


def plot_ablation(rows, out):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.bar([r["subset"] for r in rows], [float(r["accuracy"] or "nan") for r in rows])
    ax.set_ylabel("held-out accuracy")
    ax.set_ylim(0, 1)
    fig.tight_layout()
    fig.savefig(out / "ablation.png", dpi=150)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("report_dir", type=Path)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()
    out = args.out or args.report_dir
    out.mkdir(parents=True, exist_ok=True)
    plots = {
        "cdf.tsv": plot_cdf,
        "confusion.tsv": plot_confusion,
        "rate_sweep.tsv": plot_sweep,
        "ablation.tsv": plot_ablation,
    }
    for name, fn in plots.items():
        path = args.report_dir / name
        if path.exists():
            fn(read_tsv(path), out)
            print(f"{name} -> {out}")


if __name__ == "__main__":
    main()
