"""Overlay mean eval curves of two groups of run CSVs.

    python3 scripts/compare_curves.py A_seed*.csv -- B_seed*.csv --labels A B --out cmp.png
"""
import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load(paths):
    curves = []
    for path in paths:
        with open(path) as fh:
            rows = [r for r in csv.DictReader(fh) if r["eval_return"]]
        curves.append(([int(r["step"]) for r in rows], [float(r["eval_return"]) for r in rows]))
    steps = curves[0][0]
    return np.array(steps), np.array([c[1] for c in curves])


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if "--" not in argv:
        sys.exit("usage: compare_curves.py A... -- B... [--labels a b] [--out file]")
    cut = argv.index("--")
    group_a = argv[:cut]
    p = argparse.ArgumentParser()
    p.add_argument("group_b", nargs="+")
    p.add_argument("--labels", nargs=2, default=["A", "B"])
    p.add_argument("--out", default="comparison.png")
    args = p.parse_args(argv[cut + 1:])

    fig, ax = plt.subplots(figsize=(6, 4))
    for paths, label in ((group_a, args.labels[0]), (args.group_b, args.labels[1])):
        steps, ret = load(paths)
        mean, sd = ret.mean(axis=0), ret.std(axis=0)
        ax.plot(steps, mean, label=f"{label} (n={len(paths)})")
        ax.fill_between(steps, mean - sd, mean + sd, alpha=0.2)
        print(f"{label}: final {mean[-1]:.3f} +/- {sd[-1]:.3f}; per run {np.round(ret[:, -1], 3).tolist()}")
    ax.set_xlabel("environment steps")
    ax.set_ylabel("eval return")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"plot -> {args.out}")


if __name__ == "__main__":
    main()
