"""Paired significance tests between two methods from a bench.csv.

Accuracy is averaged per subject within each (tw, channels, n_train) cell,
then the two methods are compared over subjects with a paired t-test and a
Wilcoxon signed-rank test.

    python scripts/significance.py runs/epoc/bench.csv --a trca --b adtrca
"""
import argparse
import csv
import sys
from collections import defaultdict

import numpy as np
from scipy import stats


def subject_means(path):
    acc = defaultdict(list)
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["method"], float(row["tw"]), row["channels"], int(row["n_train"]), row["subject"])
            acc[key].append(float(row["accuracy"]))
    return {k: float(np.mean(v)) for k, v in acc.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("bench_csv")
    ap.add_argument("--a", default="trca")
    ap.add_argument("--b", default="adtrca")
    ap.add_argument("--alpha", type=float, default=0.05)
    args = ap.parse_args()

    means = subject_means(args.bench_csv)
    cells = sorted({k[1:4] for k in means if k[0] in (args.a, args.b)})
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["tw", "channels", "n_train", "n_subjects", f"mean_{args.a}", f"mean_{args.b}",
                "t_stat", "t_p", "wilcoxon_stat", "wilcoxon_p", "significant"])
    for tw, ch, nt in cells:
        subs = sorted({k[4] for k in means if k[1:4] == (tw, ch, nt)})
        pairs = [(means.get((args.a, tw, ch, nt, s)), means.get((args.b, tw, ch, nt, s))) for s in subs]
        pairs = [p for p in pairs if None not in p]
        if len(pairs) < 2:
            continue
        a, b = np.array(pairs).T
        diff = b - a
        if np.all(diff == 0):
            t_stat = t_p = w_stat = w_p = float("nan")
        else:
            t_stat, t_p = stats.ttest_rel(b, a)
            w_stat, w_p = stats.wilcoxon(b, a, zero_method="zsplit")
        sig = bool(t_p < args.alpha or w_p < args.alpha) if np.isfinite(t_p) else False
        w.writerow([tw, ch, nt, len(pairs), f"{a.mean():.4f}", f"{b.mean():.4f}",
                    f"{t_stat:.4f}", f"{t_p:.3g}", f"{w_stat:.4f}", f"{w_p:.3g}", sig])


if __name__ == "__main__":
    main()
