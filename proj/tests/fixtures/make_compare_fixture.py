"""Regenerates the compare golden files with scipy as the reference.

    python3 make_compare_fixture.py
"""
import csv
import random

import numpy as np
from scipy.stats import wilcoxon

random.seed(20240611)
rows_a, rows_b = [], []
for n in range(8):
    a = round(random.uniform(0.90, 0.99), 6)
    b = round(a - random.uniform(0.001, 0.03) * (1 if n != 3 else -1), 6)
    rows_a.append((f"PLD-{n}", "PLD", "PLD", "PLD->PLD", a))
    rows_b.append((f"PLD-{n}", "PLD", "", "PLD->generic", b))
for n in range(30):
    a = round(random.uniform(0.90, 0.99), 6)
    d = round(random.choice([0.002, 0.004, -0.001, 0.0]) + random.uniform(0, 0.002) * (n % 3 == 0), 6)
    rows_a.append((f"MCC-{n:02d}", "MCC", "MCC", "MCC->MCC", a))
    rows_b.append((f"MCC-{n:02d}", "MCC", "", "MCC->generic", round(a - d, 6)))


def write(path, rows):
    with open(path, "w", newline="") as f:
        f.write("id,true_label,predicted_label,category,dice\n")
        for r in rows:
            f.write(f"{r[0]},{r[1]},{r[2]},{r[3]},{r[4]!r}\n")


write("compare_a.csv", rows_a)
write("compare_b.csv", rows_b)


def row(name, xs, ys, alpha=0.05):
    x, y = np.array(xs), np.array(ys)
    d = x - y
    nz = d[d != 0]
    ties = len(np.unique(np.abs(nz))) != len(nz)
    method = "exact" if len(nz) <= 25 and not ties else "approx"
    res = wilcoxon(x, y, zero_method="wilcox", correction=False, method=method)
    label = "exact" if method == "exact" else "normal-approx"
    sig = "true" if res.pvalue < alpha else "false"
    return f"{name},{len(x)},{x.mean():.6f},{y.mean():.6f},{res.statistic:.1f},{res.pvalue:.6e},{label},{sig}\n"


groups = {}
for ra, rb in zip(rows_a, rows_b):
    groups.setdefault(ra[3], ([], []))
    groups[ra[3]][0].append(ra[4])
    groups[ra[3]][1].append(rb[4])
ordered = sorted(zip(rows_a, rows_b), key=lambda p: p[0][0])
out = "group,n,mean_a,mean_b,w,p,method,significant\n"
out += row("all", [p[0][4] for p in ordered], [p[1][4] for p in ordered])
for name in sorted(groups):
    out += row(name, *groups[name])
with open("compare_expected.csv", "w") as f:
    f.write(out)
