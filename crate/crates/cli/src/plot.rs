//! Generated matplotlib scripts. Each reads the CSVs next to it and saves a PNG.

use crate::config::Kind;

const PRELUDE: &str = r#"#!/usr/bin/env python3
# Generated by geostab. Reads the CSV files in this directory.
import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def rows(name):
    with open(os.path.join(HERE, name), newline="") as fh:
        return list(csv.DictReader(fh))


def num(s):
    return float(s) if s != "" else float("nan")


def save(fig, name):
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, name), dpi=150)
    print("wrote", name)

"#;

const SWEEP: &str = r#"
curves = defaultdict(lambda: ([], []))
d0 = None
for r in rows("sweep.csv"):
    hs, ds = curves[r["method"]]
    hs.append(num(r["h"]))
    ds.append(num(r["d_after"]))
    d0 = num(r["d0"])
fig, ax = plt.subplots(figsize=(6, 4))
for method, (hs, ds) in curves.items():
    ax.plot(hs, ds, marker=".", label=method)
if d0 is not None:
    ax.axhline(d0, color="k", lw=0.8, ls="--", label="d0")
ax.set_xscale("log")
ax.set_xlabel("h")
ax.set_ylabel("distance after one step")
ax.legend()
save(fig, "sweep.png")
"#;

const BIFURCATION: &str = r#"
hs, zs = [], []
for r in rows("bifurcation.csv"):
    hs.append(num(r["h"]))
    zs.append(num(r["z"]))
fig, ax = plt.subplots(figsize=(6, 4))
ax.scatter(hs, zs, s=2)
ax.set_xlabel("h")
ax.set_ylabel("third component of the solutions")
save(fig, "bifurcation.png")
"#;

const GLOBAL: &str = r#"
curves = defaultdict(lambda: ([], [], []))
for r in rows("global_error.csv"):
    hs, es, bs = curves[r["method"]]
    hs.append(num(r["h"]))
    es.append(num(r["error"]))
    bs.append(num(r["bound"]))
fig, ax = plt.subplots(figsize=(6, 4))
for method, (hs, es, bs) in curves.items():
    line, = ax.loglog(hs, es, marker="o", label=method + " error")
    ax.loglog(hs, bs, ls="--", color=line.get_color(), label=method + " bound")
ax.set_xlabel("h")
ax.set_ylabel("global error")
ax.legend()
save(fig, "global_error.png")
"#;

const LOGNORM: &str = r#"
data = rows("lognorm.csv")
coords = [k for k in data[0].keys() if k != "mu"]
mu = [num(r["mu"]) for r in data]
fig, ax = plt.subplots(figsize=(6, 4))
if len(coords) >= 2:
    sc = ax.scatter([num(r[coords[0]]) for r in data], [num(r[coords[1]]) for r in data], c=mu, s=8)
    fig.colorbar(sc, label="mu")
    ax.set_xlabel(coords[0])
    ax.set_ylabel(coords[1])
else:
    ax.scatter([num(r[coords[0]]) for r in data], mu, s=8)
    ax.set_xlabel(coords[0])
    ax.set_ylabel("mu")
save(fig, "lognorm.png")
"#;

const ISOTROPY: &str = r#"
curves = defaultdict(lambda: ([], []))
for r in rows("isotropy.csv"):
    hs, ds = curves[r["c"]]
    hs.append(num(r["h"]))
    ds.append(num(r["d_after"]))
arrival = rows("isotropy_arrival.csv") if os.path.exists(os.path.join(HERE, "isotropy_arrival.csv")) else []
fig, axes = plt.subplots(1, 2 if arrival else 1, figsize=(11 if arrival else 6, 4), squeeze=False)
ax = axes[0][-1]
for c, (hs, ds) in curves.items():
    ax.plot(hs, ds, label="c = %g" % num(c))
ax.set_xlabel("h")
ax.set_ylabel("distance after one step")
ax.legend()
if arrival:
    ax = axes[0][0]
    sc = ax.scatter([num(r["x"]) for r in arrival], [num(r["y"]) for r in arrival],
                    c=[num(r["c"]) for r in arrival], s=10)
    fig.colorbar(sc, ax=ax, label="c")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
save(fig, "isotropy.png")
"#;

const KARCHER: &str = r#"
data = rows("karcher.csv")
n = max(int(r["row"]) for r in data) + 1
grid = [[0.0] * n for _ in range(n)]
for r in data:
    grid[int(r["row"])][int(r["col"])] = num(r["value"])
fig, ax = plt.subplots(figsize=(4, 4))
im = ax.imshow(grid)
fig.colorbar(im)
ax.set_title("Karcher mean")
save(fig, "karcher.png")
"#;

pub fn plot_script(kind: Kind) -> String {
    let body = match kind {
        Kind::Sweep => SWEEP,
        Kind::Bifurcation => BIFURCATION,
        Kind::GlobalError => GLOBAL,
        Kind::Lognorm => LOGNORM,
        Kind::Isotropy => ISOTROPY,
        Kind::Karcher => KARCHER,
    };
    format!("{PRELUDE}{body}")
}
