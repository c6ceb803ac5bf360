//! Self-contained matplotlib scripts that read the CSVs next to them.

use crate::config::Command;

const PRELUDE: &str = r#"#!/usr/bin/env python3
# Generated by fhd. Reads the CSV files in this directory and writes PNGs.
import csv
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = pathlib.Path(__file__).resolve().parent


def load(name):
    with open(HERE / name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else {}

"#;

const POTENTIAL: &str = r#"
pot = load("potential.csv")
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
axes[0].plot(pot["v"], pot["S"], color="k")
axes[0].axhline(0.0, color="grey", lw=0.5)
axes[0].set_xlabel("v")
axes[0].set_ylabel("S(v)")
axes[0].set_title("Pseudopotential")
if (HERE / "phase.csv").exists():
    ph = load("phase.csv")
    axes[1].plot(ph["v"], ph["vp_plus"], color="k")
    axes[1].plot(ph["v"], ph["vp_minus"], color="k")
axes[1].set_xlabel("v")
axes[1].set_ylabel("v'")
axes[1].set_title("Phase portrait")
fig.tight_layout()
fig.savefig(HERE / "potential.png", dpi=150)
"#;

const PROFILE: &str = r#"
quad = load("profile.csv")
shoot = load("profile_shooting.csv")
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(quad["xi"], quad["v"], color="k", label="quadrature")
ax.plot(shoot["xi"], shoot["v"], "--", color="tab:red", label="shooting")
ax.set_xlabel("xi")
ax.set_ylabel("v")
ax.set_title("Travelling-wave profile")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "profile.png", dpi=150)
"#;

const EVOLVE: &str = r#"
frames = {}
files = sorted(HERE.glob("trajectory_*.csv")) or [HERE / "trajectory.csv"]
for f in files:
    data = load(f.name)
    for t, x, v in zip(data["t"], data["x"], data["v"]):
        frames.setdefault(t, ([], []))
        frames[t][0].append(x)
        frames[t][1].append(v)
fig = plt.figure(figsize=(7, 5))
ax = fig.add_subplot(projection="3d")
for t, (x, v) in sorted(frames.items()):
    ax.plot(x, [t] * len(x), v, color="k", lw=0.6)
ax.set_xlabel("x")
ax.set_ylabel("t")
ax.set_zlabel("v")
ax.set_title("Soliton evolution")
fig.tight_layout()
fig.savefig(HERE / "evolution.png", dpi=150)
"#;

const SCAN: &str = r#"
scan = load("existence.csv")
fig, ax = plt.subplots(figsize=(6, 4))
ax.step(scan["lambda"], scan["admissible"], where="mid", color="k")
ax.set_xlabel("Lambda")
ax.set_ylabel("admissible")
ax.set_title("Soliton existence")
fig.tight_layout()
fig.savefig(HERE / "existence.png", dpi=150)
"#;

/// Script for `command`, or `None` when the command has nothing to plot.
pub fn script(command: Command) -> Option<(String, String)> {
    let body = match command {
        Command::Potential => POTENTIAL,
        Command::Profile => PROFILE,
        Command::Evolve => EVOLVE,
        Command::ScanExistence => SCAN,
        Command::VerifyLax | Command::ReduceCheck => return None,
    };
    Some((
        format!("plot_{}.py", command.name().replace('-', "_")),
        format!("{PRELUDE}{body}"),
    ))
}
