"""Figure rendering for cycle logs.

Reads a log CSV and writes a small set of PNG figures next to it (or
into a chosen directory) together with a metrics JSON: trajectory,
thrust-vector and rotor tilt traces, speed tracking, and actuator
loading.  Matplotlib runs on the Agg backend; nothing interactive.
"""

from __future__ import annotations

import json
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .simulation import read_csv


def _finite(x, y):
    m = np.isfinite(x) & np.isfinite(y)
    return x[m], y[m]


def log_metrics(log: dict) -> dict:
    """Summary statistics recomputed from a CSV log."""
    t = log["t"]
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    ct = log["cross_track"]
    se = log["speed_err"]
    ct_f = ct[np.isfinite(ct)]
    se_f = se[np.isfinite(se)]
    err = np.stack(
        [log["vah_x"] - log["vat_x"], log["vah_y"] - log["vat_y"], log["vah_z"] - log["vat_z"]]
    )
    valid = log["pitot_valid"] == 1
    out = {
        "n_records": int(len(t)),
        "duration": float(t[-1] + dt) if len(t) else 0.0,
        "cross_track_rms": float(np.sqrt(np.mean(ct_f**2))) if len(ct_f) else math.nan,
        "cross_track_max": float(ct_f.max()) if len(ct_f) else math.nan,
        "speed_rms": float(np.sqrt(np.mean(se_f**2))) if len(se_f) else math.nan,
        "thrust_tilt_max_deg": float(np.degrees(log["tilt"].max())),
        "tilt_rate_max": {
            ch: float(np.abs(np.diff(log[ch])).max() / dt) if len(t) > 1 and dt > 0 else 0.0
            for ch in ("tilt1", "tilt2", "tilt")
        },
        "estimator_rms": [
            float(np.sqrt(np.mean(err[i, valid] ** 2))) if valid.any() else math.nan
            for i in range(3)
        ],
        "pitot_valid_frac": float(valid.mean()),
        "saturated_frac": float((log["sat_flags"] != 0).mean()),
    }
    return out


def render_figures(log_path: str, out_dir: str) -> list[str]:
    """Render the standard figure set; returns the files written."""
    log = read_csv(log_path)
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(log_path))[0]
    t = log["t"]
    written = []

    def save(fig, name):
        path = os.path.join(out_dir, f"{stem}_{name}.png")
        fig.savefig(path, dpi=130, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    # Trajectory: top view and altitude profile.
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    ax1.plot(log["px"], log["py"], lw=0.8)
    ax1.plot(log["px"][0], log["py"][0], "go", label="start")
    ax1.plot(log["px"][-1], log["py"][-1], "rs", label="end")
    ax1.set_xlabel("x [m]")
    ax1.set_ylabel("y [m]")
    ax1.set_title("ground track")
    ax1.axis("equal")
    ax1.legend(loc="best", fontsize=8)
    ax2.plot(t, -log["pz"], lw=0.8)
    ax2.set_xlabel("t [s]")
    ax2.set_ylabel("altitude [m]")
    ax2.set_title("altitude")
    fig.tight_layout()
    save(fig, "trajectory")

    # Tilt commands.
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(t, np.degrees(log["tilt"]), label="thrust tilt", lw=1.0)
    ax.plot(t, np.degrees(log["tilt1"]), label="rotor tilt 1", lw=0.7, alpha=0.8)
    ax.plot(t, np.degrees(log["tilt2"]), label="rotor tilt 2", lw=0.7, alpha=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("tilt [deg]")
    ax.set_title("tilt commands")
    ax.legend(loc="best", fontsize=8)
    save(fig, "tilts")

    # Speeds: inertial, air (true and estimated), reference.
    v = np.sqrt(log["vx"] ** 2 + log["vy"] ** 2 + log["vz"] ** 2)
    va = np.sqrt(log["vat_x"] ** 2 + log["vat_y"] ** 2 + log["vat_z"] ** 2)
    vah = np.sqrt(log["vah_x"] ** 2 + log["vah_y"] ** 2 + log["vah_z"] ** 2)
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(t, v, label="inertial speed", lw=1.0)
    ax.plot(t, va, label="airspeed (true)", lw=0.8, alpha=0.9)
    ax.plot(t, vah, label="airspeed (estimated)", lw=0.8, alpha=0.9)
    tm, vref = _finite(t, v - log["speed_err"])
    if len(tm):
        ax.plot(tm, vref, "k--", label="speed reference", lw=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("speed [m/s]")
    ax.set_title("speed tracking")
    ax.legend(loc="best", fontsize=8)
    save(fig, "speeds")

    # Actuators: normalized rotor speeds, surfaces, cross-track.
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    for ch, lbl in (("w1n", "rotor 1"), ("w2n", "rotor 2"), ("w3n", "rotor 3")):
        ax1.plot(t, log[ch], label=lbl, lw=0.7)
    ax1.set_ylabel("rotor speed / max")
    ax1.legend(loc="best", fontsize=8)
    tm, ctf = _finite(t, log["cross_track"])
    if len(tm):
        ax2.plot(tm, ctf, lw=0.8)
    ax2.set_ylabel("cross-track [m]")
    ax2.set_xlabel("t [s]")
    fig.tight_layout()
    save(fig, "actuators")
    return written


def write_report(log_path: str, out_dir: str, metrics_path: str | None = None) -> dict:
    """Figures plus a metrics JSON for one log file."""
    figures = render_figures(log_path, out_dir)
    log = read_csv(log_path)
    mets = log_metrics(log)
    mets["figures"] = [os.path.basename(f) for f in figures]
    if metrics_path is None:
        stem = os.path.splitext(os.path.basename(log_path))[0]
        metrics_path = os.path.join(out_dir, f"{stem}_metrics.json")
    with open(metrics_path, "w") as fh:
        json.dump(mets, fh, indent=2, sort_keys=True)
        fh.write("\n")
    mets["metrics_path"] = metrics_path
    return mets
