"""Command-line interface.

    vtolctl sim run --config mission.json --out log.csv [--figures DIR]
    vtolctl sim batch --dir configs/ --out-dir results/
    vtolctl alloc solve --thrust 9.81 --tilt 0 --torque 0,0,0 --airspeed 0
    vtolctl verify prop1 --trials 1000 --seed 7 --report report.json
    vtolctl report --log log.csv --out-dir figs/
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

import numpy as np

from . import __version__
from .airframe import eflite_like, load_params
from .allocation import Mixer
from .config import load_scenario
from .errors import AllocationError, ConfigError, VtolctlError
from .simulation import run, write_csv
from .stability import prop1_montecarlo


def _parse_vec3(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return np.array([float(p) for p in parts])


def _cmd_sim_run(args) -> int:
    scenario = load_scenario(args.config)
    if args.seed is not None:
        scenario = __import__("dataclasses").replace(scenario, seed=args.seed)
    result = run(scenario)
    write_csv(result.records, args.out)
    metrics_path = args.metrics or args.out + ".metrics.json"
    with open(metrics_path, "w") as fh:
        json.dump(result.metrics, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    print(f"wrote {args.out} ({len(result.records)} cycles), metrics -> {metrics_path}")
    if args.figures:
        from .report import write_report

        mets = write_report(args.out, args.figures)
        print(f"figures -> {args.figures} ({len(mets['figures'])} files)")
    if not result.success:
        print(f"run FAILED: {result.metrics.get('failure', 'unknown')}", file=sys.stderr)
        return 1
    return 0


def _cmd_sim_batch(args) -> int:
    configs = sorted(glob.glob(os.path.join(args.dir, "*.json")))
    if not configs:
        print(f"no .json configs found in {args.dir}", file=sys.stderr)
        return 2
    os.makedirs(args.out_dir, exist_ok=True)
    failures = 0
    for cfg_path in configs:
        stem = os.path.splitext(os.path.basename(cfg_path))[0]
        out_csv = os.path.join(args.out_dir, stem + ".csv")
        try:
            result = run(load_scenario(cfg_path))
        except VtolctlError as exc:
            print(f"{stem}: ERROR {exc}", file=sys.stderr)
            failures += 1
            continue
        write_csv(result.records, out_csv)
        with open(os.path.join(args.out_dir, stem + ".metrics.json"), "w") as fh:
            json.dump(result.metrics, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")
        status = "ok" if result.success else "FAILED"
        print(f"{stem}: {status} ({len(result.records)} cycles)")
        failures += 0 if result.success else 1
    return 1 if failures else 0


def _cmd_alloc_solve(args) -> int:
    params = load_params(args.params) if args.params else eflite_like()
    mixer = Mixer(params)
    try:
        res = mixer.allocate(args.thrust, args.tilt, args.torque, args.airspeed)
    except (AllocationError, ValueError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    act = res.actuators
    out = {
        "rotor_speeds": [act.w1, act.w2, act.w3],
        "rotor_tilts": [act.tilt1, act.tilt2],
        "surface_deflections": [act.delta1, act.delta2],
        "saturated": list(act.saturated),
        "lambda_bar": res.split.lambda_bar,
        "achieved": {
            "thrust": res.achieved_thrust,
            "tilt": res.achieved_tilt,
            "torque": list(res.achieved_torque),
        },
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_verify_prop1(args) -> int:
    report = prop1_montecarlo(
        trials=args.trials, seed=args.seed, dt=args.dt, horizon=args.horizon
    )
    text = json.dumps(report, indent=2, sort_keys=True, default=float)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
        print(f"report -> {args.report}")
    else:
        print(text)
    a, z = report["airspeed_regime"], report["zero_regime"]
    print(
        f"airspeed regime: {a['passed']}/{a['evaluated']} "
        f"(rate >= {a['rate_threshold']:.3f}); "
        f"zero regime: {z['passed']}/{z['evaluated']} "
        f"(worst ODE error {z['worst_ode_error']:.2e})"
    )
    return 0 if report["all_passed"] else 1


def _cmd_report(args) -> int:
    from .report import write_report

    mets = write_report(args.log, args.out_dir, args.metrics)
    print(f"figures -> {args.out_dir} ({len(mets['figures'])} files)")
    print(f"metrics -> {mets['metrics_path']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vtolctl", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"vtolctl {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="run closed-loop scenarios")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)
    run_p = sim_sub.add_parser("run", help="run one scenario config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out", required=True, help="output CSV log path")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--metrics", default=None, help="metrics JSON path")
    run_p.add_argument("--figures", default=None, metavar="DIR",
                       help="also render figures into DIR")
    run_p.set_defaults(func=_cmd_sim_run)
    batch_p = sim_sub.add_parser("batch", help="run every config in a directory")
    batch_p.add_argument("--dir", required=True)
    batch_p.add_argument("--out-dir", default="batch_out")
    batch_p.set_defaults(func=_cmd_sim_batch)

    alloc = sub.add_parser("alloc", help="actuator allocation")
    alloc_sub = alloc.add_subparsers(dest="alloc_command", required=True)
    solve_p = alloc_sub.add_parser("solve", help="solve one wrench demand")
    solve_p.add_argument("--thrust", type=float, required=True, help="thrust magnitude [N]")
    solve_p.add_argument("--tilt", type=float, required=True, help="thrust tilt [rad]")
    solve_p.add_argument("--torque", type=_parse_vec3, required=True, help="body torque x,y,z [N m]")
    solve_p.add_argument("--airspeed", type=float, default=0.0)
    solve_p.add_argument("--params", default=None, help="aircraft parameter JSON file")
    solve_p.set_defaults(func=_cmd_alloc_solve)

    verify = sub.add_parser("verify", help="numerical verification runs")
    verify_sub = verify.add_subparsers(dest="verify_command", required=True)
    prop1_p = verify_sub.add_parser("prop1", help="attitude-law convergence Monte Carlo")
    prop1_p.add_argument("--trials", type=int, default=1000)
    prop1_p.add_argument("--seed", type=int, default=0)
    prop1_p.add_argument("--dt", type=float, default=0.005)
    prop1_p.add_argument("--horizon", type=float, default=6.0)
    prop1_p.add_argument("--report", default=None, help="write the JSON report here")
    prop1_p.set_defaults(func=_cmd_verify_prop1)

    rep = sub.add_parser("report", help="render figures + metrics from a log CSV")
    rep.add_argument("--log", required=True)
    rep.add_argument("--out-dir", required=True)
    rep.add_argument("--metrics", default=None)
    rep.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except VtolctlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
