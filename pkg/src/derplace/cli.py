"""Command-line front door.

Subcommands: validate, matrices, check, simulate, npp, ocpp, auto-ocpp,
branches, serve.  All structured output is JSON on stdout (or --out), with
deterministic key ordering so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import placement, service, store
from .control import (
    Configuration,
    GainSample,
    SamplingParams,
    configuration_from_dict,
    structural_identity,
)
from .feeder import Feeder, FeederFormatError, FeederValidationError, parse_feeder
from .sensitivity import build_RX, check_pd
from .sim import DisturbanceEvent, DisturbanceSchedule, TargetEvent, simulate
from .stability import Tolerances, stable_fraction
from .control import assemble_state_space

_MODE_NAMES = {"sp": "single_phase_equivalent", "mp": "multiphase"}


def _load_feeder(path: str) -> Feeder:
    return parse_feeder(Path(path).read_text())


def _load_config(path: str) -> Configuration:
    return configuration_from_dict(json.loads(Path(path).read_text()))


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _sampling_from_args(args) -> SamplingParams:
    scheme = {"grid": "grid", "random": "uniform_random"}[args.scheme]
    return SamplingParams(scheme=scheme, count=args.samples, seed=args.seed)


def _tolerances_from_args(args) -> Tolerances:
    return Tolerances(
        eps_lambda=args.tol_lambda,
        eps_unit=args.tol_unit,
        eps_cluster=args.tol_cluster,
        eps_rank=args.tol_rank,
    )


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, default=100, help="gain samples per evaluation")
    p.add_argument("--scheme", choices=("grid", "random"), default="grid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=placement.DEFAULT_THRESHOLD)
    p.add_argument("--tol-lambda", type=float, default=1e-9, dest="tol_lambda")
    p.add_argument("--tol-unit", type=float, default=1e-7, dest="tol_unit")
    p.add_argument("--tol-cluster", type=float, default=1e-7, dest="tol_cluster")
    p.add_argument("--tol-rank", type=float, default=None, dest="tol_rank")
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="derplace",
        description="Stability-screened DER placement on radial feeders",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate a feeder file")
    p.add_argument("feeder")

    p = sub.add_parser("matrices", help="emit the R/X sensitivity matrices")
    p.add_argument("feeder")
    p.add_argument("--mode", choices=("sp", "mp"), default="mp")
    p.add_argument("--out", default=None)

    p = sub.add_parser("check", help="stable fraction of a configuration")
    p.add_argument("feeder")
    p.add_argument("config")
    _common_flags(p)

    p = sub.add_parser("simulate", help="step the closed loop and write a CSV")
    p.add_argument("feeder")
    p.add_argument("config")
    p.add_argument("--gains", required=True, help="fq,fp")
    p.add_argument("--schedule", default=None, help="disturbance schedule JSON")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--x0", default=None, help="comma-separated initial state")
    p.add_argument("--out", default=None, help="trajectory CSV path")

    p = sub.add_parser("npp", help="non-colocated placement step (heatmap, optional place)")
    p.add_argument("feeder")
    p.add_argument("--perf", required=True, help="performance node id")
    p.add_argument("--place", default=None, help="accept this actuator node after the heatmap")
    p.add_argument("--session", default=None, help="session file to create/extend")
    _common_flags(p)

    p = sub.add_parser("ocpp", help="seeded co-located placement until first failure")
    p.add_argument("feeder")
    p.add_argument("--session", default=None)
    _common_flags(p)

    p = sub.add_parser("auto-ocpp", help="co-located placement until exhaustion, per seed")
    p.add_argument("feeder")
    p.add_argument("--seeds", required=True, help="comma-separated seed list")
    _common_flags(p)

    p = sub.add_parser("branches", help="branch statistics of a stored session")
    p.add_argument("--session", required=True)
    p.add_argument("--min-length", type=int, default=4, dest="min_length")
    p.add_argument("--out", default=None)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--store", default="derplace-store")
    p.add_argument("--ui", default=None, help="directory of built UI assets to serve")
    p.add_argument("--workers", type=int, default=None)

    return parser


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        feeder = _load_feeder(args.feeder)
    except (FeederFormatError, FeederValidationError) as exc:
        print(f"INVALID: {exc}", file=sys.stderr)
        return 1
    print(f"OK: {len(feeder.nodes)} nodes, {len(feeder.lines)} lines, "
          f"substation {feeder.substation_id}")
    return 0


def cmd_matrices(args) -> int:
    feeder = _load_feeder(args.feeder)
    sens = build_RX(feeder, _MODE_NAMES[args.mode])
    report = check_pd(sens)
    if not (report.r_pd and report.x_pd):
        print(
            f"warning: active sensitivity not positive definite "
            f"(min eig R {report.min_eig_r:.3e}, X {report.min_eig_x:.3e})",
            file=sys.stderr,
        )
    _emit(
        {
            "mode": sens.mode,
            "active": sens.active,
            "index": [
                {"node": nid, "phase": phase, "index": idx}
                for (nid, phase), idx in sorted(sens.index_of.items(), key=lambda kv: kv[1])
            ],
            "R": sens.R.tolist(),
            "X": sens.X.tolist(),
            "positive_definite": {"R": report.r_pd, "X": report.x_pd},
        },
        args.out,
    )
    return 0


def cmd_check(args) -> int:
    feeder = _load_feeder(args.feeder)
    config = _load_config(args.config)
    try:
        config.validate(feeder)
        sens = build_RX(feeder)
        result = stable_fraction(
            config,
            feeder,
            sens,
            sampling=_sampling_from_args(args),
            tol=_tolerances_from_args(args),
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    eigenvalues: list[list[float]] = []
    if result.witnesses:
        iw = structural_identity(config, feeder)
        ss = assemble_state_space(sens, iw, result.witnesses[0])
        ev = np.linalg.eigvals(ss.A_cl)
        eigenvalues = [[float(v.real), float(v.imag)] for v in sorted(ev, key=lambda z: (z.real, z.imag))]
    _emit(
        {
            "sisl": result.n_stable > 0,
            "fraction": result.fraction,
            "n_stable": result.n_stable,
            "n_samples": result.n_samples,
            "witnesses": [{"f_q": w.f_q, "f_p": w.f_p} for w in result.witnesses],
            "eigenvalues": eigenvalues,
            "no_tracked_states": result.no_tracked_states,
        },
        args.out,
    )
    return 0 if result.n_stable > 0 else 2


def _parse_schedule(path: str, sens) -> DisturbanceSchedule:
    doc = json.loads(Path(path).read_text())
    m = sens.n_states

    def vec(spec) -> np.ndarray:
        if spec is None:
            return np.zeros(m)
        if isinstance(spec, list):
            return np.asarray(spec, dtype=float)
        out = np.zeros(m)
        for nid, val in spec.items():
            for (node, phase), idx in sens.index_of.items():
                if node == nid:
                    out[sens.active.index(idx)] = float(val)
        return out

    events = tuple(
        DisturbanceEvent(
            step=int(e["step"]),
            dp_other=vec(e.get("dp_other")),
            dq_other=vec(e.get("dq_other")),
        )
        for e in doc.get("events", [])
    )
    target_events = tuple(
        TargetEvent(
            step=int(e["step"]),
            dv_ref=vec(e.get("dv_ref")),
            ddelta_ref=vec(e.get("ddelta_ref")),
        )
        for e in doc.get("target_events", [])
    )
    return DisturbanceSchedule(events=events, target_events=target_events)


def cmd_simulate(args) -> int:
    feeder = _load_feeder(args.feeder)
    config = _load_config(args.config)
    config.validate(feeder)
    sens = build_RX(feeder)
    fq, fp = (float(v) for v in args.gains.split(","))
    iw = structural_identity(config, feeder)
    ss = assemble_state_space(sens, iw, GainSample(f_q=fq, f_p=fp))
    dim = ss.A_cl.shape[0]
    x0 = np.zeros(dim)
    if args.x0:
        x0 = np.asarray([float(v) for v in args.x0.split(",")], dtype=float)
    schedule = _parse_schedule(args.schedule, sens) if args.schedule else None
    traj = simulate(ss.A_cl, ss.F, x0, args.steps, schedule=schedule, sens=sens)

    labels = [None] * sens.n_states
    for (nid, phase), idx in sens.index_of.items():
        labels[sens.active.index(idx)] = f"{nid}_{phase}"
    header = (
        ["step"]
        + [f"v_err_{s}" for s in labels]
        + [f"ang_err_{s}" for s in labels]
        + [f"q_cmd_{s}" for s in labels]
        + [f"p_cmd_{s}" for s in labels]
    )
    rows = [",".join(header)]
    m = sens.n_states
    for k in range(traj.states.shape[0]):
        u = traj.inputs[k] if k < traj.inputs.shape[0] else np.zeros(2 * m)
        cells = [str(k)] + [repr(float(v)) for v in traj.states[k]] + [
            repr(float(v)) for v in u
        ]
        rows.append(",".join(cells))
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if traj.diverged:
        print(f"diverged at step {traj.diverged_at}", file=sys.stderr)
    return 0


def _open_session(args, feeder: Feeder, mode: str) -> placement.Session:
    path = args.session
    if path and Path(path).exists():
        session = store.load_session_file(path, feeder)
        if session.mode != mode:
            print(f"error: session mode is {session.mode!r}, expected {mode!r}", file=sys.stderr)
            raise SystemExit(1)
        return session
    return placement.new_session(
        feeder,
        mode,
        sampling=_sampling_from_args(args),
        threshold=args.threshold,
        seed=args.seed,
    )


def _save_session(args, session: placement.Session) -> None:
    if args.session:
        store.save_session_file(args.session, session)


def cmd_npp(args) -> int:
    feeder = _load_feeder(args.feeder)
    session = _open_session(args, feeder, "npp")
    heatmap = placement.heatmap_npp(session, args.perf)
    placed = None
    if args.place:
        try:
            placement.accept_placement(session, args.place, args.perf)
            placed = {"actuator": args.place, "performance": args.perf}
        except placement.PlacementRejectedError as exc:
            print(f"placement rejected: {exc}", file=sys.stderr)
            _save_session(args, session)
            return 1
    _save_session(args, session)
    core_cfg = session.core_configuration()
    _emit(
        {
            "heatmap": heatmap.to_dict(),
            "placed": placed,
            "core": [
                {"actuator": p.actuator, "performance": p.performance, "phases": p.phases}
                for p in core_cfg.pairs
            ],
        },
        args.out,
    )
    return 0


def cmd_ocpp(args) -> int:
    feeder = _load_feeder(args.feeder)
    session = _open_session(args, feeder, "ocpp")
    session, heatmap = placement.run_ocpp(session, seed=args.seed)
    _save_session(args, session)
    _emit(
        {
            "seed": args.seed,
            "placements": [
                {"node": p.pair.actuator, "fraction": p.fraction} for p in session.core
            ],
            "heatmap": heatmap.to_dict(),
        },
        args.out,
    )
    return 0


def cmd_auto_ocpp(args) -> int:
    feeder = _load_feeder(args.feeder)
    trials = []
    for seed in (int(s) for s in args.seeds.split(",")):
        session = placement.new_session(
            feeder,
            "auto_ocpp",
            sampling=_sampling_from_args(args),
            threshold=args.threshold,
            seed=seed,
        )
        stats = placement.run_auto_ocpp(session, seed=seed)
        doc = stats.to_dict()
        doc["placements"] = [p.pair.actuator for p in session.core]
        trials.append(doc)
    _emit(trials, args.out)
    return 0


def cmd_branches(args) -> int:
    try:
        session = store.load_session_file(args.session)
    except (store.StoreError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    stats = placement.branch_stats(session, min_length=args.min_length)
    _emit(
        [
            {
                "start": b.start,
                "end": b.end,
                "length": b.length,
                "percent_stable": b.percent_stable,
                "n_used": b.n_used,
                "n_involving": b.n_involving,
            }
            for b in stats
        ],
        args.out,
    )
    return 0


def cmd_serve(args) -> int:
    service.serve(
        host=args.host,
        port=args.port,
        store_path=args.store,
        ui_dir=args.ui,
        workers=args.workers,
    )
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "matrices": cmd_matrices,
    "check": cmd_check,
    "simulate": cmd_simulate,
    "npp": cmd_npp,
    "ocpp": cmd_ocpp,
    "auto-ocpp": cmd_auto_ocpp,
    "branches": cmd_branches,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (FeederFormatError, FeederValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
