"""Command-line workbench: reproducible spectrum/fidelity/optimization runs.

Every command that computes something creates a fresh run directory under
--out (or $CRSIM_OUT, or ./crsim_runs) and writes a manifest.json -- input
hashes, config echo, seeds -- before any result file, so a finished run can be
re-executed from its manifest alone. Exit codes: 0 success, 1 a requested
threshold was not met, 2 bad input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import secrets
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .device import (DeviceError, anharmonicity, build_system,
                     convergence_check, diagonalize_transmon, load_device,
                     qubit_frequency)
from .evolve import (EvolutionConfig, EvolveError, bloch_trajectory, evolve)
from .metrics import (MetricsError, apply_vz, average_fidelity, gate_report,
                      ideal_cnot, success_probabilities)
from .optimize import (NmConfig, OptimizeConfig, OptimizeError, optimize_gate,
                       sweet_spot_search, sweep_metric, vz_fit)
from .pulses import (CnotAsymParams, EcrParams, PulseError, build_asym_cnot,
                     build_ecr_cnot, load_pulse_records, record_to_params)

_INPUT_ERRORS = (DeviceError, PulseError, EvolveError, MetricsError,
                 OptimizeError, OSError, json.JSONDecodeError, ValueError,
                 KeyError)

_FIXTURE_TABLES = {
    "3": ("asym_cnot_3t.json", "three_transmon.json"),
    "4": ("ecr_cnot_2t.json", "two_transmon.json"),
    "5": ("asym_cnot_2t.json", "two_transmon.json"),
}


def _fixture_path(name: str) -> Path:
    import importlib.resources as ir
    return Path(str(ir.files("crsim.fixtures") / name))


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _make_run_dir(args, verb: str) -> Path:
    root = args.out or os.environ.get("CRSIM_OUT") or "crsim_runs"
    stamp = time.strftime("%Y%m%d-%H%M%S")
    run = Path(root) / f"{verb}-{stamp}-{secrets.token_hex(3)}"
    run.mkdir(parents=True, exist_ok=False)
    return run


def _write_manifest(run: Path, verb: str, args, outputs, extra=None) -> None:
    cfg = {}
    for key in ("device", "pulse", "tau_ps", "method", "frame", "layout",
                "seed", "M", "inner_M", "min_f", "free", "budget", "axis",
                "initial", "table", "rows", "columns", "resume", "stride"):
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    manifest = {
        "tool": "crsim",
        "version": __version__,
        "command": verb,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": cfg,
        "seeds": {"mc_seed": getattr(args, "seed", None)},
        "outputs": sorted(outputs),
    }
    for role in ("device", "pulse"):
        path = getattr(args, role, None)
        if path:
            manifest[f"{role}_file"] = str(path)
            manifest[f"{role}_sha256"] = _sha256(path)
    if extra:
        manifest.update(extra)
    _dump_json(manifest, run / "manifest.json")


def _evolution_config(args) -> EvolutionConfig:
    return EvolutionConfig(
        tau_ns=args.tau_ps * 1e-3,
        method=args.method,
        frame=args.frame,
    )


def _load_single_record(args):
    records = load_pulse_records(args.pulse)
    if len(records) != 1:
        raise PulseError(
            f"{args.pulse} holds {len(records)} records; select one "
            "(single-record file required here)")
    params = records[0]
    if args.layout is not None:
        params = replace(params, cr_layout=args.layout)
    return params


def _build_program(params, device):
    n_t = len(device.transmons)
    if isinstance(params, EcrParams):
        return build_ecr_cnot(
            params, n_t,
            ec_control=device.transmons[params.control].charging_energy,
            ec_target=device.transmons[params.target].charging_energy)
    return build_asym_cnot(
        params, n_t,
        ec_target=device.transmons[params.target].charging_energy)


def _parse_axes(specs) -> dict:
    axes = {}
    for spec in specs or ():
        try:
            name, rng = spec.split("=", 1)
            lo, hi, n = rng.split(":")
            axes[name] = np.linspace(float(lo), float(hi), int(n))
        except ValueError as exc:
            raise ValueError(f"bad --axis {spec!r}; want name=lo:hi:n") from exc
    return axes


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    device = load_device(args.device)
    run = _make_run_dir(args, "spectrum")
    _write_manifest(run, "spectrum", args, ["spectrum.json"])
    sols = [diagonalize_transmon(t) for t in device.transmons]
    omegas = [qubit_frequency(s) for s in sols]
    anharms = [anharmonicity(s) for s in sols]
    rows = []
    print(f"{'transmon':>8} {'omega01 [GHz]':>14} {'anharm [GHz]':>13}")
    for i, (w, a) in enumerate(zip(omegas, anharms)):
        print(f"{i:>8} {w:>14.4f} {a:>13.4f}")
        rows.append({"transmon": i, "omega01_GHz": w, "anharmonicity_GHz": a})
    detunings = {}
    for i in range(len(omegas)):
        for j in range(i + 1, len(omegas)):
            d = omegas[i] - omegas[j]
            detunings[f"{i}-{j}"] = d
            print(f"detuning {i}-{j}: {d*1e3:+.1f} MHz")
    res = device.resonator.frequency
    res_det = [res - w for w in omegas]
    print(f"resonator: {res:.4f} GHz "
          f"({min(res_det):.3f}-{max(res_det):.3f} GHz above the qubits)")
    _dump_json({
        "transmons": rows,
        "qubit_detunings_GHz": detunings,
        "resonator_GHz": res,
        "resonator_detunings_GHz": res_det,
    }, run / "spectrum.json")
    print(f"run dir: {run}")
    return 0


def cmd_validate(args) -> int:
    if not args.device and not args.pulse:
        raise ValueError("validate needs --device and/or --pulse")
    if args.device:
        device = load_device(args.device)
        for i, t in enumerate(device.transmons):
            conv = convergence_check(t, [t.charge_cutoff, t.charge_cutoff + 5])
            worst = max(conv["max_abs_delta"])
            print(f"device transmon {i}: cutoff {t.charge_cutoff} converged "
                  f"to {worst:.2e} GHz")
            if worst > 1e-6:
                raise DeviceError(
                    f"transmon {i} energies not converged at the configured "
                    f"charge cutoff (delta {worst:.2e} GHz)")
        print(f"device ok: {args.device}")
    if args.pulse:
        records = load_pulse_records(args.pulse)
        if args.device:
            for p in records:
                prog = _build_program(p, device)
                print(f"pulse '{p.label}': {len(prog.channels)} channels, "
                      f"{prog.total_time:.3f} ns")
        else:
            for p in records:
                print(f"pulse '{p.label}': parsed ({type(p).__name__})")
        print(f"pulse file ok: {args.pulse}")
    return 0


def _fidelity_pipeline(args, want_success_only=False):
    device = load_device(args.device)
    params = _load_single_record(args)
    ops = build_system(device)
    program = _build_program(params, device)
    prop = evolve(program, ops, _evolution_config(args))
    n_t = len(device.transmons)
    ideal = ideal_cnot(n_t, params.control, params.target)
    return params, prop, ideal, n_t


def cmd_fidelity(args) -> int:
    run = _make_run_dir(args, "fidelity")
    _write_manifest(run, "fidelity", args, ["report.json"])
    params, prop, ideal, n_t = _fidelity_pipeline(args)
    thetas = list(params.thetas) + [0.0] * (n_t - len(params.thetas))
    report = gate_report(prop, ideal, thetas[:n_t],
                         n_samples=args.M, seed=args.seed)
    _dump_json(report.to_json_dict(), run / "report.json")
    print(f"F = {report.fidelity:.6f} +- {report.stderr:.6f} "
          f"(M={report.n_samples}, seed={report.seed})")
    print(f"mean success = {report.mean_success:.6f}")
    print(f"run dir: {run}")
    if args.min_f is not None and report.fidelity < args.min_f:
        print(f"threshold failed: F < {args.min_f}", file=sys.stderr)
        return 1
    return 0


def cmd_success(args) -> int:
    run = _make_run_dir(args, "success")
    _write_manifest(run, "success", args, ["success.json"])
    params, prop, ideal, n_t = _fidelity_pipeline(args)
    succ = success_probabilities(prop.comp_block(), ideal)
    for key, val in succ.items():
        print(f"{key:>6}: {val:.6f}")
    _dump_json(succ, run / "success.json")
    print(f"run dir: {run}")
    return 0


def cmd_evolve(args) -> int:
    run = _make_run_dir(args, "evolve")
    _write_manifest(run, "evolve", args, ["propagator.json"])
    device = load_device(args.device)
    params = _load_single_record(args)
    ops = build_system(device)
    program = _build_program(params, device)
    cfg = _evolution_config(args)
    if args.columns == "full":
        cfg = replace(cfg, columns=np.arange(ops.dimension))
    prop = evolve(program, ops, cfg)
    prop.save(run / "propagator.json")
    print(f"propagated {prop.matrix.shape[1]} columns, "
          f"{prop.n_steps} steps of {prop.tau_ns*1e3:.3f} ps "
          f"({prop.frame} frame)")
    print(f"run dir: {run}")
    return 0


def _parse_initial(text: str, n_t: int):
    try:
        k_str, bits = text.split(",")
        label = (int(k_str),) + tuple(int(b) for b in bits.strip())
    except ValueError as exc:
        raise ValueError(
            f"bad --initial {text!r}; want e.g. '0,010' "
            "(resonator level, one digit per transmon)") from exc
    if len(label) != n_t + 1:
        raise ValueError(f"--initial needs {n_t} transmon digits")
    return label


def cmd_bloch(args) -> int:
    run = _make_run_dir(args, "bloch")
    _write_manifest(run, "bloch", args, ["trajectory.csv", "bloch_long.csv"])
    device = load_device(args.device)
    params = _load_single_record(args)
    ops = build_system(device)
    program = _build_program(params, device)
    n_t = len(device.transmons)
    label = _parse_initial(args.initial, n_t)
    cfg = replace(_evolution_config(args), record_stride=args.stride)
    record = bloch_trajectory(program, ops, cfg, label)
    record.to_csv(run / "trajectory.csv")
    # fully melted variant: one (time, qubit, component, value) per row
    with open(run / "bloch_long.csv", "w") as fh:
        fh.write("t_ns,qubit,component,value\n")
        comps = ("bloch_x", "bloch_y", "bloch_z", "leak_pop")
        for it, t in enumerate(record.times):
            for q in range(n_t):
                vals = (*record.bloch[q, it], record.leak_pop[q, it])
                for name, v in zip(comps, vals):
                    fh.write(f"{t:.6f},{q},{name},{v:.9g}\n")
            fh.write(f"{t:.6f},-1,res_excited_prob,{record.res_excited[it]:.9g}\n")
    zfin = record.bloch[:, -1, 2]
    print("final Bloch z per transmon:",
          " ".join(f"{z:+.4f}" for z in zfin))
    print(f"max resonator excitation: {np.max(record.res_excited):.4g}")
    print(f"run dir: {run}")
    return 0


def cmd_optimize(args) -> int:
    if bool(args.pulse) == bool(args.resume):
        raise ValueError("need exactly one of --pulse or --resume")
    if args.resume:
        args.pulse = str(Path(args.resume) / "params_out.json")
    run = _make_run_dir(args, "optimize")
    _write_manifest(run, "optimize", args,
                    ["params_in.json", "params_out.json", "trace.csv",
                     "report.json"])
    device = load_device(args.device)
    params = _load_single_record(args)
    if isinstance(params, EcrParams):
        raise PulseError("optimize supports the single-CR protocol records")
    _dump_json(params.to_record(), run / "params_in.json")
    ops = build_system(device)
    free = tuple(s for s in (args.free or "").split(",") if s)
    cfg = OptimizeConfig(
        tau_ns=args.tau_ps * 1e-3, method=args.method,
        inner_samples=args.inner_M, final_samples=args.M, mc_seed=args.seed,
        nm=NmConfig(max_evals=args.budget),
    )
    cal = optimize_gate(ops, params, free, cfg)
    _dump_json(cal.params.to_record(), run / "params_out.json")
    cal.trace.to_csv(run / "trace.csv")
    _dump_json(cal.report.to_json_dict(), run / "report.json")
    print(f"F = {cal.report.fidelity:.6f} +- {cal.report.stderr:.6f} after "
          f"{cal.trace.n_evals} evaluations ({cal.n_evolutions} evolutions)")
    if not cal.trace.converged:
        print("budget exhausted; best-so-far returned", file=sys.stderr)
    if cal.local_maximum:
        print("warning: flagged as a local maximum", file=sys.stderr)
    print(f"run dir: {run}")
    if args.min_f is not None and cal.report.fidelity < args.min_f:
        print(f"threshold failed: F < {args.min_f}", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    axes = _parse_axes_required(args)
    run = _make_run_dir(args, "sweep")
    _write_manifest(run, "sweep", args, ["sweep.csv"])
    device = load_device(args.device)
    params = _load_single_record(args)
    ops = build_system(device)
    cfg = OptimizeConfig(tau_ns=args.tau_ps * 1e-3, method=args.method,
                         inner_samples=args.inner_M, mc_seed=args.seed)
    rows = sweep_metric(ops, params, axes, cfg)
    names = list(axes.keys()) + ["mean_success", "fidelity"]
    with open(run / "sweep.csv", "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(f"{row[n]:.9g}" for n in names) + "\n")
    best = max(rows, key=lambda r: r["fidelity"])
    print(f"{len(rows)} grid points; best F = {best['fidelity']:.5f} at "
          + ", ".join(f"{n}={best[n]:.6g}" for n in axes))
    print(f"run dir: {run}")
    return 0


def _parse_axes_required(args) -> dict:
    axes = _parse_axes(args.axis)
    if not axes:
        raise ValueError("need at least one --axis name=lo:hi:n")
    return axes


def cmd_seed_search(args) -> int:
    axes = _parse_axes_required(args)
    run = _make_run_dir(args, "seed-search")
    _write_manifest(run, "seed-search", args, ["sweep.csv", "params_out.json"])
    device = load_device(args.device)
    params = _load_single_record(args)
    ops = build_system(device)
    cfg = OptimizeConfig(tau_ns=args.tau_ps * 1e-3, method=args.method,
                         inner_samples=args.inner_M, mc_seed=args.seed)
    report = sweet_spot_search(ops, params, axes, cfg)
    report.to_csv(run / "sweep.csv")
    order = report.ranked()
    print("best CR points (score = success variance + conditional overlap):")
    for rank, idx in enumerate(order[:5]):
        pt = ", ".join(f"{k}={v:.6g}" for k, v in report.points[idx].items())
        print(f"  #{rank+1}: score={report.scores[idx]:.5f}  {pt}")
    best = report.points[order[0]]
    seeded = params
    name_map = {"f1": "f1", "TS": "t_s", "OmegaS": "omega_s", "rho": "rho",
                "gamma1": "gamma1"}
    for key, val in best.items():
        seeded = replace(seeded, **{name_map[key]: val})
    _dump_json(seeded.to_record(), run / "params_out.json")
    print(f"run dir: {run}")
    return 0


def cmd_reproduce(args) -> int:
    table = str(args.table)
    if table not in _FIXTURE_TABLES:
        raise ValueError("--table must be one of 3, 4, 5")
    pulse_fixture, device_fixture = _FIXTURE_TABLES[table]
    pulse_path = _fixture_path(pulse_fixture)
    device_path = Path(args.device) if args.device else _fixture_path(device_fixture)
    with open(pulse_path) as fh:
        raw_records = json.load(fh)
    wanted = None
    if args.rows:
        wanted = {r.strip().lower() for r in args.rows.split(",")}
        known = {rec["label"].lower() for rec in raw_records}
        missing = wanted - known
        if missing:
            raise ValueError(f"unknown rows {sorted(missing)}; "
                             f"have {sorted(known)}")
    args.pulse = str(pulse_path)
    args.device = str(device_path)
    run = _make_run_dir(args, "reproduce")
    _write_manifest(run, "reproduce", args,
                    ["summary.csv", "summary.md", "params"])
    device = load_device(device_path)
    ops = build_system(device)
    n_t = len(device.transmons)
    floor = 0.99 if table == "5" else 0.95
    (run / "params").mkdir()

    results = []
    for rec in raw_records:
        label = rec["label"]
        if wanted and label.lower() not in wanted:
            continue
        f_ref = float(rec.get("F_ref", np.nan))
        succ_ref = rec.get("mean_success_ref")
        try:
            results.append(_reproduce_row(
                rec, ops, device, n_t, args, run, floor, f_ref, succ_ref))
        except _INPUT_ERRORS as exc:
            print(f"{label}: failed ({exc})", file=sys.stderr)
            results.append({"label": label, "F_ref": f_ref,
                            "status": "error", "passed": False})
    _write_reproduce_summary(run, results, floor)
    print(f"run dir: {run}")
    if not all(r["passed"] for r in results):
        return 1
    return 0


def _reproduce_row(rec, ops, device, n_t, args, run, floor, f_ref, succ_ref):
    label = rec["label"]
    params = record_to_params(rec)
    if args.layout is not None:
        params = replace(params, cr_layout=args.layout)
    cfg = OptimizeConfig(
        tau_ns=args.tau_ps * 1e-3, method=args.method,
        inner_samples=args.inner_M, final_samples=args.M, mc_seed=args.seed,
        nm=NmConfig(max_evals=args.budget),
    )
    ideal = ideal_cnot(n_t, params.control, params.target)
    t0 = time.monotonic()

    # stage 1: evolve the printed point, refit the frame-dependent VZ angles
    program = _build_program(params, device)
    prop = evolve(program, ops, EvolutionConfig(tau_ns=cfg.tau_ns,
                                                method=cfg.method))
    blk = prop.comp_block()
    thetas, _ = vz_fit(blk, ideal, n_samples=cfg.inner_samples,
                       seed=cfg.mc_seed)
    fitted = replace(params, thetas=tuple(thetas))
    report = average_fidelity(apply_vz(blk, tuple(thetas)), ideal,
                              n_samples=cfg.final_samples, seed=cfg.mc_seed)
    fidelity = report.fidelity
    succ = success_probabilities(blk, ideal)["mean"]
    stage = "vz-fit"
    evals = 0

    # stage 2: local re-optimization when the printed point is not enough
    good = fidelity >= floor and (np.isnan(f_ref) or abs(fidelity - f_ref) <= args.tol)
    if not good and not isinstance(params, EcrParams) and args.budget > 0:
        free = ("f1", "f2", "TX", "TS", "OmegaX", "OmegaS", "rho", "gamma1",
                "gamma2", "theta0", "theta1", "theta2")[:9 + n_t]
        cal = optimize_gate(ops, fitted, free, cfg)
        if cal.report.fidelity > fidelity:
            fitted, report, fidelity = cal.params, cal.report, cal.report.fidelity
            succ = cal.report.mean_success
            stage = "re-optimized"
        evals = cal.trace.n_evals
        cal.trace.to_csv(run / "params" / f"{label}_trace.csv")
    wall = time.monotonic() - t0
    _dump_json(fitted.to_record(), run / "params" / f"{label}.json")
    delta = abs(fidelity - f_ref) if not np.isnan(f_ref) else np.nan
    passed = fidelity >= floor
    print(f"{label}: F_ref={f_ref:.4f}  F={fidelity:.4f}  |dF|={delta:.4f}  "
          f"succ={succ:.4f}  [{stage}, {evals} evals, {wall:.0f}s]"
          f"{'' if passed else '  FAILED'}")
    return {
        "label": label, "F_ref": f_ref, "F_achieved": fidelity,
        "abs_delta": delta, "mean_success": succ,
        "mean_success_ref": succ_ref, "stage": stage, "evals": evals,
        "wall_s": wall, "status": "ok", "passed": passed,
    }


def _write_reproduce_summary(run, results, floor) -> None:
    cols = ("label", "F_ref", "F_achieved", "abs_delta", "mean_success",
            "mean_success_ref", "stage", "evals", "wall_s", "status",
            "passed")
    with open(run / "summary.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in results:
            vals = []
            for c in cols:
                v = r.get(c)
                if isinstance(v, float):
                    vals.append(f"{v:.6g}")
                else:
                    vals.append("" if v is None else str(v))
            fh.write(",".join(vals) + "\n")
    with open(run / "summary.md", "w") as fh:
        fh.write(f"# Gate reproduction summary (pass floor F >= {floor})\n\n")
        fh.write("| gate | F_ref | F_achieved | abs delta | mean success | stage | pass |\n")
        fh.write("|---|---|---|---|---|---|---|\n")
        for r in results:
            if r["status"] != "ok":
                fh.write(f"| {r['label']} | {r['F_ref']:.4f} | error | - | - | - | no |\n")
                continue
            fh.write(
                f"| {r['label']} | {r['F_ref']:.4f} | {r['F_achieved']:.4f} "
                f"| {r['abs_delta']:.4f} | {r['mean_success']:.4f} "
                f"| {r['stage']} | {'yes' if r['passed'] else 'no'} |\n")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p, device_required=True, pulse=True):
    p.add_argument("--device", required=device_required,
                   help="device JSON file")
    if pulse:
        p.add_argument("--pulse", help="pulse parameter JSON file")
    p.add_argument("--tau-ps", type=float, default=1.0, dest="tau_ps",
                   help="Trotter step in picoseconds (default 1)")
    p.add_argument("--method", choices=("trotter2", "exact"),
                   default="trotter2")
    p.add_argument("--frame", choices=("eigen", "lab"), default="eigen")
    p.add_argument("--layout", choices=("literal", "inclusive"), default=None,
                   help="override the CR plateau convention of the record")
    p.add_argument("--seed", type=int, default=7, help="Monte-Carlo seed")
    p.add_argument("--M", type=int, default=10000,
                   help="Monte-Carlo sample count")
    p.add_argument("--inner-M", type=int, default=512, dest="inner_M",
                   help="samples per optimizer evaluation")
    p.add_argument("--out", default=None,
                   help="output root (default $CRSIM_OUT or ./crsim_runs)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="crsim",
        description="Pulse-level simulation and calibration of "
                    "resonator-coupled transmon CNOT gates.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("spectrum", help="transmon frequencies and detunings")
    _add_common(p, pulse=False)
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("validate", help="parse and sanity-check input files")
    _add_common(p, device_required=False)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("fidelity", help="average gate fidelity of a record")
    _add_common(p)
    p.add_argument("--min-f", type=float, default=None, dest="min_f",
                   help="exit 1 unless F reaches this value")
    p.set_defaults(fn=cmd_fidelity)

    p = sub.add_parser("success", help="basis success probabilities")
    _add_common(p)
    p.set_defaults(fn=cmd_success)

    p = sub.add_parser("evolve", help="propagate and dump the propagator")
    _add_common(p)
    p.add_argument("--columns", choices=("comp", "full"), default="comp")
    p.set_defaults(fn=cmd_evolve)

    p = sub.add_parser("bloch", help="Bloch trajectories of one initial state")
    _add_common(p)
    p.add_argument("--initial", required=True,
                   help="initial label, e.g. '0,010' (resonator, transmons)")
    p.add_argument("--stride", type=int, default=100,
                   help="record every N-th step")
    p.set_defaults(fn=cmd_bloch)

    p = sub.add_parser("optimize", help="Nelder-Mead gate calibration")
    _add_common(p)
    p.add_argument("--free", default="",
                   help="comma list of parameters to optimize "
                        "(default: none, evaluate the seed)")
    p.add_argument("--budget", type=int, default=300,
                   help="maximum objective evaluations")
    p.add_argument("--resume", default=None,
                   help="run directory whose params_out.json seeds this run")
    p.add_argument("--min-f", type=float, default=None, dest="min_f")
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("sweep", help="grid sweep of success and fidelity")
    _add_common(p)
    p.add_argument("--axis", action="append",
                   help="name=lo:hi:n (repeatable)")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("seed-search",
                       help="score CR-only grid points for calibration seeds")
    _add_common(p)
    p.add_argument("--axis", action="append",
                   help="CR axis name=lo:hi:n (f1, TS, OmegaS, rho, gamma1)")
    p.set_defaults(fn=cmd_seed_search)

    p = sub.add_parser("reproduce",
                       help="re-derive the shipped reference gate designs")
    _add_common(p, device_required=False)
    p.add_argument("--table", required=True,
                   help="design set: 3 = three-transmon CNOTs, "
                        "4 = two-transmon echoed-CR, "
                        "5 = two-transmon single-CR")
    p.add_argument("--rows", default=None,
                   help="comma list of gate labels (default: all)")
    p.add_argument("--budget", type=int, default=300,
                   help="re-optimization evaluations per row")
    p.add_argument("--tol", type=float, default=0.015,
                   help="acceptable |F_achieved - F_ref|")
    p.set_defaults(fn=cmd_reproduce)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
