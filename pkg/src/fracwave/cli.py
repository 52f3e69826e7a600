"""``fracwave`` command line: subcommands share one flat option set that
mirrors the config keys. Flags override values from ``--config``."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io
from .config import SCHEMA, TASKS, parse_config
from .diagnostics import build_cutoff, classify, instability_experiment, monitor_invariance
from .errors import ConfigError, FracwaveError
from .evolution import StepPolicy, evolve
from .grid import Field, load_field, save_field
from .groundstate import (
    gamma_branch,
    mass_shoot,
    record_from_field,
    solve_mixed_fixed_lambda,
    solve_single_fractional,
    worker_count,
)

EXIT_TASK = 1
EXIT_CONFIG = 2


def _flag(key):
    return "--" + key.replace("_", "-")


def build_parser():
    parser = argparse.ArgumentParser(prog="fracwave", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        sp = sub.add_parser(task)
        sp.add_argument("--config", help="flat TOML file; flags override its values")
        for key, (typ, _) in SCHEMA.items():
            if key == "task":
                continue
            dest = "opt_" + key
            if typ is bool:
                sp.add_argument(_flag(key), dest=dest, action="store_const", const=True, default=None)
                sp.add_argument("--no-" + key.replace("_", "-"), dest=dest, action="store_const", const=False)
            else:
                sp.add_argument(_flag(key), dest=dest, default=None, metavar=key.upper())
    return parser


def _overrides(ns):
    return {k[4:]: v for k, v in vars(ns).items() if k.startswith("opt_") and v is not None}


def _policy(cfg):
    return StepPolicy(
        dt0=cfg["dt"],
        adapt=cfg["adapt"],
        dt_floor=cfg["dt_floor"],
        blowup_gradient_factor=cfg["blowup_factor"],
        monitor_every=cfg["monitor_every"],
        snapshot_every=cfg["snapshot_every"],
    )


def _seed_field(cfg):
    grid = cfg.grid
    width = cfg["seed_width"]
    r2 = sum(c**2 for c in grid.coords())
    return Field(grid, np.exp(-0.5 * r2 / width**2))


def _load(cfg, key):
    u = load_field(cfg[key])
    if u.grid.dim != cfg.model.N:
        raise ConfigError(f"{key} field has dim {u.grid.dim}, model has N={cfg.model.N}", key=key)
    return u


def task_groundstate(cfg):
    model = cfg.model
    outputs = []
    if cfg["c"] is not None:
        rec = mass_shoot(
            model,
            cfg["c"],
            cfg.grid,
            lam_range=(cfg["lambda_min"], cfg["lambda_max"]),
            tol=cfg["mass_tol"],
            seed=_seed_field(cfg),
            box=cfg["box"],
            points_per_width=cfg["points_per_width"],
        )
    elif not model.has_s2 and cfg.get("lambda", 1.0) == 1.0:
        rec = solve_single_fractional(model.s1, model.p, cfg.grid, seed=_seed_field(cfg))
    else:
        rec = solve_mixed_fixed_lambda(model, cfg.get("lambda", 1.0), cfg.grid, seed=_seed_field(cfg))
    out = cfg.path("out", "record.json")
    outputs.append(io.write_json(out, rec.to_dict()))
    if cfg["field"]:
        path = cfg.path("field")
        save_field(path, rec.field)
        outputs.append(path)
    return rec.to_dict(), outputs, 0 if rec.converged else EXIT_TASK


def task_evolve(cfg):
    model = cfg.model
    if cfg["init"]:
        psi0 = _load(cfg, "init")
    elif cfg["init_amplitude"] is not None:
        w = cfg["init_width"]
        r2 = sum(c**2 for c in cfg.grid.coords())
        psi0 = Field(cfg.grid, cfg["init_amplitude"] * np.exp(-0.5 * r2 / w**2))
    else:
        raise ConfigError("evolve needs init (a .frw file) or init_amplitude", key="init")
    cut = build_cutoff(cfg["cutoff_R"], psi0.grid) if cfg["cutoff_R"] else None
    policy = _policy(cfg)
    traj = evolve(psi0, cfg["T"], policy, model, cutoff=cut)
    outputs = [cfg.path("out", "traj.csv")]
    traj.write_csv(outputs[0])
    if cfg["snapshots"]:
        snap_dir = cfg.path("snapshots")
        os.makedirs(snap_dir, exist_ok=True)
        snaps = traj.snapshots or [(traj.times[-1], traj.final)]
        for i, (t, f) in enumerate(snaps):
            path = os.path.join(snap_dir, f"snap_{i:05d}.frw")
            save_field(path, f)
            outputs.append(path)
    summary = traj.summary()
    summary["mass_drift"] = traj.mass_drift()
    outputs.append(io.write_json(os.path.join(cfg["out_dir"], "evolve_summary.json"), summary))
    return summary, outputs, 0


def task_classify(cfg):
    model = cfg.model
    psi0 = _load(cfg, "init")
    phi = _load(cfg, "phi")
    phi_rec = record_from_field(phi, model.single_operator(), 1.0)
    verdict = classify(psi0, phi_rec, model)
    out = verdict.to_dict()
    out["phi_record"] = phi_rec.to_dict()
    outputs = [io.write_json(cfg.path("out", "verdict.json"), out)]
    if cfg["T"] is not None:
        traj = evolve(psi0, cfg["T"], _policy(cfg), model)
        out["simulation"] = traj.summary()
        if not model.is_mass_critical:
            out["invariance"] = monitor_invariance(traj, phi_rec, model)
        io.write_json(outputs[0], out)
    return out, outputs, 0


def task_gamma_sweep(cfg):
    model = cfg.model
    workers = cfg["workers"] or worker_count()
    branch = gamma_branch(
        model,
        cfg["c_list"],
        cfg.grid,
        workers=workers,
        lam_range=(cfg["lambda_min"], cfg["lambda_max"]),
        tol=cfg["mass_tol"],
        box=cfg["box"],
        points_per_width=cfg["points_per_width"],
    )
    rows = [
        (c, g, lam, rec.q_residual, rec.el_residual)
        for (c, g, lam), rec in zip(branch.samples, branch.records)
    ]
    csv_path = io.write_csv(cfg.path("out", "branch.csv"), ("c", "gamma", "lambda", "q_residual", "el_residual"), rows)
    report = {"monotonicity": branch.monotonicity(), "skipped": branch.skipped, "n_converged": len(rows)}
    rep_path = io.write_json(os.path.join(cfg["out_dir"], "branch_report.json"), report)
    return report, [csv_path, rep_path], 0 if not branch.skipped else EXIT_TASK


def task_instability(cfg):
    model = cfg.model
    uc = mass_shoot(
        model,
        cfg["c"],
        cfg.grid,
        lam_range=(cfg["lambda_min"], cfg["lambda_max"]),
        tol=cfg["mass_tol"],
        box=cfg["box"],
        points_per_width=cfg["points_per_width"],
    )
    policy = _policy(cfg)
    rows = []
    for tau in cfg["tau_list"]:
        r = instability_experiment(uc, tau, cfg["T"], policy, model)
        rows.append((r["tau"], r["energy_v"], r["energy_uc"], r["q_v"], r["hs_distance"], r["growth_factor"], r["verdict"], r["t_reached"]))
    header = ("tau", "energy_v", "energy_uc", "q_v", "hs_distance", "growth_factor", "verdict", "t_reached")
    path = io.write_csv(cfg.path("out", "instability.csv"), header, rows)
    return {"u_c": uc.to_dict(), "runs": [dict(zip(header, r)) for r in rows]}, [path], 0


def task_validate(cfg):
    from .validate import format_table, run_all

    rows = run_all()
    print(format_table(rows), file=sys.stderr)
    path = io.write_json(cfg.path("out", "validate.json"), rows)
    ok = all(r["passed"] for r in rows)
    return {"passed": ok, "checks": rows}, [path], 0 if ok else EXIT_TASK


TASK_FUNCS = {
    "groundstate": task_groundstate,
    "evolve": task_evolve,
    "classify": task_classify,
    "gamma-sweep": task_gamma_sweep,
    "instability": task_instability,
    "validate": task_validate,
}


def run(cfg):
    """Dispatch a resolved config; returns (result, outputs, exit status)."""
    result, outputs, status = TASK_FUNCS[cfg.task](cfg)
    io.write_manifest(cfg["out_dir"], cfg.to_dict(), outputs, {"exit_status": status})
    return result, outputs, status


def _error(exc, status):
    if isinstance(exc, FracwaveError):
        payload = exc.to_dict()
    else:
        payload = {"error": type(exc).__name__, "message": str(exc)}
    sys.stdout.write(io.dumps(payload))
    return status


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = parse_config(ns.config, _overrides(ns), task=ns.task)
    except FracwaveError as exc:
        return _error(exc, EXIT_CONFIG)
    try:
        result, _, status = run(cfg)
    except FracwaveError as exc:
        try:
            io.write_json(os.path.join(cfg["out_dir"], "error.json"), exc.to_dict())
        except OSError:
            pass
        return _error(exc, EXIT_TASK)
    sys.stdout.write(io.dumps(result))
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
