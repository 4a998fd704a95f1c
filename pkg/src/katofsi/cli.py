"""Command-line entry point: ``katofsi {simulate,sweep,diagnose,corrector,identities}``."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from pathlib import Path

import yaml

from .config import OUTPUT_ENV, ConfigError, RunConfig, apply_overrides, dump_config, from_dict

log = logging.getLogger("katofsi")


def _load(args) -> RunConfig:
    raw = {}
    if args.config:
        raw = yaml.safe_load(Path(args.config).read_text()) or {}
    raw = apply_overrides(raw, args.set)
    return from_dict(raw)


def _default_out(name: str) -> Path:
    root = os.environ.get(OUTPUT_ENV)
    return (Path(root) if root else Path("runs")) / name


def cmd_simulate(args) -> int:
    from .body import BodyState
    from .euler import euler_run
    from .sweep import simulate, time_step, write_trajectory

    cfg = _load(args)
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(dump_config(cfg))
    if cfg.mode == "euler":
        body0 = BodyState.at_rest(cfg.initial.ell, cfg.initial.r)
        traj = euler_run(cfg.make_grid(), cfg.geometry(), cfg.gravity, cfg.time.T, time_step(cfg, 0.0),
                         None, body0, cfg.time.sample_stride)
        write_trajectory(out / "euler", traj)
        print(f"euler run written to {out / 'euler'}")
        return 0
    nu = args.nu if args.nu is not None else cfg.fluid.nu_list[0]
    traj = simulate(cfg, nu, out / f"nu_{nu:.6g}", frozen_body=cfg.mode == "frozen_body")
    last = traj.ledger[-1]
    print(f"nu={nu:g} T={last.t:g} KE={last.kinetic:.6g} residual={last.residual('deform', traj.ledger[0].kinetic):.3e}")
    return 0


def _print_rows(rows):
    cols = ("nu", "strip_deform", "total_deform", "energy_distance", "weak_gap_max", "hardy_max")
    print("  ".join(f"{c:>15}" for c in cols) + "  status")
    for r in rows:
        print("  ".join(f"{getattr(r, c):15.6g}" for c in cols) + f"  {r.status}")


def cmd_sweep(args) -> int:
    from .sweep import run_sweep

    cfg = _load(args)
    res = run_sweep(cfg)
    _print_rows(res.rows)
    print(f"report: {res.out_dir / 'report.csv'}")
    return 0 if all(r.ok for r in res.rows) else 1


def cmd_diagnose(args) -> int:
    from .sweep import diagnose_existing

    cfg = _load(args)
    res = diagnose_existing(cfg)
    _print_rows(res.rows)
    return 0 if all(r.ok for r in res.rows) else 1


def cmd_corrector(args) -> int:
    from .experiments import CORRECTOR_BANDS, corrector_experiment
    from .io import write_summary

    nus = tuple(float(x) for x in args.nu_list.split(","))
    exp = corrector_experiment(nus, c=args.c, t=args.t, cells=args.cells, profile=args.profile)
    out = Path(args.out) if args.out else _default_out("corrector")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "corrector_norms.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["nu", "sup", "h_norm", "dt_h_norm", "grad_strip", "d_sup"])
        for n in exp.norms:
            w.writerow([repr(n.nu), repr(n.sup), repr(n.h_norm), repr(n.dt_h_norm), repr(n.grad_strip), repr(n.d_sup)])
    write_summary(out / "corrector_exponents.json",
                  {"exponents": exp.exponents, "max_divergence_ratio": exp.max_divergence_ratio})
    ok = True
    for k, (target, tol) in CORRECTOR_BANDS.items():
        good = abs(exp.exponents[k] - target) <= tol
        ok &= good
        print(f"{k:>10}: {exp.exponents[k]:+.4f}  (expected {target:+.2f} +/- {tol:.2f})  {'ok' if good else 'OUT'}")
    return 0 if ok else 1


def cmd_identities(args) -> int:
    from .experiments import identity_suite

    grids = tuple(int(x) for x in args.grids.split(","))
    rows, orders = identity_suite(args.n_fields, grids, args.seed)
    out = Path(args.out) if args.out else _default_out("identities")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "identities.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "n", "max_gap"])
        for r in rows:
            w.writerow([r.kind, r.n, repr(r.max_gap)])
    for kind, p in orders.items():
        last = [r for r in rows if r.kind == kind][-1]
        ps = "round-off" if math.isinf(p) else f"{p:.2f}"
        print(f"{kind:>17}: gap {last.max_gap:.3e} at n={last.n}, order {ps}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="katofsi", description="Inviscid-limit lab for a rigid body in 2D viscous flow")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", "-c", help="YAML run configuration")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key by dot path, e.g. grid.n=256")

    sp = sub.add_parser("simulate", help="one NS, frozen-body or Euler run")
    with_config(sp)
    sp.add_argument("--nu", type=float, help="viscosity (default: first of fluid.nu_list)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="ν-sweep with diagnostics and report")
    with_config(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("diagnose", help="recompute the report from stored samples")
    with_config(sp)
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("corrector", help="fake-layer scaling experiment")
    sp.add_argument("--nu-list", default="8e-3,4e-3,2e-3,1e-3")
    sp.add_argument("--c", type=float, default=20.0)
    sp.add_argument("--t", type=float, default=0.5)
    sp.add_argument("--cells", type=float, default=8.0, help="grid cells across the strip")
    sp.add_argument("--profile", default="quadratic", choices=("quadratic", "cubic"))
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_corrector)

    sp = sub.add_parser("identities", help="integration-by-parts identity suite")
    sp.add_argument("--n-fields", type=int, default=20)
    sp.add_argument("--grids", default="64,128,256")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_identities)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
