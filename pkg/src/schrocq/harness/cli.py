"""Command line interface.  Exit status 0 iff every gate of the command passes,
1 if a gate fails, 2 on invalid input."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

from ..bem3d import MeshError, read_mesh
from .config import PRESETS, ConfigError, load_config, preset


def _load(spec: str):
    if spec.startswith("preset:"):
        return preset(spec.split(":", 1)[1])
    return load_config(spec)


def _cmd_run(args) -> int:
    from .run import run
    cfg = _load(args.config)
    res = run(cfg, output=args.output)
    print(res.summary())
    return 0 if res.passed else 1


def _cmd_study(args) -> int:
    from .study import convergence_study
    cfg = _load(args.config)
    rep = convergence_study(cfg, args.levels, args.mode)
    text = rep.table()
    print(text)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    gates = rep.gates()
    print("gates " + " ".join(f"{k}={'pass' if v else 'FAIL'}" for k, v in gates.items()))
    return 0 if rep.passed else 1


def _cmd_weights(args) -> int:
    from .selftests import weights_selftest
    checks = weights_selftest(k=args.k, N=args.N, Q=args.Q, tol=args.tol)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.tableau:12s} F={c.symbol:4s} "
              f"max_dev={c.deviation:.3e} tol={c.tol:.0e} time={c.runtime * 1e3:.1f}ms")
    return 0 if all(c.passed for c in checks) else 1


def _cmd_calderon(args) -> int:
    from .selftests import calderon_selftest
    mesh = read_mesh(args.mesh) if args.mesh else None
    rep = calderon_selftest(k=args.k, tableau=args.tableau, levels=args.levels, mesh=mesh)
    for lv in rep.levels:
        print(f"triangles={lv.n_triangles:6d} h={lv.h:.4f} s={lv.s.real:+.4f}{lv.s.imag:+.4f}j "
              f"row1={lv.row1:.3e} row2={lv.row2:.3e}")
    for row in ("row1", "row2"):
        for s, rates in rep.rates(row).items():
            print(f"{row} s={s.real:+.4f}{s.imag:+.4f}j rates " + " ".join(f"{r:.2f}" for r in rates))
    ok = rep.passed(args.min_rate)
    print(f"{'PASS' if ok else 'FAIL'} calderon rates >= {args.min_rate}")
    return 0 if ok else 1


def _cmd_preset(args) -> int:
    print(preset(args.name).to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="schrocq", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one configuration and write the per-step CSV")
    r.add_argument("config", help="JSON config path or preset:NAME")
    r.add_argument("-o", "--output", help="CSV path (overrides the config)")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("study", help="refinement study with observed orders")
    s.add_argument("config", help="JSON config path or preset:NAME")
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--mode", choices=("time", "simultaneous"), default="time")
    s.add_argument("-o", "--output", help="write the report table here")
    s.set_defaults(func=_cmd_study)

    w = sub.add_parser("weights-selftest", help="contour weights against exact Taylor coefficients")
    w.add_argument("--k", type=float, default=0.05)
    w.add_argument("--N", type=int, default=64)
    w.add_argument("--Q", type=int, default=None)
    w.add_argument("--tol", type=float, default=1e-8)
    w.set_defaults(func=_cmd_weights)

    c = sub.add_parser("calderon-selftest", help="Calderon residual rates for a point source")
    c.add_argument("--mesh", help="closed surface mesh file (default: cube of side 2)")
    c.add_argument("--levels", type=int, default=3)
    c.add_argument("--k", type=float, default=0.1)
    c.add_argument("--tableau", default="radau_iia_2")
    c.add_argument("--min-rate", type=float, default=1.0)
    c.set_defaults(func=_cmd_calderon)

    pr = sub.add_parser("preset", help="print a preset configuration as JSON")
    pr.add_argument("name", choices=sorted(PRESETS))
    pr.set_defaults(func=_cmd_preset)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore")
    try:
        return args.func(args)
    except (ConfigError, MeshError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
