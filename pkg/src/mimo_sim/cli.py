"""Command-line front end: `mimo-sim run|validate|dump-layout`.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .array_geometry import write_layout_csv
from .config import load_config, parse_length
from .em_coupling import coupling_for_layout, write_impedance_csv
from .errors import InvalidArgumentError, MimoSimError, NumericFailureError
from .sweeps import SWEEP_NAMES, layout_for, run_sweep
from .validate import run_validation

USAGE_ERROR, NUMERIC_ERROR = 2, 3


def _parse_axis(text: str, wavelength: float, as_int: bool = False):
    """Axis values: comma list, or start:stop[:step] (lengths may carry lam)."""

    def conv(tok):
        val = parse_length(tok, wavelength)
        return int(round(val)) if as_int else val

    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise InvalidArgumentError(f"bad axis spec {text!r}")
        start, stop = conv(parts[0]), conv(parts[1])
        if as_int:
            step = conv(parts[2]) if len(parts) == 3 else 1
            if step <= 0:
                raise InvalidArgumentError(f"bad step in {text!r}")
            return list(range(start, stop + 1, step))
        if len(parts) == 3:
            step = conv(parts[2])
            if step <= 0:
                raise InvalidArgumentError(f"bad step in {text!r}")
            return list(np.arange(start, stop + step / 2, step))
        return list(np.linspace(start, stop, 10))
    return [conv(tok) for tok in text.split(",") if tok.strip()]


def _overrides(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise InvalidArgumentError(f"--set expects key=value, got {pair!r}")
        key, val = pair.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimo-sim",
        description="Massive MIMO uplink simulator for irregular coupled antenna arrays",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a named sweep and write CSV results")
    run_p.add_argument("sweep", choices=SWEEP_NAMES)
    run_p.add_argument("--config", help="INI-style config file")
    run_p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")
    run_p.add_argument("--out", default="results", help="output directory")
    run_p.add_argument("--M", help="antenna-count axis, e.g. 10:400:10 or 20,100")
    run_p.add_argument("--R", help="radius axis in meters or lam units, e.g. 0.5lam:5lam")
    run_p.add_argument("--zeta", help="irregularity axis, e.g. 0,1.5")
    run_p.add_argument("--snr", help="UT SNR axis in dB, e.g. 0:15:1")
    run_p.add_argument("--K", help="user count for ser/outage sweeps")
    run_p.add_argument("--layouts", help="layout draws per point")

    val_p = sub.add_parser("validate", help="run the acceptance validation suite")
    val_p.add_argument("--config", help="INI-style config file")
    val_p.add_argument("--set", action="append", metavar="KEY=VALUE")
    val_p.add_argument("--criteria", help="comma list of check numbers (default: all)")
    val_p.add_argument("--out", help="also write the report to this file")

    dump_p = sub.add_parser("dump-layout", help="generate and write an antenna layout CSV")
    dump_p.add_argument("--config", help="INI-style config file")
    dump_p.add_argument("--set", action="append", metavar="KEY=VALUE")
    dump_p.add_argument("--out", default="layout.csv")
    dump_p.add_argument("--impedance", help="also write the mutual impedance matrix CSV")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args.set))
        if args.command == "run":
            axes = {}
            lam = cfg.wavelength
            if args.M:
                axes["M"] = _parse_axis(args.M, lam, as_int=True)
            if args.R:
                axes["R"] = _parse_axis(args.R, lam)
            if args.zeta:
                axes["zeta"] = _parse_axis(args.zeta, lam)
            if args.snr:
                axes["snr"] = _parse_axis(args.snr, lam)
            if args.K:
                axes["K"] = _parse_axis(args.K, lam, as_int=True)
            if args.layouts:
                axes["layouts"] = _parse_axis(args.layouts, lam, as_int=True)
            path, summary = run_sweep(args.sweep, cfg, args.out, axes)
            print(f"wrote {path}")
            for line in summary:
                print(line)
            return 0
        if args.command == "validate":
            criteria = None
            if args.criteria:
                criteria = [int(tok) for tok in args.criteria.split(",") if tok.strip()]
            results, report = run_validation(cfg, criteria)
            sys.stdout.write(report)
            for r in results:
                print(f"check {r.cid}: {r.seconds:.1f}s", file=sys.stderr)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(report)
            return 0 if all(r.passed for r in results) else 1
        if args.command == "dump-layout":
            layout = layout_for(cfg, cfg.M, cfg.radius(), "dump")
            write_layout_csv(layout, args.out, seed=cfg.seed)
            print(f"wrote {args.out}")
            if args.impedance:
                mats = coupling_for_layout(layout, cfg.coupling_params())
                write_impedance_csv(mats.Z_C, args.impedance)
                print(f"wrote {args.impedance}")
            return 0
        parser.error(f"unknown command {args.command!r}")
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NUMERIC_ERROR
    except MimoSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
