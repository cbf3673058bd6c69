"""Command-line interface: ``automodal run | synth | cmif``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from .diagnostics import export_stabilization, write_cmif
from .errors import AutomodalError, ConfigError
from .frf import read_frf, write_frf
from .pipeline import PipelineConfig, run_pipeline, write_report
from .synthetic import ModeSpec, case_one_spec, generate_synthetic

log = logging.getLogger("automodal")


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _order_range(text: str):
    try:
        parts = [int(p) for p in text.split(":")]
    except ValueError as exc:
        raise ConfigError(f"order range must be START:STOP[:STEP], got {text!r}") from exc
    if len(parts) == 2:
        parts.append(2)
    if len(parts) != 3 or parts[2] <= 0:
        raise ConfigError(f"order range must be START:STOP[:STEP], got {text!r}")
    return range(parts[0], parts[1] + 1, parts[2])


def cmd_run(args) -> int:
    frf = read_frf(args.input)
    data = _load_json(args.config) if args.config else {}
    if args.seed is not None:
        data["seed"] = args.seed
    if args.em_order is not None:
        data["em_order"] = args.em_order
    if args.threads is not None:
        data["threads"] = args.threads
    cfg = PipelineConfig.from_dict(data)
    report = run_pipeline(frf, cfg)
    write_report(report, args.out)
    if args.cmif:
        write_cmif(frf, args.cmif)
    if args.stab:
        orders = _order_range(args.stab_orders) if args.stab_orders else range(2, report.em_order + 1, 2)
        export_stabilization(frf, orders, args.stab, report, cfg.block_rows)
    n_phys = len(report.physical)
    print(f"{len(report.clusters)} clusters, {n_phys} physical; report written to {args.out}")
    return 0


def cmd_synth(args) -> int:
    spec = _load_json(args.spec) if args.spec else {}
    modes = spec.get("modes")
    modes = case_one_spec() if modes is None else [
        ModeSpec(float(m["f_hz"]), float(m["xi"]), int(m.get("multiplicity", 1))) for m in modes]
    try:
        frf, truth = generate_synthetic(
            modes,
            n_u=int(spec.get("n_u", 2)),
            n_y=int(spec.get("n_y", 8)),
            band=spec.get("band", [0.0, 200.0]),
            n_lines=int(spec.get("n_lines", 1024)),
            noise_rms_ratio=float(spec.get("noise_rms_ratio", 0.05)),
            seed=int(args.seed if args.seed is not None else spec.get("seed", 0)),
            response_type=spec.get("response_type", "accelerance"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, AutomodalError):
            raise
        raise ConfigError(f"invalid synth spec: {exc}") from exc
    write_frf(frf, args.out)
    if args.truth:
        with open(args.truth, "w") as fh:
            json.dump([{"f_hz": m.f_hz, "xi": m.xi, "group": m.group} for m in truth.modes],
                      fh, indent=1)
    print(f"{frf.n_f} lines, {len(truth.modes)} modes written to {args.out}")
    return 0


def cmd_cmif(args) -> int:
    frf = read_frf(args.input)
    write_cmif(frf, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="automodal",
                                description="Automated modal parameter estimation from FRFs.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the full estimation pipeline")
    r.add_argument("--input", required=True, help="FRF file (.json or .csv)")
    r.add_argument("--config", help="pipeline configuration JSON")
    r.add_argument("--seed", type=int)
    r.add_argument("--em-order", type=int)
    r.add_argument("--threads", type=int)
    r.add_argument("--out", required=True, help="report JSON")
    r.add_argument("--stab", help="stabilization CSV")
    r.add_argument("--stab-orders", help="START:STOP[:STEP] orders for --stab")
    r.add_argument("--cmif", help="CMIF CSV")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("synth", help="generate a synthetic FRF dataset")
    s.add_argument("--spec", help="generator JSON; defaults to the twelve-mode case")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--truth", help="write the true modes as JSON")
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("cmif", help="export CMIF curves")
    c.add_argument("--input", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_cmif)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AutomodalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
