"""Command-line entry point ``mflab``.

Exit codes: 0 success, 2 configuration error, 3 solver abort, 4 invalid
report (or failed self-test), 130 interrupted.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .config import EXPERIMENTS, ConfigError, config_schema, parse_config
from .errors import MflabError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INVALID, EXIT_INTERRUPT = 0, 2, 3, 4, 130
OUTPUT_ROOT_ENV = "MFLAB_OUTPUT_ROOT"

DESCRIPTIONS = {
    "n_rate": "classical N-particle weak error vs hydro reference (quadrature or Monte Carlo init)",
    "h_rate": "Hartree + Wigner weak error vs hydro reference, and the t = 0 Wigner defect",
    "coupled_kac": "Kac path h = hbar/N: combined error against the envelope C (h + 1/N)",
    "sensitivity_scaling": "tangent-flow diagonal / off-diagonal blocks over an N ladder",
    "mixed_rate": "mixed-state Wigner pairing vs |a(x, v)|^2 over an h ladder",
    "equivalence": "hydro vs Vlasov cloud before the caustic, free-focusing caustic time",
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mflab", description="Mean-field and semiclassical limit experiments.")
    p.add_argument("--version", action="version", version=f"mflab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log ladder progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("--config", required=True, help="YAML configuration file")
    r.add_argument("--threads", type=int, help="override the config thread count")
    r.add_argument("--output-dir", help="output directory (default: $%s/<experiment>-<hash>)" % OUTPUT_ROOT_ENV)
    r.add_argument("--seed", type=int, help="override the config seed")

    v = sub.add_parser("validate-config", help="validate a config and print it with defaults filled")
    v.add_argument("--config", help="YAML configuration file")
    v.add_argument("--schema", action="store_true", help="print the JSON schema instead")

    sub.add_parser("list-experiments", help="list experiment kinds")
    sub.add_parser("self-test", help="run the fast example checks")
    return p


def _apply_overrides(cfg, args):
    upd = {}
    if args.threads is not None:
        upd["threads"] = args.threads
    if args.seed is not None:
        upd["seed"] = args.seed
    if args.output_dir is not None:
        upd["output_dir"] = args.output_dir
    if not upd:
        return cfg
    from .config import config_from_dict
    return config_from_dict({**cfg.model_dump(mode="json"), **upd})


def resolve_output_dir(cfg) -> Path:
    if cfg.output_dir:
        return Path(cfg.output_dir)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "mflab-output"))
    return root / f"{cfg.experiment}-{cfg.config_hash()[:12]}"


def _set_threads(n: int):
    import numba
    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def cmd_run(args) -> int:
    from .io import RunManifest, write_report, write_text
    from .lab.experiments import run_experiment
    try:
        cfg = _apply_overrides(parse_config(args.config), args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    _set_threads(cfg.threads)
    out = resolve_output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(cfg.config_hash(), cfg.experiment)
    written = [write_text(out / "config.yaml", cfg.canonical_yaml())]
    man.write(out)
    t0 = time.perf_counter()
    try:
        report = run_experiment(cfg)
        man.stages["experiment"] = time.perf_counter() - t0
        t1 = time.perf_counter()
        written += write_report(report, out, cfg.figures)
        man.stages["write"] = time.perf_counter() - t1
    except KeyboardInterrupt:
        man.add_files(written, out)
        man.error = "interrupted"
        man.write(out)
        print("interrupted; manifest marked incomplete", file=sys.stderr)
        return EXIT_INTERRUPT
    except (MflabError, ValueError) as err:
        man.stages["experiment"] = time.perf_counter() - t0
        man.add_files(written, out)
        man.finish("failed", False, f"{type(err).__name__} during {cfg.experiment}: {err}")
        man.write(out)
        print(f"solver error in {cfg.experiment}: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_SOLVER
    man.add_files(written, out)
    man.finish("complete", report.valid)
    man.write(out)
    for line in report.summary_lines():
        print(line)
    print(f"outputs: {out}")
    return EXIT_OK if report.valid else EXIT_INVALID


def cmd_validate(args) -> int:
    if args.schema:
        print(json.dumps(config_schema(), indent=2, sort_keys=True))
        return EXIT_OK
    if not args.config:
        print("validate-config needs --config or --schema", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(args.config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    print(cfg.to_yaml(), end="")
    print(f"# config hash: {cfg.config_hash()}")
    return EXIT_OK


def cmd_list(args) -> int:
    for name in EXPERIMENTS:
        print(f"{name:22s} {DESCRIPTIONS[name]}")
    return EXIT_OK


def cmd_self_test(args) -> int:
    from .selftest import run_self_test
    return EXIT_OK if run_self_test() else EXIT_INVALID


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "validate-config": cmd_validate, "list-experiments": cmd_list,
                "self-test": cmd_self_test}
    try:
        return handlers[args.command](args)
    except KeyboardInterrupt:
        return EXIT_INTERRUPT


if __name__ == "__main__":
    sys.exit(main())
