"""``pmecontract`` command line.

    pmecontract SCENARIO [--config PATH] [--out DIR] [--workers K] [--seed S]

Exit codes: 0 all checks passed, 2 configuration error, 3 solver
instability, 4 a check failed.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__, _backend
from .admissible import ParameterError
from .config import SCENARIOS, ConfigError, ExperimentConfig, parse_config
from .experiments import PIPELINES, run_sweep
from .solver import InstabilityError

EXIT_OK, EXIT_CONFIG, EXIT_INSTABILITY, EXIT_CHECK = 0, 2, 3, 4

log = logging.getLogger("pmecontract")

_PAIR = """\
initial.u.kind = constant_plus_cosine
initial.u.base = 1.0
initial.u.amplitude = 0.3
initial.v.kind = gaussian
initial.v.base = 1.1
initial.v.height = 0.6
initial.v.width = 0.8
"""

# used when --config is not given
DEFAULT_CONFIGS = {
    "region": "diffusion.m = 1.5\n",
    "matrices": "diffusion.m = 1.5\nexponents.alpha = 0.75\nexponents.p = 2\n",
    "simulate": "diffusion.m = 2\ninitial.u.kind = constant_plus_cosine\n"
                "initial.u.amplitude = 0.5\n",
    "contract": "diffusion.m = 1.5\nexponents.alpha = 0.75\nexponents.p = 2\n"
                "solver.t_end = 1.0\nsolver.sample_every = 0.01\n" + _PAIR,
    "gradient": "diffusion.m = 1.5\nexponents.alpha = 0.75\nexponents.p = 2\n"
                "initial.u.kind = constant_plus_cosine\ninitial.u.amplitude = 0.3\n",
    "directional": "diffusion.m = 1.5\nexponents.alpha = 0.75\nexponents.p = 2\n"
                   "grid.N = 256\nsolver.sample_every = 0.002\n"
                   "initial.u.kind = constant_plus_cosine\ninitial.u.amplitude = 0.3\n",
    "gradflow": "diffusion.m = 0.8\ngrid.N = 256\nsolver.sample_every = 0.002\n"
                "solver.t_end = 0.2\ninitial.u.kind = constant_plus_cosine\n"
                "initial.u.amplitude = 0.3\n",
    "sweep": "grid.N = 64\nsolver.t_end = 0.5\nsolver.sample_every = 0.01\n"
             "sweep.n = -0.5, 0, 0.5\n" + _PAIR,
    "validate": "diffusion.m = 2\ngrid.N = 128\n",
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pmecontract",
                                 description="Contraction and decay experiments for "
                                             "m U_t = Lap U^m on the periodic torus.")
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", type=Path, help="key = value configuration file")
    ap.add_argument("--out", type=Path, help="output directory (default: runs/SCENARIO)")
    ap.add_argument("--workers", type=int, default=1, help="processes for sweeps")
    ap.add_argument("--seed", type=int, help="override the configured seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(scenario: str, path: Path | None, seed: int | None) -> ExperimentConfig:
    text = path.read_text() if path is not None else DEFAULT_CONFIGS[scenario]
    cfg = parse_config(text, scenario)
    if seed is not None:
        cfg.values["seed"] = seed
    return cfg


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(cfg: ExperimentConfig, out: Path, workers: int = 1) -> int:
    """Run one scenario, write outputs plus ``config.txt`` and ``manifest.json``."""
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text())
    manifest = {"scenario": cfg.scenario, "version": __version__,
                "backend": _backend.BACKEND, "seed": cfg.seed, "workers": workers,
                "config_file": "config.txt"}
    try:
        if cfg.scenario == "sweep":
            checks = run_sweep(cfg, out, workers)
        else:
            checks = PIPELINES[cfg.scenario](cfg, out)
    except InstabilityError as exc:
        manifest.update(status="instability", error=str(exc), exit_code=EXIT_INSTABILITY)
        _write_manifest(out, manifest)
        log.error("solver instability: %s", exc)
        return EXIT_INSTABILITY
    failed = [c for c in checks if not c.passed]
    code = EXIT_CHECK if failed else EXIT_OK
    manifest.update(status="fail" if failed else "pass", exit_code=code,
                    checks=[c.as_dict() for c in checks])
    _write_manifest(out, manifest)
    for c in checks:
        log.info("%s %s = %.6g (tol %.3g)", "PASS" if c.passed else "FAIL",
                 c.name, c.value, c.tol)
    return code


def _write_manifest(out: Path, manifest: dict) -> None:
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    manifest["files"] = {str(p.relative_to(out)): _sha256(p) for p in files}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = load_config(args.scenario, args.config, args.seed)
    except (ParameterError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or Path("runs") / args.scenario
    code = run(cfg, out, args.workers)
    print(f"{args.scenario}: {'ok' if code == 0 else 'exit ' + str(code)} -> {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
