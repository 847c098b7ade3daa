"""Command-line entry point: ``lightcone-rdm <command> --config FILE``.

Every command reads one JSON config, writes its result to ``--out DIR`` (or
stdout) and exits with 0 on success, 2 when a scientific check fails and 3
on bad input or a violated precondition.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from .errors import LightconeError, PreconditionError
from .harness import (
    CatPair,
    ScenarioConfig,
    cat_scenario,
    confinement_demo,
    lightcone_sweep,
    run_causality_check,
    sweep_to_csv,
)
from .kernels import IDENTITIES, ROLES, LatticeSpec, build_kernel, lightcone_profile, verify_identity
from .local_unitary import complete_unitary, matrix_from_json
from .oracle import FockLattice, compare_with_engine, normalization_check

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 2, 3

KERNEL_DEFAULTS = {"role": None, "t": None, "identities": [], "dt": 1e-4, "threshold": 1e-6,
                   "profile_t": None, "profile_ratio_threshold": 1e-6}
SWEEP_DEFAULTS = {"scenario": None, "times": None, "margins": None}
FACTOR_DEFAULTS = {"f1": None, "f2": None, "tol": 1e-10}
ORACLE_DEFAULTS = {"cutoff": 8, "ref_frequency": None, "phi_class": None, "pi_class": None,
                   "times": [0.0], "threshold": 1e-3, "normalization_times": None}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _merge(defaults: dict, data: dict, required=(), name="config") -> dict:
    unknown = set(data) - set(defaults) - {"spec", "seed"}
    if unknown:
        raise PreconditionError(f"unknown {name} keys: {sorted(unknown)}")
    out = dict(defaults)
    out.update(data)
    missing = [k for k in required if out.get(k) is None]
    if missing:
        raise PreconditionError(f"{name} is missing {missing}")
    return out


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, name: str, payload, fmt: str) -> None:
    if fmt == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        text = payload
    if args.out:
        write_atomic(os.path.join(args.out, f"{name}.{fmt}"), text)
    else:
        sys.stdout.write(text)


def _scenario(data: dict, seed) -> ScenarioConfig:
    if seed is not None:
        data = dict(data, seed=seed)
    return ScenarioConfig.from_dict(data)


# -- commands --------------------------------------------------------------


def cmd_kernels(args, data) -> int:
    cfg = _merge(KERNEL_DEFAULTS, data, ("spec",), "kernels config")
    spec = LatticeSpec.from_dict(cfg["spec"])
    report = {"spec": spec.to_dict(), "identities": {}, "passed": True}
    if cfg["role"] is not None:
        if cfg["role"] not in ROLES:
            raise PreconditionError(f"unknown role {cfg['role']!r}")
        row = build_kernel(spec, cfg["role"], cfg["t"]).row()
        report["row"] = row.tolist()
        if args.format == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(("x", "value"))
            for x, v in enumerate(row):
                writer.writerow((x, repr(float(v))))
            _emit(args, "kernel", buf.getvalue(), "csv")
    for which in cfg["identities"]:
        if which not in IDENTITIES:
            raise PreconditionError(f"unknown identity {which!r}")
        times = cfg["t"] if isinstance(cfg["t"], list) else [cfg["t"]]
        worst = max(verify_identity(spec, which, float(t), cfg["dt"]) for t in times)
        report["identities"][which] = worst
        report["passed"] &= worst <= cfg["threshold"]
    if cfg["profile_t"] is not None:
        prof = lightcone_profile(spec, float(cfg["profile_t"]))
        t = prof.time
        ratio = prof.magnitude_at(1.5 * t) / prof.magnitude_at(0.9 * t)
        report["lightcone"] = {"t": t, "ratio_1.5t_over_0.9t": ratio, "tail_slope": prof.tail_slope}
        report["passed"] &= bool(ratio <= cfg["profile_ratio_threshold"] and prof.tail_slope < 0)
    report["passed"] = bool(report["passed"])
    if args.format == "json" or cfg["role"] is None:
        _emit(args, "kernels", report, "json")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_causality(args, data) -> int:
    mode = data.get("mode", "causality")
    data = {k: v for k, v in data.items() if k != "mode"}
    if mode not in ("causality", "confinement"):
        raise PreconditionError(f"mode must be 'causality' or 'confinement', got {mode!r}")
    cfg = _scenario(data, args.seed)
    report = (run_causality_check if mode == "causality" else confinement_demo)(cfg)
    _emit(args, mode, report.to_dict(), "json")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_sweep(args, data) -> int:
    cfg = _merge(SWEEP_DEFAULTS, data, ("scenario", "times"), "sweep config")
    scenario = _scenario(cfg["scenario"], args.seed)
    rows = lightcone_sweep(scenario, cfg["times"], cfg["margins"])
    if args.format == "json":
        payload = [dict(zip(("t", "margin", "max_B_deviation", "cone_edge_deviation"), r)) for r in rows]
        _emit(args, "sweep", payload, "json")
    else:
        _emit(args, "sweep", sweep_to_csv(rows), "csv")
    return EXIT_OK


def cmd_factor_unitary(args, data) -> int:
    cfg = _merge(FACTOR_DEFAULTS, data, ("f1", "f2"), "factor-unitary input")
    f1, f2 = matrix_from_json(cfg["f1"]), matrix_from_json(cfg["f2"])
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    result = complete_unitary(f1, f2, float(cfg["tol"]), rng)
    _emit(args, "factor_unitary", result.to_dict(), "json")
    ok = max(result.residual_unitarity, result.residual_equation) <= 10 * float(cfg["tol"])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_cat_witness(args, data) -> int:
    cfg = _scenario(data, args.seed)
    if not isinstance(cfg.perturbation, CatPair):
        raise PreconditionError("cat-witness needs a cat_pair perturbation")
    report = cat_scenario(cfg)
    _emit(args, "cat_witness", report.to_dict(), "json")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_oracle(args, data) -> int:
    cfg = _merge(ORACLE_DEFAULTS, data, ("spec",), "oracle config")
    spec = LatticeSpec.from_dict(cfg["spec"])
    records = []
    if cfg["normalization_times"] is not None:
        rep = normalization_check(spec, cfg["normalization_times"])
        records.append({"quantity": "normalization_modulus", "oracle_value": rep.oracle_modulus.tolist(),
                        "engine_value": rep.formula_modulus.tolist(), "cutoff": None,
                        "residual": rep.modulus_deviation})
        records.append({"quantity": "propagator_kernel", "oracle_value": None, "engine_value": None,
                        "cutoff": None, "residual": rep.max_relative_deviation})
    else:
        fl = FockLattice(spec, int(cfg["cutoff"]), cfg["ref_frequency"])
        for t in cfg["times"]:
            for rec in compare_with_engine(fl, cfg["phi_class"], cfg["pi_class"], float(t)):
                rec["t"] = float(t)
                records.append(rec)
    passed = all(r["residual"] <= cfg["threshold"] for r in records)
    _emit(args, "oracle", {"records": records, "threshold": cfg["threshold"], "passed": passed}, "json")
    return EXIT_OK if passed else EXIT_FAIL


COMMANDS = {
    "kernels": (cmd_kernels, "kernel rows, identity residuals and light-cone tails", "json"),
    "causality": (cmd_causality, "perturb region a, evolve, compare outside the cone", "json"),
    "sweep": (cmd_sweep, "deviation table over times and margins", "csv"),
    "factor-unitary": (cmd_factor_unitary, "unitary completion f2 = U f1", "json"),
    "cat-witness": (cmd_cat_witness, "vacuum-equivalence witness of a two-branch cat", "json"),
    "oracle": (cmd_oracle, "truncated-Fock and position-grid cross-checks", "json"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lightcone-rdm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text, default_fmt) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, metavar="PATH", help="JSON config file ('-' for stdin)")
        p.add_argument("--out", metavar="DIR", help="output directory (default: stdout)")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--format", choices=("csv", "json"), default=default_fmt)
    return parser


def _load(path: str) -> dict:
    if path == "-":
        data = json.load(sys.stdin)
    else:
        with open(path) as fh:
            data = json.load(fh)
    if not isinstance(data, dict):
        raise PreconditionError("the config must be a JSON object")
    return data


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        data = _load(args.config)
        return handler(args, data)
    except LightconeError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", EXIT_INPUT)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
