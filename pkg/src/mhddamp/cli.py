"""
Command-line entry points tying the solver and verification harness into
reproducible experiments.

Subcommands: run, lemmas, twin, info.  Exit codes: 0 on success (all
requested checks PASS or NOT-APPLICABLE), 1 on usage or configuration
errors, 2 when a check fails, 3 when a run blows up.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .damping import DampingSpec, F_CATALOG
from .energy import CheckReport, check_H1_inequalities, check_L2_inequality
from .fields import set_fft_workers
from .grid import GridSpec
from .integrator import (
    BlowUpError,
    InitialCondition,
    SolverConfig,
    config_hash,
    run,
    save_checkpoint,
)
from .lemmas import check_interpolation_bound, modifier_envelope_report, monotonicity_suite
from .uniqueness import twin_run

KNOWN_CHECKS = ("l2", "h1_additive", "h1_exponential", "lemmas", "twin")

DEFAULT_MATRIX = {
    "alphas": [0.1, 1.0, 10.0],
    "betas": [3.5, 4.0, 5.0, 7.0],
    "f_ids": sorted(F_CATALOG),
    "x_max": 100.0,
    "x_points": 10_000,
    "pairs": 100_000,
    "seed": 0,
}


class ConfigError(ValueError):
    """Configuration file error with field context."""


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    solver: SolverConfig
    output_dir: str | None = None
    checks: tuple[str, ...] = ("l2",)
    perturbation_scale: float = 1e-6
    report_formats: tuple[str, ...] = ("csv", "text", "json")

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigError("name: experiment name must be nonempty")
        for check in self.checks:
            if check not in KNOWN_CHECKS:
                raise ConfigError(f"checks: unknown check {check!r} (known: {KNOWN_CHECKS})")
        if self.perturbation_scale < 0:
            raise ConfigError("perturbation_scale: must be >= 0")
        object.__setattr__(self, "checks", tuple(self.checks))
        object.__setattr__(self, "report_formats", tuple(self.report_formats))


# Configuration (de)serialization -------------------------------------------


def _section(payload: dict, builder, context: str):
    try:
        return builder(**payload)
    except TypeError as exc:
        raise ConfigError(f"{context}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a JSON object")
    try:
        solver_data = dict(data["solver"])
    except KeyError:
        raise ConfigError("solver: section missing") from None

    grid_data = solver_data.pop("grid", None)
    if not isinstance(grid_data, dict):
        raise ConfigError("solver.grid: section missing or not an object")
    grid_data = {k: v for k, v in grid_data.items() if v is not None}
    grid = _section(grid_data, GridSpec, "solver.grid")

    damping_data = solver_data.pop("damping", {"kind": "none"})
    damping = _section(dict(damping_data), DampingSpec, "solver.damping")

    ic_data = solver_data.pop("initial_condition", None)
    if not isinstance(ic_data, dict):
        raise ConfigError("solver.initial_condition: section missing or not an object")
    ic = _section(dict(ic_data), InitialCondition, "solver.initial_condition")

    solver = _section(
        {**solver_data, "grid": grid, "damping": damping, "initial_condition": ic},
        SolverConfig,
        "solver",
    )

    top = {k: v for k, v in data.items() if k != "solver"}
    top["checks"] = tuple(top.get("checks", ("l2",)))
    top["report_formats"] = tuple(top.get("report_formats", ("csv", "text", "json")))
    return _section({**top, "solver": solver}, ExperimentConfig, "top level")


def config_to_dict(cfg: ExperimentConfig) -> dict:
    data = dataclasses.asdict(cfg)
    data["checks"] = list(cfg.checks)
    data["report_formats"] = list(cfg.report_formats)
    data["solver"]["initial_condition"]["mode"] = list(cfg.solver.initial_condition.mode)
    return data


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return config_from_dict(data)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


# Output helpers -------------------------------------------------------------


def _resolve_out_dir(cli_out: str | None, cfg_out: str | None, name: str) -> str:
    out = cli_out or os.environ.get("MHDDAMP_OUT") or cfg_out or f"{name}_out"
    os.makedirs(out, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out!r} is not writable")
    return out


def _write_checks(path, reports: list[CheckReport]) -> None:
    with open(path, "w") as fh:
        for rep in reports:
            fh.write(rep.summary_line() + "\n")


def _final_state_summary(state) -> dict:
    from .operators import divergence_l2, sobolev_norm

    return {
        "t": state.t,
        "u_l2": sobolev_norm(state.u, 0.0),
        "b_l2": sobolev_norm(state.b, 0.0),
        "max_divergence": max(divergence_l2(state.u), divergence_l2(state.b)),
    }


# Subcommands ----------------------------------------------------------------


def _apply_common_overrides(args, cfg: ExperimentConfig) -> ExperimentConfig:
    threads = args.threads or int(os.environ.get("MHDDAMP_THREADS", "0") or 0)
    if threads:
        set_fft_workers(threads)
    if args.seed is not None:
        solver = dataclasses.replace(cfg.solver, seed=args.seed)
        cfg = dataclasses.replace(cfg, solver=solver)
    return cfg


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    cfg = _apply_common_overrides(args, cfg)
    out = _resolve_out_dir(args.out, cfg.output_dir, cfg.name)

    formats = set(cfg.report_formats)
    summary = {
        "name": cfg.name,
        "config": config_to_dict(cfg),
        "config_hash": config_hash(cfg.solver),
    }
    try:
        state, ledger = run(cfg.solver)
    except BlowUpError as exc:
        if exc.ledger is not None and "csv" in formats:
            exc.ledger.to_csv(os.path.join(out, "ledger.csv"))
        summary["blow_up_time"] = exc.time
        if "json" in formats:
            with open(os.path.join(out, "summary.json"), "w") as fh:
                json.dump(summary, fh, indent=2, sort_keys=True)
                fh.write("\n")
        print(f"blow-up at t = {exc.time:.6g}", file=sys.stderr)
        return 3

    if "csv" in formats:
        ledger.to_csv(os.path.join(out, "ledger.csv"))
    save_checkpoint(os.path.join(out, "checkpoint.mhdf"), state)

    reports: list[CheckReport] = []
    h1_reports = None
    for check in cfg.checks:
        if check == "l2":
            reports.append(check_L2_inequality(ledger))
        elif check in ("h1_additive", "h1_exponential"):
            if h1_reports is None:
                h1_reports = {rep.name: rep for rep in check_H1_inequalities(ledger)}
            reports.append(h1_reports[check])
        elif check == "lemmas":
            reports.extend(_lemma_reports_for_run(cfg.solver.damping))
        elif check == "twin":
            reports.append(_twin_report(cfg))
    if "text" in formats:
        _write_checks(os.path.join(out, "checks.txt"), reports)

    summary["final_state"] = _final_state_summary(state)
    summary["checks"] = {rep.name: rep.status for rep in reports}
    if "json" in formats:
        with open(os.path.join(out, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")

    for rep in reports:
        print(rep.summary_line())
    return 0 if all(rep.acceptable for rep in reports) else 2


def _lemma_reports_for_run(damping: DampingSpec) -> list[CheckReport]:
    """Lemma-suite checks scoped to the run's damping parameters."""
    reports = []
    x = np.linspace(0.0, 100.0, 10_000)
    if damping.kind == "power":
        lem = check_interpolation_bound(damping.alpha, float(damping.beta), x)
        reports.append(
            CheckReport(
                "lemma_interpolation",
                lem.status,
                worst_margin=lem.worst_margin if lem.status != "NOT-APPLICABLE" else np.nan,
                worst_time=np.nan,
                detail=str(lem.extra.get("reason", "")),
            )
        )
    if damping.kind == "generalized":
        mono = monotonicity_suite(damping.function, n_pairs=20_000, seed=0)
        reports.append(
            CheckReport(
                "lemma_monotonicity",
                mono.status,
                worst_margin=mono.worst_margin,
                worst_time=np.nan,
            )
        )
    if not reports:
        reports.append(
            CheckReport("lemma_suite", "NOT-APPLICABLE", detail="no damping active")
        )
    return reports


def _twin_report(cfg: ExperimentConfig) -> CheckReport:
    zero = twin_run(cfg.solver, 0.0)
    if not zero.identical:
        return CheckReport("twin", "FAIL", detail="eps = 0 twin trajectories differ")
    result = twin_run(cfg.solver, cfg.perturbation_scale)
    ok = result.bound_satisfied() and not result.blown_up
    return CheckReport(
        "twin",
        "PASS" if ok else "FAIL",
        worst_margin=result.c_hat,
        worst_time=np.nan,
        detail=f"c_hat={result.c_hat:.6g} c_bound={result.c_bound:.6g}",
    )


def cmd_lemmas(args) -> int:
    matrix = dict(DEFAULT_MATRIX)
    if args.matrix:
        try:
            with open(args.matrix) as fh:
                matrix.update(json.load(fh))
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        except json.JSONDecodeError as exc:
            print(f"error: {args.matrix}:{exc.lineno}: {exc.msg}", file=sys.stderr)
            return 1
    alphas = list(matrix["alphas"])
    betas = list(matrix["betas"])
    f_ids = list(matrix["f_ids"])
    if not alphas or not betas or not f_ids:
        print("error: empty lemma matrix", file=sys.stderr)
        return 1
    for f_id in f_ids:
        if f_id not in F_CATALOG:
            print(f"error: unknown f_id {f_id!r}", file=sys.stderr)
            return 1

    out = _resolve_out_dir(args.out, None, "lemmas")
    lemma_dir = os.path.join(out, "lemmas")
    os.makedirs(lemma_dir, exist_ok=True)
    x = np.linspace(0.0, float(matrix["x_max"]), int(matrix["x_points"]))

    all_ok = True
    with open(os.path.join(lemma_dir, "interpolation.csv"), "w") as fh:
        fh.write("alpha,beta,status,worst_margin,x_at_worst,margin_at_x_star,c\n")
        for alpha in alphas:
            for beta in betas:
                rep = check_interpolation_bound(float(alpha), float(beta), x)
                all_ok = all_ok and rep.acceptable
                if rep.status == "NOT-APPLICABLE":
                    fh.write(f"{alpha},{beta},NOT-APPLICABLE,,,,\n")
                else:
                    fh.write(
                        f"{alpha},{beta},{rep.status},{rep.worst_margin:.17g},"
                        f"{rep.worst_location:.17g},"
                        f"{rep.extra['margin_at_x_star']:.17g},{rep.extra['c']:.17g}\n"
                    )

    with open(os.path.join(lemma_dir, "monotonicity.csv"), "w") as fh:
        fh.write("f_id,status,worst_margin,samples\n")
        for f_id in f_ids:
            rep = monotonicity_suite(f_id, n_pairs=int(matrix["pairs"]), seed=int(matrix["seed"]))
            all_ok = all_ok and rep.passed
            fh.write(f"{f_id},{rep.status},{rep.worst_margin:.17g},{rep.samples}\n")

    z = np.logspace(0.0, 6.0, 2_000)
    with open(os.path.join(lemma_dir, "envelope.csv"), "w") as fh:
        fh.write("f_id,beta,a_star,a_argmin,b_star,b_argmax,f_at_zero,lower_bound_degenerate\n")
        for f_id in f_ids:
            for beta in betas:
                rep = modifier_envelope_report(f_id, float(beta), z)
                fh.write(
                    f"{f_id},{beta},{rep.a_star:.17g},{rep.a_argmin:.17g},"
                    f"{rep.b_star:.17g},{rep.b_argmax:.17g},{rep.f_at_zero:.17g},"
                    f"{rep.lower_bound_degenerate}\n"
                )

    print("lemma suites:", "PASS" if all_ok else "FAIL")
    return 0 if all_ok else 2


def cmd_twin(args) -> int:
    cfg = load_config(args.config)
    cfg = _apply_common_overrides(args, cfg)
    eps = cfg.perturbation_scale if args.eps is None else args.eps
    out = _resolve_out_dir(args.out, cfg.output_dir, cfg.name)

    zero = twin_run(cfg.solver, 0.0)
    if not zero.identical:
        print("determinism check failed: eps = 0 trajectories differ", file=sys.stderr)
        return 2
    result = twin_run(cfg.solver, eps)
    result.to_csv(os.path.join(out, "twin.csv"))
    result.to_json(os.path.join(out, "summary.json"))
    if result.blown_up:
        print(f"twin run blew up (eps = {eps:g})", file=sys.stderr)
        return 3
    ok = result.bound_satisfied()
    print(
        f"twin eps={eps:g}: d0={result.d0:.6e} c_hat={result.c_hat:.6g} "
        f"c_bound={result.c_bound:.6g} bound={'PASS' if ok else 'FAIL'}"
    )
    return 0 if ok else 2


def cmd_info(args) -> int:
    print(f"mhddamp {__version__}")
    print("damping modifier catalog:")
    for f_id, fn in sorted(F_CATALOG.items()):
        print(f"  {f_id}: f(0) = {fn.f_at_zero:g}")
    print("default lemma matrix:", json.dumps(DEFAULT_MATRIX))
    print("config template:")
    template = ExperimentConfig(
        name="example",
        solver=SolverConfig(
            grid=GridSpec(n_modes=32),
            dt=2e-3,
            t_end=1.0,
            initial_condition=InitialCondition(kind="random_divfree", target_h1=0.01),
            damping=DampingSpec(kind="power", alpha=1.0, beta=4.0),
        ),
        checks=("l2", "h1_additive", "h1_exponential"),
    )
    print(json.dumps(config_to_dict(template), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhddamp",
        description="Damped-MHD pseudo-spectral solver and estimate verification harness",
    )
    parser.add_argument("--version", action="version", version=f"mhddamp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output directory (overrides config and MHDDAMP_OUT)")
        p.add_argument("--threads", type=int, default=0, help="FFT worker cap")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_run = sub.add_parser("run", help="integrate and check the energy estimates")
    p_run.add_argument("--config", required=True)
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_lem = sub.add_parser("lemmas", help="run the scalar/vector lemma verifiers")
    p_lem.add_argument("--matrix", help="JSON file with alphas/betas/f_ids")
    common(p_lem)
    p_lem.set_defaults(func=cmd_lemmas)

    p_twin = sub.add_parser("twin", help="two nearby trajectories, separation growth")
    p_twin.add_argument("--config", required=True)
    p_twin.add_argument("--eps", type=float, default=None, help="perturbation scale")
    common(p_twin)
    p_twin.set_defaults(func=cmd_twin)

    p_info = sub.add_parser("info", help="print version, catalog and config template")
    p_info.set_defaults(func=cmd_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
