"""Command-line entry point.

Exit codes: 0 when every verdict passes, 2 when a quantitative verdict
fails (including infeasible parameters), 1 on usage or runtime errors.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .closed_form import NlsParams, TwoModeData, approx_two_mode_samples, two_mode_correction
from .config import RunConfig, load_config, parse_config
from .errors import ConfigError, InfeasibleError, NlsLabError
from .experiments import (
    ExperimentParams,
    ExperimentReport,
    bound_report,
    choose_parameters_thm1,
    default_bound_config,
    default_two_mode_data,
    horizon,
    run_thm1,
    run_thm2,
    thm1_params_at,
    verify_approximation_bound,
)
from .mode_ode import ModeSystem, integrate
from .solver import MASS_TOLERANCE, SolverConfig, evolve

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
TRACE_COLUMNS = ("t", "gap", "bound_ratio", "mass", "hamiltonian")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config with nls/solver/experiment sections")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    common.add_argument("--p", type=int)
    common.add_argument("--omega", type=int, choices=(1, -1))
    common.add_argument("--gridsize", type=int)
    common.add_argument("--dt", type=float)
    common.add_argument("--dealias", choices=("two_thirds", "none"))

    two_mode = argparse.ArgumentParser(add_help=False)
    two_mode.add_argument("--alpha", type=complex, help="zero-mode amplitude, e.g. 0.02+0.01j")
    two_mode.add_argument("--beta", type=complex, help="frequency-one amplitude")
    two_mode.add_argument("--sigma", type=float)
    two_mode.add_argument("--t-final", type=float, dest="t_final")
    two_mode.add_argument("--samples", type=int)

    budgets = argparse.ArgumentParser(add_help=False)
    budgets.add_argument("--rho", type=float)
    budgets.add_argument("--delta", type=float)
    budgets.add_argument("--s", type=float)
    budgets.add_argument("--N", type=int, help="use this frequency instead of searching")
    budgets.add_argument("--horizon-factor", type=float, dest="horizon_factor")

    parser = argparse.ArgumentParser(prog="nlslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")
    sub.add_parser("simulate", parents=[common, two_mode], help="evolve two-mode data with the PDE solver")
    sub.add_parser("approx", parents=[common, two_mode], help="tabulate the two-mode ansatz and its correction")
    sub.add_parser("ode", parents=[common, two_mode], help="integrate the truncated mode system")
    vb = sub.add_parser("verify-bound", parents=[common], help="measure the approximation constant")
    vb.add_argument("--sigma", type=float, action="append", dest="sigmas")
    vb.add_argument("--horizon-factor", type=float, dest="horizon_factor")
    vb.add_argument("--certify", action="store_true", default=None)
    sub.add_parser("thm1", parents=[common, budgets], help="cubic zero-mode decoherence")
    t2 = sub.add_parser("thm2", parents=[common, budgets], help="two-solution decoherence for p >= 5")
    t2.add_argument("--M", type=float)
    rp = sub.add_parser("report", help="summarise a report JSON")
    rp.add_argument("path", type=Path)
    return parser


def _merge(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    data = cfg.model_dump()
    for key in ("p", "omega"):
        if getattr(args, key, None) is not None:
            data["nls"][key] = getattr(args, key)
    for key in ("gridsize", "dt", "dealias"):
        if getattr(args, key, None) is not None:
            data["solver"][key] = getattr(args, key)
    exp = data["experiment"]
    exp["kind"] = args.command
    for key in ("rho", "delta", "s", "N", "M", "horizon_factor", "sigmas", "t_final", "samples", "certify"):
        if getattr(args, key, None) is not None:
            exp[key] = getattr(args, key)
    sigma = getattr(args, "sigma", None)
    if sigma is not None:
        exp["sigma"] = sigma
    for key in ("alpha", "beta"):
        z = getattr(args, key, None)
        if z is not None:
            exp[key] = [z.real, z.imag]
    return parse_config(data)


def _two_mode_data(cfg: RunConfig) -> TwoModeData:
    exp = cfg.experiment
    if exp.alpha is None and exp.beta is None:
        return default_two_mode_data(exp.sigma or 0.05)
    alpha = complex(*exp.alpha) if exp.alpha else 0j
    beta = complex(*exp.beta) if exp.beta else 0j
    return TwoModeData(alpha, beta, exp.sigma)


def _t_final(cfg: RunConfig, data: TwoModeData, params: NlsParams) -> float:
    if cfg.experiment.t_final is not None:
        return cfg.experiment.t_final
    return horizon(data.sigma, params.p, cfg.experiment.horizon_factor) if data.sigma > 0 else 1.0


def _write_traces(out: Path, rep: ExperimentReport) -> None:
    if not rep.traces:
        return
    names = [c for c in TRACE_COLUMNS if c in rep.traces] + sorted(set(rep.traces) - set(TRACE_COLUMNS))
    io.write_csv(out / "trace.csv", names, [rep.traces[n] for n in names])


def _finish(out: Path, rep: ExperimentReport) -> int:
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "report.json", rep.to_json())
    _write_traces(out, rep)
    _print_summary(rep)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def _print_summary(rep: ExperimentReport) -> None:
    print(f"{rep.kind}: {'PASS' if rep.passed else 'FAIL'}")
    for name, ok in rep.verdicts.items():
        print(f"  {'ok  ' if ok else 'FAIL'} {name}")
    for key in ("sup_gap", "c_measured", "max_ratio", "spread", "measured_rate", "predicted_rate", "required_log2_n"):
        if key in rep.measured:
            print(f"  {key} = {rep.measured[key]}")
    for note in rep.notes:
        print(f"  note: {note}")


def _cmd_simulate(cfg: RunConfig, out: Path) -> int:
    params = cfg.nls.build()
    data = _two_mode_data(cfg)
    t_end = _t_final(cfg, data, params)
    solver = cfg.solver.build(default_bound_config(params.p))
    times = np.linspace(0.0, t_end, cfg.experiment.samples + 1)
    ev = evolve(data.initial_field(), params, solver.with_checkpoints(times), check_accuracy=False)
    out.mkdir(parents=True, exist_ok=True)
    io.trajectory_csv(out / "modes.csv", ev.trajectory)
    io.write_csv(out / "diagnostics.csv", ["t", "mass", "hamiltonian", "h1norm"], [ev.times, ev.mass, ev.hamiltonian, ev.h1norm])
    io.write_json(out / "checkpoint.json", {"t": float(ev.times[-1]), "field": ev.trajectory.field(len(ev.trajectory) - 1).to_json()})
    rep = ExperimentReport(
        kind="simulate",
        params={"p": params.p, "omega": params.omega, "alpha": data.alpha, "beta": data.beta, "t_final": t_end},
        configs=[ev.config.to_json()],
        traces={"t": ev.times, "mass": ev.mass, "hamiltonian": ev.hamiltonian},
        measured={"mass_drift": ev.mass_drift, "hamiltonian_drift": ev.hamiltonian_drift},
    )
    rep.verdicts["mass_conserved"] = ev.mass_drift <= MASS_TOLERANCE
    return _finish(out, rep)


def _cmd_approx(cfg: RunConfig, out: Path) -> int:
    params = cfg.nls.build()
    data = _two_mode_data(cfg)
    t_end = _t_final(cfg, data, params)
    times = np.linspace(0.0, t_end, cfg.experiment.samples + 1)
    coeffs = approx_two_mode_samples(params, data, times)
    header, cols = ["t", "re_0", "im_0", "re_1", "im_1"], [times, coeffs[:, 0].real, coeffs[:, 0].imag, coeffs[:, 1].real, coeffs[:, 1].imag]
    for k, series in sorted(two_mode_correction(params, data).samples(times).items()):
        header += [f"re_v{k}", f"im_v{k}"]
        cols += [series.real, series.imag]
    out.mkdir(parents=True, exist_ok=True)
    io.write_csv(out / "approx.csv", header, cols)
    print(f"approx: wrote {out / 'approx.csv'} ({times.size} rows)")
    return EXIT_PASS


def _cmd_ode(cfg: RunConfig, out: Path) -> int:
    params = cfg.nls.build()
    data = _two_mode_data(cfg)
    t_end = cfg.experiment.t_final if cfg.experiment.t_final is not None else 10.0
    system = ModeSystem.two_mode(params, data.alpha, data.beta)
    dt = cfg.solver.dt or 0.01
    times = np.linspace(0.0, t_end, cfg.experiment.samples + 1)
    traj = integrate(system, t_end, dt, times)
    out.mkdir(parents=True, exist_ok=True)
    io.trajectory_csv(out / "modes.csv", traj, modes=[0, 1])
    drift = max(
        float(np.max(np.abs(np.abs(traj.mode(0)) - abs(data.alpha)))),
        float(np.max(np.abs(np.abs(traj.mode(1)) - abs(data.beta)))),
    )
    rep = ExperimentReport(
        kind="ode",
        params={"p": params.p, "omega": params.omega, "alpha": data.alpha, "beta": data.beta, "t_final": t_end},
        configs=[{"integrator": "rk4", "dt": dt}],
        measured={"modulus_drift": drift},
        verdicts={"moduli_conserved": drift <= 1e-9},
    )
    return _finish(out, rep)


def _cmd_verify_bound(cfg: RunConfig, out: Path) -> int:
    params = cfg.nls.build()
    exp = cfg.experiment
    sigmas = exp.sigmas or ([exp.sigma] if exp.sigma else [0.05])
    solver = cfg.solver.build(default_bound_config(params.p))
    traces = [
        verify_approximation_bound(params, default_two_mode_data(s), exp.horizon_factor, solver, exp.samples, exp.certify)
        for s in sigmas
    ]
    return _finish(out, bound_report(params, traces))


def _budget_params(cfg: RunConfig) -> dict:
    exp = cfg.experiment
    return dict(
        rho=exp.rho,
        delta=exp.delta,
        s=exp.s,
        omega=cfg.nls.omega,
        horizon_factor=exp.horizon_factor,
        rotation_margin=exp.rotation_margin,
        smallness=exp.smallness,
        caps=exp.caps.build(),
    )


def _cmd_thm1(cfg: RunConfig, out: Path) -> int:
    kw = _budget_params(cfg)
    try:
        if cfg.experiment.N is not None:
            params = thm1_params_at(N=cfg.experiment.N, **kw)
        else:
            params = choose_parameters_thm1(p=cfg.nls.p, **kw)
        solver = cfg.solver.build(SolverConfig(gridsize=16, dt=0.01))
        rep = run_thm1(params, solver, cfg.experiment.samples)
    except InfeasibleError as exc:
        rep = ExperimentReport(kind="thm1", params={k: v for k, v in kw.items() if k != "caps"})
        rep.measured = {"required_log2_n": exc.required_log2_n, **exc.details}
        rep.verdicts["feasible_at_desk_scale"] = False
        rep.notes.append(str(exc))
    return _finish(out, rep)


def _cmd_thm2(cfg: RunConfig, out: Path) -> int:
    kw = _budget_params(cfg)
    params = ExperimentParams(p=cfg.nls.p, M=cfg.experiment.M, N=cfg.experiment.N, **kw)
    solver = cfg.solver.build(SolverConfig(gridsize=16, dt=0.1))
    return _finish(out, run_thm2(params, solver))


def _cmd_report(path: Path) -> int:
    rep = ExperimentReport.from_json(io.read_json(path))
    _print_summary(rep)
    return EXIT_PASS if rep.passed else EXIT_FAIL


COMMANDS = {
    "simulate": _cmd_simulate,
    "approx": _cmd_approx,
    "ode": _cmd_ode,
    "verify-bound": _cmd_verify_bound,
    "thm1": _cmd_thm1,
    "thm2": _cmd_thm2,
}


def run_cli(argv=None) -> int:
    parser = _parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_ERROR
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    started = time.perf_counter()
    try:
        if args.command == "report":
            return _cmd_report(args.path)
        cfg = _merge(args)
        return COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (NlsLabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        print(f"elapsed {time.perf_counter() - started:.2f}s", file=sys.stderr)


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
