"""Desk-scale instability experiments.

Three families of runs live here:

* bound verification: the distance between the numerical solution from
  two-mode data and the explicit ansatz, measured in H^1 and divided by
  ``sigma^p``, along the horizon ``c sigma^-(p-1) log(1/sigma)``;
* the cubic decoherence construction (a constant plus a large high-frequency
  coefficient that is small in negative Sobolev norm), with parameter
  selection, the rescaling identity and the zero-mode gap;
* the two-solution construction for p >= 5, whose zero modes drift apart
  at a rate set by the difference of their phase rates.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import __version__
from .closed_form import (
    NlsParams,
    TwoModeData,
    approx_two_mode_samples,
    plane_wave,
    two_mode_correction,
    two_mode_phase,
)
from .errors import AccuracyError, ConsistencyError, InfeasibleError
from .solver import Evolution, SolverConfig, evolve
from .spectral import ScalingMap, SpectralField, rescale_up, sobolev_norm

ROTATION_MARGIN = 2 * math.pi
HORIZON_FACTOR = 0.1
N_CAP = 2 ** 16
GRIDSIZE_CAP = 2 ** 19
MAX_STEPS = 5_000_000
SMALLNESS = 0.01
C_THRESHOLD = 0.25
RESCALING_TOL = 1e-6
RATE_TOL = 0.05


@dataclass(frozen=True)
class Caps:
    n_max: int = N_CAP
    gridsize_max: int = GRIDSIZE_CAP
    max_steps: int = MAX_STEPS


@dataclass(frozen=True)
class ExperimentParams:
    """Budgets and derived quantities for one instability run.

    ``alpha``, ``beta``, ``sigma`` and ``t_star`` are unit-scale quantities
    filled in by the parameter-selection functions.
    """

    rho: float
    delta: float
    s: float
    N: int | None = None
    M: float | None = None
    p: int = 3
    omega: int = 1
    horizon_factor: float = HORIZON_FACTOR
    rotation_margin: float = ROTATION_MARGIN
    smallness: float = SMALLNESS
    caps: Caps = Caps()
    alpha: float | None = None
    beta: float | None = None
    sigma: float | None = None
    t_star: float | None = None
    conditions: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.delta > self.rho / 10:
            raise ValueError(f"delta={self.delta} must not exceed rho/10={self.rho / 10}")
        if not self.s < 0:
            raise ValueError("s must be negative")
        NlsParams(self.p, self.omega)

    @property
    def nls(self) -> NlsParams:
        return NlsParams(self.p, self.omega)

    @property
    def rho_prime(self) -> float:
        return self.rho / 4

    def to_json(self) -> dict:
        out = asdict(self)
        out["rho_prime"] = self.rho_prime
        return out


@dataclass
class ExperimentReport:
    kind: str
    params: dict
    configs: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(self.verdicts.values())

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "version": __version__,
            "passed": self.passed,
            "params": self.params,
            "solver_configs": self.configs,
            "measured": self.measured,
            "verdicts": self.verdicts,
            "notes": self.notes,
            "traces": {k: np.asarray(v) for k, v in self.traces.items()},
        }

    @classmethod
    def from_json(cls, obj) -> "ExperimentReport":
        return cls(
            kind=obj["kind"],
            params=obj.get("params", {}),
            configs=obj.get("solver_configs", []),
            traces={k: np.asarray(v, dtype=float) for k, v in obj.get("traces", {}).items()},
            measured=obj.get("measured", {}),
            verdicts=obj.get("verdicts", {}),
            notes=obj.get("notes", []),
        )


# -- helpers -------------------------------------------------------------------

def default_two_mode_data(sigma: float, sigma_cap: float = 0.25) -> TwoModeData:
    """``alpha = (sigma/2) exp(i pi/10)``, ``beta = sigma``."""
    return TwoModeData(0.5 * sigma * np.exp(0.1j * np.pi), sigma, sigma, sigma_cap)


def default_bound_config(p: int) -> SolverConfig:
    # the quintic horizon is ~sigma^-4 long; splitting error stays below 1e-3 of the ratio at dt=0.1
    return SolverConfig(gridsize=16, dt=0.01 if p == 3 else 0.1)


def horizon(sigma: float, p: int, factor: float = HORIZON_FACTOR) -> float:
    """``factor * sigma^-(p-1) * log(1/sigma)``."""
    return factor * sigma ** (-(p - 1)) * math.log(1.0 / sigma)


def _check_hamiltonian_sign(ev: Evolution) -> None:
    h0 = ev.initial.hamiltonian
    if h0 != 0 and np.any(np.sign(ev.hamiltonian) != np.sign(h0)):
        raise AccuracyError("Hamiltonian changed sign during a focusing run")


def _unwrapped_rate(times: np.ndarray, z: np.ndarray) -> float:
    """Least-squares slope of the unwrapped argument of ``z(t)``."""
    phase = np.unwrap(np.angle(z))
    return float(np.polyfit(times, phase, 1)[0])


# -- approximation bounds ----------------------------------------------------------

@dataclass
class BoundTrace:
    """``||U(t) - u(t)||_H1 / sigma^q`` along the horizon, with and without the correction."""

    times: np.ndarray
    ratio: np.ndarray
    corrected_ratio: np.ndarray
    sigma: float
    q: int
    t_horizon: float
    config: SolverConfig
    mass_drift: float
    hamiltonian_drift: float
    mass: np.ndarray
    hamiltonian: np.ndarray
    certification: dict = field(default_factory=dict)

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratio))

    @property
    def max_corrected_ratio(self) -> float:
        return float(np.max(self.corrected_ratio))

    @property
    def improvement(self) -> float:
        """How many times smaller the corrected distance is (sup over the horizon)."""
        return self.max_ratio / self.max_corrected_ratio if self.max_corrected_ratio > 0 else math.inf


def _bound_run(params: NlsParams, data: TwoModeData, times: np.ndarray, config: SolverConfig):
    cfg = config.with_checkpoints(times)
    ev = evolve(data.initial_field(), params, cfg)
    if params.omega < 0 and params.p >= 5:
        _check_hamiltonian_sign(ev)
    traj = ev.trajectory
    approx = approx_two_mode_samples(params, data, times)
    corr = two_mode_correction(params, data).samples(times)
    n = traj.frequencies
    w = (1.0 + np.abs(n)) ** 2
    diff = traj.coeffs.copy()
    diff[:, traj.nmax] -= approx[:, 0]
    diff[:, traj.nmax + 1] -= approx[:, 1]
    dist = np.sqrt(np.sum(w * np.abs(diff) ** 2, axis=1))
    for k, series in corr.items():
        diff[:, traj.nmax + k] -= series
    dist_corr = np.sqrt(np.sum(w * np.abs(diff) ** 2, axis=1))
    return ev, dist, dist_corr


def verify_approximation_bound(
    params: NlsParams,
    data: TwoModeData,
    horizon_factor: float = HORIZON_FACTOR,
    config: SolverConfig | None = None,
    samples: int = 400,
    certify: bool = False,
) -> BoundTrace:
    """Measure ``sup_t ||U(t) - u(t)||_H1 / sigma^p`` for two-mode data.

    ``U`` is the numerical solution, ``u`` the two-mode ansatz; the ratio
    is also reported against ``u + v`` with the explicit correction ``v``.
    With ``certify`` the run is repeated on a doubled grid and the relative
    change of the maximum ratio is recorded.
    """
    sigma = data.sigma
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    q = params.p
    t_end = horizon(sigma, params.p, horizon_factor)
    config = config or default_bound_config(params.p)
    times = np.linspace(0.0, t_end, samples + 1)
    ev, dist, dist_corr = _bound_run(params, data, times, config)
    trace = BoundTrace(
        times=times,
        ratio=dist / sigma ** q,
        corrected_ratio=dist_corr / sigma ** q,
        sigma=sigma,
        q=q,
        t_horizon=t_end,
        config=ev.config,
        mass_drift=ev.mass_drift,
        hamiltonian_drift=ev.hamiltonian_drift,
        mass=ev.mass,
        hamiltonian=ev.hamiltonian,
    )
    if certify:
        doubled = replace(config, gridsize=2 * config.gridsize)
        _, dist2, _ = _bound_run(params, data, times, doubled)
        max2 = float(np.max(dist2)) / sigma ** q
        trace.certification = {
            "gridsize": doubled.gridsize,
            "max_ratio": max2,
            "relative_change": abs(max2 - trace.max_ratio) / trace.max_ratio if trace.max_ratio else 0.0,
        }
    return trace


def bound_report(params: NlsParams, traces: Sequence[BoundTrace], uniformity: float = 2.0) -> ExperimentReport:
    """Collect a sigma sweep; the constant must vary by less than ``uniformity`` times."""
    maxima = [t.max_ratio for t in traces]
    rep = ExperimentReport(
        kind="verify-bound",
        params={"p": params.p, "omega": params.omega, "sigmas": [t.sigma for t in traces], "q": params.p},
        configs=[t.config.to_json() for t in traces],
    )
    rep.measured = {
        "max_ratio": maxima,
        "max_corrected_ratio": [t.max_corrected_ratio for t in traces],
        "improvement": [t.improvement for t in traces],
        "t_horizon": [t.t_horizon for t in traces],
        "mass_drift": [t.mass_drift for t in traces],
        "hamiltonian_drift": [t.hamiltonian_drift for t in traces],
        "certification": [t.certification for t in traces],
    }
    rep.verdicts["ratio_finite"] = bool(all(math.isfinite(r) for r in maxima))
    rep.verdicts["corrected_not_worse"] = bool(all(t.max_corrected_ratio <= t.max_ratio for t in traces))
    if len(traces) > 1:
        spread = max(maxima) / min(maxima) if min(maxima) > 0 else math.inf
        rep.measured["spread"] = spread
        rep.verdicts["sigma_uniform"] = spread < uniformity
    last = traces[-1]
    rep.traces = {
        "t": last.times,
        "bound_ratio": last.ratio,
        "corrected_ratio": last.corrected_ratio,
        "mass": last.mass,
        "hamiltonian": last.hamiltonian,
    }
    return rep


# -- cubic decoherence construction ---------------------------------------------

def thm1_quantities(rho: float, delta: float, s: float, N, horizon_factor: float = HORIZON_FACTOR) -> dict:
    """Every quantity the parameter conditions need, vectorised over ``N``.

    ``N`` may be a float array; nothing here requires it to be an integer.
    """
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _thm1_quantities(rho, delta, s, np.asarray(N, dtype=float), horizon_factor)


def _thm1_quantities(rho, delta, s, N, horizon_factor):
    rp = rho / 4
    alpha = rp / N
    beta = delta * N ** (-s) / (4 * N)
    sigma = np.maximum(alpha, beta)
    high = delta * N ** (-s) / 4 * (1 + N) ** s  # H^s size of the high-frequency piece
    closeness = high
    size_u = rp
    size_tilde = np.sqrt(rp ** 2 + high ** 2)
    gronwall = np.where(sigma < 1, horizon_factor * N ** -2 * sigma ** -2 * np.log(1 / sigma), 0.0)
    t_star = np.minimum(delta, gronwall)
    rotation = 2 * beta ** 2 * N ** 2 * t_star
    # the transferred error term in H^s for -1/2 < s, and the lifted O(N sigma^3) bound
    error = N ** -0.5 * delta ** 3
    lifted_error = N * sigma ** 3
    return {
        "N": N,
        "alpha": alpha,
        "beta": beta,
        "sigma": sigma,
        "closeness": closeness,
        "size_u": np.full_like(N, size_u),
        "size_tilde": size_tilde,
        "t_star": t_star,
        "rotation": rotation,
        "error": error,
        "lifted_error": lifted_error,
    }


def thm1_conditions(q: dict, rho: float, delta: float, rotation_margin: float, smallness: float) -> dict:
    return {
        "closeness": q["closeness"] < delta,
        "budget": np.maximum(q["size_u"], q["size_tilde"]) <= rho,
        "rotation": q["rotation"] >= rotation_margin,
        "error_small": q["error"] <= smallness * rho,
        "sigma_small": q["sigma"] <= 0.25,
    }


def _thm1_check_inputs(rho, delta, s):
    if not -0.5 < s < 0:
        raise ValueError(f"s must lie in (-1/2, 0), got {s}")
    if not 0 < delta <= rho / 10:
        raise ValueError(f"need 0 < delta <= rho/10, got delta={delta}, rho={rho}")


def choose_parameters_thm1(
    rho: float,
    delta: float,
    s: float,
    p: int = 3,
    omega: int = 1,
    horizon_factor: float = HORIZON_FACTOR,
    rotation_margin: float = ROTATION_MARGIN,
    smallness: float = SMALLNESS,
    caps: Caps = Caps(),
) -> ExperimentParams:
    """Smallest integer ``N <= caps.n_max`` meeting every condition.

    Conditions: the H^s distance of the data is below ``delta`` and both
    data fit in ``rho``; the zero-mode gap phase ``2|beta|^2 N^2 t`` turns by
    at least ``rotation_margin`` before ``T* = min(delta, c N^-2 sigma^-2
    log(1/sigma))``; and the error term ``N^-1/2 delta^3`` is at most
    ``smallness * rho``. Raises :class:`InfeasibleError` carrying the
    frequency that would be needed when the cap is too low.
    """
    _thm1_check_inputs(rho, delta, s)
    if p != 3:
        raise ValueError("the frequency-dilation construction is implemented for p = 3")
    ns = np.arange(1, caps.n_max + 1, dtype=float)
    q = thm1_quantities(rho, delta, s, ns, horizon_factor)
    conds = thm1_conditions(q, rho, delta, rotation_margin, smallness)
    ok = np.logical_and.reduce(list(conds.values()))
    if not ok.any():
        at_cap = {k: bool(v[-1]) for k, v in conds.items()}
        # scan beyond the cap on a logarithmic grid to report what would be needed
        log2n = np.arange(math.log2(caps.n_max), 1000.0, 1.0 / 64)
        qq = thm1_quantities(rho, delta, s, 2.0 ** log2n, horizon_factor)
        cc = thm1_conditions(qq, rho, delta, rotation_margin, smallness)
        beyond = np.logical_and.reduce(list(cc.values()))
        required = float(log2n[np.argmax(beyond)]) if beyond.any() else None
        raise InfeasibleError(
            f"no N <= {caps.n_max} satisfies the conditions"
            + (f"; N ~ 2^{required:.2f} would be needed" if required is not None else ""),
            required_log2_n=required,
            details={
                "conditions_at_cap": at_cap,
                "rotation_at_cap": float(q["rotation"][-1]),
                "t_star_at_cap": float(q["t_star"][-1]),
            },
        )
    i = int(np.argmax(ok))
    return _thm1_params(rho, delta, s, int(ns[i]), omega, horizon_factor, rotation_margin, smallness, caps)


def _thm1_params(rho, delta, s, N, omega, horizon_factor, rotation_margin, smallness, caps) -> ExperimentParams:
    q = thm1_quantities(rho, delta, s, float(N), horizon_factor)
    conds = thm1_conditions(q, rho, delta, rotation_margin, smallness)
    return ExperimentParams(
        rho=rho,
        delta=delta,
        s=s,
        N=int(N),
        p=3,
        omega=omega,
        horizon_factor=horizon_factor,
        rotation_margin=rotation_margin,
        smallness=smallness,
        caps=caps,
        alpha=float(q["alpha"]),
        beta=float(q["beta"]),
        sigma=float(q["sigma"]),
        t_star=float(q["t_star"]),
        conditions={k: bool(v) for k, v in conds.items()},
    )


def thm1_params_at(
    rho: float,
    delta: float,
    s: float,
    N: int,
    omega: int = 1,
    horizon_factor: float = HORIZON_FACTOR,
    rotation_margin: float = ROTATION_MARGIN,
    smallness: float = SMALLNESS,
    caps: Caps = Caps(),
) -> ExperimentParams:
    """Parameters at a prescribed ``N`` whether or not it is admissible (negative controls)."""
    _thm1_check_inputs(rho, delta, s)
    return _thm1_params(rho, delta, s, N, omega, horizon_factor, rotation_margin, smallness, caps)


def thm1_initial_data(params: ExperimentParams) -> tuple[SpectralField, SpectralField]:
    """``u(0) = rho'`` and ``u~(0) = rho' + (delta/4) N^-s exp(iNx)``."""
    N = params.N
    rp = params.rho_prime
    u0 = SpectralField.from_dict({0: rp}, nmax=N)
    ut0 = SpectralField.from_dict({0: rp, N: params.delta * N ** (-params.s) / 4}, nmax=N)
    return u0, ut0


def run_thm1(
    params: ExperimentParams,
    config: SolverConfig | None = None,
    samples: int = 400,
    direct: bool | None = None,
) -> ExperimentReport:
    """Zero-mode gap between the constant solution and the perturbed one.

    The perturbed solution is computed at unit scale from ``alpha + beta
    exp(ix)`` and lifted by :func:`rescale_up`. When the frequency-``N`` grid
    fits under the cap (or ``direct=True``) it is also evolved directly and
    both routes must agree to 1e-6 in L^2.
    """
    if params.N is None or params.alpha is None:
        raise ValueError("run_thm1 needs parameters from choose_parameters_thm1 or thm1_params_at")
    nls = params.nls
    N = params.N
    config = config or SolverConfig(gridsize=16, dt=0.01)
    caps = params.caps
    rp = params.rho_prime
    t_star = params.t_star
    tau_end = N ** 2 * t_star
    steps = math.ceil(tau_end / config.dt)
    if steps > caps.max_steps:
        raise InfeasibleError(
            f"unit-scale run needs {steps} steps (cap {caps.max_steps})",
            required_log2_n=math.log2(N),
        )

    rep = ExperimentReport(kind="thm1", params=params.to_json())
    u0, ut0 = thm1_initial_data(params)
    rep.measured["hs_norm_u0"] = sobolev_norm(u0, params.s)
    rep.measured["hs_norm_tilde_u0"] = sobolev_norm(ut0, params.s)
    rep.measured["hs_distance"] = sobolev_norm(ut0 - u0, params.s)
    rep.verdicts["closeness"] = rep.measured["hs_distance"] < params.delta
    rep.verdicts["budget"] = max(rep.measured["hs_norm_u0"], rep.measured["hs_norm_tilde_u0"]) <= params.rho

    times = np.linspace(0.0, t_star, samples + 1)
    data = TwoModeData(params.alpha, params.beta, params.sigma)
    unit = evolve(data.initial_field(), nls, config.with_checkpoints(N ** 2 * times))
    lifted = rescale_up(unit.trajectory, ScalingMap(N, nls.m))
    rep.configs.append({"route": "unit-scale", **unit.config.to_json()})

    if direct is None:
        direct = config.gridsize * N <= caps.gridsize_max
    if direct:
        dcfg = SolverConfig(
            gridsize=config.gridsize * N,
            dt=config.dt / N ** 2,
            dealias=config.dealias,
            t_checkpoints=tuple(times),
        )
        ev = evolve(ut0, nls, dcfg)
        rep.configs.append({"route": "direct", **dcfg.to_json()})
        width = min(ev.trajectory.nmax, lifted.nmax)
        gap_l2 = np.sqrt(
            np.sum(
                np.abs(ev.trajectory.coeffs[:, ev.trajectory.nmax - width : ev.trajectory.nmax + width + 1]
                       - lifted.coeffs[:, lifted.nmax - width : lifted.nmax + width + 1]) ** 2,
                axis=1,
            )
        )
        rep.measured["rescaling_mismatch"] = float(gap_l2.max())
        if rep.measured["rescaling_mismatch"] > RESCALING_TOL:
            raise ConsistencyError(
                f"direct and rescaled evolutions differ by {rep.measured['rescaling_mismatch']:.3e} in L2"
            )
        rep.verdicts["rescaling_consistency"] = True
    else:
        rep.notes.append(f"direct frequency-{N} evolution skipped (grid or step cap); rescaled route only")

    zero_tilde = lifted.mode(0)
    zero_u = np.array([plane_wave(nls, rp, 0, t)[0] for t in times])
    gap = np.abs(zero_u - zero_tilde)
    predicted = rp * np.abs(np.exp(1j * nls.omega * 2 * params.beta ** 2 * N ** 2 * times) - 1)
    sup_gap = float(gap.max())
    rep.traces = {
        "t": times,
        "gap": gap,
        "predicted_gap": predicted,
        # conserved quantities of the lifted solution
        "mass": unit.mass * N ** 2,
        "hamiltonian": unit.hamiltonian * N ** (2 + 2 / nls.m),
    }
    rep.measured.update(
        {
            "gap_at_zero": float(gap[0]),
            "sup_gap": sup_gap,
            "c_measured": sup_gap / params.rho,
            "max_prediction_error": float(np.max(np.abs(gap - predicted))),
            "error_scale_N_sigma3": N * params.sigma ** 3,
            "error_term": N ** -0.5 * params.delta ** 3,
            "rotation": 2 * params.beta ** 2 * N ** 2 * t_star,
            "t_star": t_star,
            "unit_mass_drift": unit.mass_drift,
            "unit_hamiltonian_drift": unit.hamiltonian_drift,
        }
    )
    rep.verdicts["parameters_admissible"] = all(params.conditions.values())
    rep.verdicts["sup_gap_ge_c_rho"] = rep.measured["c_measured"] >= C_THRESHOLD
    return rep


# -- two-solution construction (p >= 5) ----------------------------------------------

def default_M(rho: float, delta: float) -> float:
    """Smallest ``M`` with ``rho^3 delta M^2 * delta >= 2 pi``, at least 1."""
    return max(1.0, math.sqrt(ROTATION_MARGIN / (rho ** 3 * delta ** 2)))


def thm2_data_norms(rho, delta, s, M, log_n: float) -> tuple[float, float]:
    """H^s norms of ``rho' + delta j + rho M exp(iNx)`` for j = 1, 2 (``log_n = ln N``)."""
    rp = rho / 4
    # (1 + N)^(2s) evaluated through logs so astronomically large N stay finite
    log1pn = log_n + math.log1p(math.exp(-log_n)) if log_n > 0 else math.log(2.0)
    weight = math.exp(2 * s * log1pn)
    return tuple(math.sqrt((rp + delta * j) ** 2 + weight * (rho * M) ** 2) for j in (1, 2))


def thm2_required_log_n(params: ExperimentParams, M: float) -> dict:
    """Natural logs of the smallest ``N`` meeting each condition separately."""
    rho, delta, s, m = params.rho, params.delta, params.s, params.nls.m
    c = params.horizon_factor
    B = rho * M
    # size budget: bisect in log N
    lo, hi = 0.0, 1.0
    while sum(thm2_data_norms(rho, delta, s, M, hi)) > rho:
        hi *= 2
        if hi > 1e7:
            hi = math.inf
            break
    if math.isfinite(hi):
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if sum(thm2_data_norms(rho, delta, s, M, mid)) > rho:
                lo = mid
            else:
                hi = mid
    budget = hi
    # transferred error (rho M)^(2m) N^(1/m - 2) <= smallness * rho
    error = max(0.0, (2 * m * math.log(B) - math.log(params.smallness * rho)) / (2 - 1 / m))
    # horizon c N^-2 sigma^-2m log(1/sigma) >= delta with sigma = B N^(-1/m)
    need = delta * B ** (2 * m) / c
    horizon_ = m * (need + math.log(B))
    sigma_small = m * math.log(4 * B)
    return {"budget": budget, "error_small": error, "horizon": horizon_, "sigma_small": sigma_small}


def thm2_phase_rate(p: int, omega: int, A1: float, A2: float, B: float) -> float:
    """Rate of ``arg(z_1 conj(z_2))`` for lifted zero modes ``A_j exp(i omega Phi(A_j, B) t)``.

    For p = 5 this is ``omega((A1^4 - A2^4) + 6 (A1^2 - A2^2) B^2)``; the
    lifted rates do not depend on N because the phase sum is homogeneous of
    degree 2m.
    """
    params = NlsParams(p, omega)
    return omega * (two_mode_phase(params, A1, B) - two_mode_phase(params, A2, B))


def run_thm2(
    params: ExperimentParams,
    config: SolverConfig | None = None,
    samples: int = 4000,
) -> ExperimentReport:
    """Two data differing by the constant ``delta`` whose zero modes decohere.

    ``u_j(0) = rho' + delta j + rho M exp(iNx)``. If an admissible ``N`` fits
    under the cap and the unit-scale run fits the step budget, both
    solutions are computed numerically; otherwise the zero modes come from
    the explicit two-mode ansatz and the report is labelled as such.
    """
    nls = params.nls
    if nls.p < 5:
        raise ValueError("the two-solution construction needs p >= 5")
    m = nls.m
    M = params.M if params.M is not None else default_M(params.rho, params.delta)
    rp, delta = params.rho_prime, params.delta
    A = (rp + delta, rp + 2 * delta)
    B = params.rho * M
    caps = params.caps
    rep = ExperimentReport(kind="thm2", params={**params.to_json(), "M": M})

    required = thm2_required_log_n(params, M)
    log_required = max(required.values())
    rep.measured["required_log2_N"] = {k: v / math.log(2) for k, v in required.items()}
    if params.N is not None:
        N, log_n = int(params.N), math.log(params.N)
    elif log_required <= math.log(caps.n_max):
        N, log_n = int(math.ceil(math.exp(log_required))), log_required
    else:
        N, log_n = None, log_required
    rep.measured["log2_N"] = log_n / math.log(2)

    norms = thm2_data_norms(params.rho, delta, params.s, M, log_n)
    rep.measured["hs_norms"] = list(norms)
    rep.verdicts["budget"] = sum(norms) <= params.rho * (1 + 1e-12)
    rep.measured["initial_difference"] = A[0] - A[1]
    rep.verdicts["difference_is_constant_delta"] = math.isclose(abs(A[0] - A[1]), delta, rel_tol=1e-12)

    times = np.linspace(0.0, delta, samples + 1)
    predicted_rate = thm2_phase_rate(nls.p, nls.omega, A[0], A[1], B)
    zero_closed = [
        a * np.exp(1j * nls.omega * two_mode_phase(nls, a, B) * times) for a in A
    ]

    use_pde = False
    if N is not None:
        config = config or SolverConfig(gridsize=16, dt=0.1 if nls.p >= 5 else 0.01)
        sigma = B / N ** (1 / m)
        steps = math.ceil(N ** 2 * delta / config.dt)
        use_pde = sigma <= 0.25 and steps <= caps.max_steps
        if not use_pde:
            rep.notes.append(
                f"N={N}: unit-scale sigma={sigma:.3g} or {steps} steps exceed the desk caps"
            )
    if use_pde:
        scaling = ScalingMap(N, m)
        zero_modes = []
        bound_dist = []
        for a in A:
            data = TwoModeData(a / scaling.amplitude, B / scaling.amplitude)
            ev = evolve(data.initial_field(), nls, config.with_checkpoints(N ** 2 * times))
            if nls.omega < 0:
                _check_hamiltonian_sign(ev)
            lifted = rescale_up(ev.trajectory, scaling)
            zero_modes.append(lifted.mode(0))
            approx = approx_two_mode_samples(nls, data, ev.trajectory.times)
            d = ev.trajectory.coeffs.copy()
            d[:, ev.trajectory.nmax] -= approx[:, 0]
            d[:, ev.trajectory.nmax + 1] -= approx[:, 1]
            w = (1.0 + np.abs(ev.trajectory.frequencies)) ** 2
            bound_dist.append(scaling.amplitude * np.sqrt(np.sum(w * np.abs(d) ** 2, axis=1)))
            rep.configs.append({"route": "unit-scale", "alpha": data.alpha, **ev.config.to_json()})
        z1, z2 = zero_modes
        closed_gap = np.abs(zero_closed[0] - zero_closed[1])
        pde_gap = np.abs(z1 - z2)
        rep.measured["closed_form_vs_pde"] = float(np.max(np.abs(closed_gap - pde_gap)))
        rep.measured["transferred_bound"] = float(np.max(bound_dist[0] + bound_dist[1]))
        rep.verdicts["closed_form_within_bound"] = (
            rep.measured["closed_form_vs_pde"] <= rep.measured["transferred_bound"] + 1e-12
        )
        rep.notes.append("zero modes from the numerical solution (unit scale, lifted)")
    else:
        z1, z2 = zero_closed
        rep.notes.append(
            "CLOSED-FORM FALLBACK: zero modes from the explicit two-mode ansatz, not from the PDE; "
            "the admissible N is beyond the desk-scale caps"
        )
        rep.configs.append({"route": "closed-form", "samples": samples})

    gap = np.abs(z1 - z2)
    measured_rate = _unwrapped_rate(times, z1 * np.conj(z2))
    # simplified form: common phase removed
    simplified = np.abs(A[0] * np.exp(1j * predicted_rate * times) - A[1])
    rep.traces = {"t": times, "gap": gap, "simplified_gap": simplified}
    err_term = (B ** (2 * m)) * math.exp((1 / m - 2) * log_n)
    rep.measured.update(
        {
            "M": M,
            "gap_at_zero": float(gap[0]),
            "sup_gap": float(gap.max()),
            "c_measured": float(gap.max()) / params.rho,
            "sup_gap_bound": A[0] + A[1],
            "predicted_rate": predicted_rate,
            "measured_rate": measured_rate,
            "rate_relative_error": abs(measured_rate - predicted_rate) / abs(predicted_rate),
            "rotation_over_delta": abs(predicted_rate) * delta,
            "rho3_delta_M2_delta": params.rho ** 3 * delta * M ** 2 * delta,
            "error_term": err_term,
            "simplification_residual": float(np.max(np.abs(gap - simplified))),
        }
    )
    rep.verdicts["sup_gap_ge_c_rho"] = rep.measured["c_measured"] >= C_THRESHOLD
    rep.verdicts["rate_within_5pct"] = rep.measured["rate_relative_error"] <= RATE_TOL
    rep.verdicts["error_term_small"] = err_term <= params.smallness * params.rho
    return rep


# -- mechanism checks on the numerical solution -----------------------------------

def measure_thm1_rate(
    data: TwoModeData,
    omega: int = 1,
    N: int = 1,
    t_end: float | None = None,
    config: SolverConfig | None = None,
    samples: int = 400,
) -> dict:
    """Rotation rate of the zero-mode gap for ``u~`` lifted to frequency ``N``.

    Compares ``arg(u~_0 conj(u_0))`` against ``2 omega |beta|^2 N^2`` where
    ``u`` is the constant-amplitude plane wave at the same zero mode.
    """
    nls = NlsParams(3, omega)
    predicted = 2 * omega * abs(data.beta) ** 2 * N ** 2
    if t_end is None:
        t_end = 1.0 / abs(predicted)
    config = config or SolverConfig(gridsize=16, dt=0.01)
    times = np.linspace(0.0, t_end, samples + 1)
    ev = evolve(data.initial_field(), nls, config.with_checkpoints(N ** 2 * times))
    zt = N * ev.trajectory.mode(0)
    zu = N * data.alpha * np.exp(1j * omega * abs(data.alpha) ** 2 * N ** 2 * times)
    measured = _unwrapped_rate(times, zt * np.conj(zu))
    return {
        "predicted": predicted,
        "measured": measured,
        "relative_error": abs(measured - predicted) / abs(predicted),
        "config": ev.config.to_json(),
    }


def measure_thm2_rate(
    alpha1: float,
    alpha2: float,
    beta: float,
    p: int = 5,
    omega: int = 1,
    t_end: float | None = None,
    config: SolverConfig | None = None,
    samples: int = 400,
) -> dict:
    """Rotation rate of ``U_1(0) conj(U_2(0))`` for two unit-scale solutions."""
    nls = NlsParams(p, omega)
    predicted = thm2_phase_rate(p, omega, abs(alpha1), abs(alpha2), abs(beta))
    if t_end is None:
        t_end = 1.0 / abs(predicted)
    config = config or SolverConfig(gridsize=16, dt=0.1)
    times = np.linspace(0.0, t_end, samples + 1)
    zs = []
    for a in (alpha1, alpha2):
        data = TwoModeData(a, beta)
        ev = evolve(data.initial_field(), nls, config.with_checkpoints(times))
        zs.append(ev.trajectory.mode(0))
    measured = _unwrapped_rate(times, zs[0] * np.conj(zs[1]))
    return {
        "predicted": predicted,
        "measured": measured,
        "relative_error": abs(measured - predicted) / abs(predicted),
        "config": config.with_checkpoints(times).to_json(),
    }


def error_exponent(
    params: NlsParams,
    sigmas: Sequence[float],
    horizon_factor: float = HORIZON_FACTOR,
    config: SolverConfig | None = None,
    samples: int = 200,
) -> dict:
    """Fit ``sup_t ||U - u||_H1 ~ C sigma^q`` over a sigma sweep.

    The horizon is ``c sigma^-(p-1) log(1/sigma)`` throughout; the slope of
    log distance against log sigma estimates q.
    """
    if len(sigmas) < 2:
        raise ValueError("need at least two sigma values")
    dists = []
    for s in sigmas:
        trace = verify_approximation_bound(params, default_two_mode_data(s), horizon_factor, config, samples)
        dists.append(trace.max_ratio * s ** trace.q)
    slope, intercept = np.polyfit(np.log(sigmas), np.log(dists), 1)
    return {"sigmas": list(sigmas), "max_distance": dists, "exponent": float(slope), "constant": float(np.exp(intercept))}
