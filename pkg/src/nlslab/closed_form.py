"""Explicit and approximate solutions of ``-i u_t + u_xx = omega |u|^(p-1) u``.

The two-mode ansatz keeps frequencies 0 and 1 with amplitude-dependent
phase rates. Its nonlinear forcing is expanded exactly (integer
multinomial coefficients) and grouped by the power of ``exp(i(x+t))``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NearResonanceError
from .spectral import SpectralField

DEFAULT_SIGMA_CAP = 0.25
RESONANCE_TOL = 1e-6


@dataclass(frozen=True)
class NlsParams:
    """Power ``p = 2m + 1`` and sign ``omega`` (+1 defocusing, -1 focusing)."""

    p: int = 3
    omega: int = 1

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 3 or self.p % 2 == 0:
            raise ValueError(f"p must be an odd integer >= 3, got {self.p}")
        if self.omega not in (1, -1):
            raise ValueError(f"omega must be +1 or -1, got {self.omega}")

    @property
    def m(self) -> int:
        return (self.p - 1) // 2


@dataclass(frozen=True)
class TwoModeData:
    """Initial datum ``alpha + beta exp(ix)`` with ``|alpha|, |beta| <= sigma``."""

    alpha: complex
    beta: complex
    sigma: float | None = None
    sigma_cap: float = DEFAULT_SIGMA_CAP

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        bound = max(abs(self.alpha), abs(self.beta))
        if self.sigma is None:
            object.__setattr__(self, "sigma", bound)
        sigma = float(self.sigma)
        object.__setattr__(self, "sigma", sigma)
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if bound > sigma * (1 + 1e-12):
            raise ValueError(f"|alpha|, |beta| must not exceed sigma={sigma}")
        if sigma > self.sigma_cap:
            raise ValueError(f"sigma={sigma} exceeds the smallness cap {self.sigma_cap}")

    def initial_field(self) -> SpectralField:
        return SpectralField.from_dict({0: self.alpha, 1: self.beta}, nmax=1)


def _phase(m: int, a: float, b: float) -> float:
    return math.fsum(
        math.comb(m + 1, j) * math.comb(m, j) * a ** (2 * m - 2 * j) * b ** (2 * j) for j in range(m + 1)
    )


def two_mode_phase(params: NlsParams, a: float, b: float) -> float:
    """``sum_j C(m+1, j) C(m, j) a^(2m-2j) b^(2j)``.

    With ``a = |alpha|, b = |beta|`` this is the zero-mode phase rate divided
    by omega; swapping the arguments gives the frequency-one rate.
    """
    if a < 0 or b < 0:
        raise ValueError("two_mode_phase takes moduli")
    return _phase(params.m, a, b)


def phase_coefficients(m: int) -> tuple[int, ...]:
    """The integers ``C(m+1, j) C(m, j)`` for ``j = 0..m``."""
    return tuple(math.comb(m + 1, j) * math.comb(m, j) for j in range(m + 1))


def plane_wave(params: NlsParams, alpha: complex, N: int, t: float) -> SpectralField:
    """Exact single-mode solution ``alpha exp(i(N^2 + omega |alpha|^(p-1)) t + iNx)``."""
    rate = N * N + params.omega * abs(alpha) ** (params.p - 1)
    return SpectralField.from_dict({N: alpha * cmath.exp(1j * rate * t)}, nmax=abs(N))


def two_mode_rates(params: NlsParams, data: TwoModeData) -> tuple[float, float]:
    """Angular rates of coefficients 0 and 1 of the two-mode ansatz."""
    a, b = abs(data.alpha), abs(data.beta)
    w = params.omega
    return w * _phase(params.m, a, b), w * _phase(params.m, b, a) + 1.0


def approx_two_mode(params: NlsParams, data: TwoModeData, t: float) -> SpectralField:
    r0, r1 = two_mode_rates(params, data)
    return SpectralField.from_dict(
        {0: data.alpha * cmath.exp(1j * r0 * t), 1: data.beta * cmath.exp(1j * r1 * t)}, nmax=1
    )


def approx_two_mode_samples(params: NlsParams, data: TwoModeData, times) -> np.ndarray:
    """Coefficients 0 and 1 of the ansatz at many times, shape ``(len(times), 2)``."""
    times = np.asarray(times, dtype=float)
    r0, r1 = two_mode_rates(params, data)
    return np.stack([data.alpha * np.exp(1j * r0 * times), data.beta * np.exp(1j * r1 * times)], axis=1)


# -- multinomial expansion of |u|^(2m) u for u = A + B z ----------------------

@lru_cache(maxsize=None)
def nonlinearity_monomials(m: int) -> dict[int, tuple[tuple[int, tuple[int, int, int, int]], ...]]:
    """Exact expansion of ``u^(m+1) conj(u)^m`` with ``u = A + B z``, ``|z| = 1``.

    Returns ``k -> ((coefficient, (e_A, e_B, e_Abar, e_Bbar)), ...)`` grouping
    monomials by the power ``k`` of ``z``. Coefficients are exact integers.
    """
    groups: dict[int, list] = {}
    for a in range(m + 2):
        for b in range(m + 1):
            coef = math.comb(m + 1, a) * math.comb(m, b)
            groups.setdefault(a - b, []).append((coef, (m + 1 - a, a, m - b, b)))
    return {k: tuple(v) for k, v in sorted(groups.items())}


@dataclass(frozen=True)
class ForcingTerm:
    """One component ``c exp(i omega lam t) exp(i k (x + t))`` of ``|u|^(2m) u``."""

    k: int
    c: complex
    lam: float


def nonlinear_mode_expansion(params: NlsParams, data: TwoModeData) -> list[ForcingTerm]:
    """All components of ``|u_ab|^(2m) u_ab`` for the two-mode ansatz.

    The time dependence of a monomial only enters through the number of B
    factors minus conjugated B factors, so every monomial with the same
    power ``k`` shares the rate ``(1-k) Phi(|a|,|b|) + k Phi(|b|,|a|)``.
    """
    m = params.m
    al, be = data.alpha, data.beta
    vals = (al, be, al.conjugate(), be.conjugate())
    phi0 = _phase(m, abs(al), abs(be))
    phi1 = _phase(m, abs(be), abs(al))
    terms = []
    for k, monos in nonlinearity_monomials(m).items():
        c = sum(
            coef * vals[0] ** e[0] * vals[1] ** e[1] * vals[2] ** e[2] * vals[3] ** e[3] for coef, e in monos
        )
        terms.append(ForcingTerm(k, complex(c), (1 - k) * phi0 + k * phi1))
    return terms


def error_structure(params: NlsParams, data: TwoModeData) -> list[ForcingTerm]:
    """The components of the forcing that fall outside frequencies 0 and 1."""
    return [term for term in nonlinear_mode_expansion(params, data) if term.k not in (0, 1)]


def quintic_error_structure(data: TwoModeData, omega: int) -> list[tuple[int, complex, float]]:
    """``(k, c_k, lambda_k)`` for ``k in (-2, -1, 2, 3)``, quintic case."""
    return [(t.k, t.c, t.lam) for t in error_structure(NlsParams(5, omega), data)]


def evaluate_expansion(terms, omega: int, t, x) -> np.ndarray:
    """``sum c_k exp(i omega lam_k t) exp(i k (x + t))`` at arrays ``t``, ``x``."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.zeros(np.broadcast(t, x).shape, dtype=complex)
    for term in terms:
        out = out + term.c * np.exp(1j * omega * term.lam * t) * np.exp(1j * term.k * (x + t))
    return out


# -- Duhamel correction -------------------------------------------------------

@dataclass(frozen=True)
class CorrectionMode:
    """``v_k(t) = amplitude * (exp(i rate t) - exp(i k^2 t))``."""

    k: int
    amplitude: complex
    rate: float


@dataclass(frozen=True)
class TwoModeCorrection:
    """Solution ``v`` of ``(-i d_t + d_xx) v = omega E``, ``v(0) = 0``.

    For ``p = 3`` this is supported on frequencies -1 and 2.
    """

    modes: tuple[CorrectionMode, ...]

    def field(self, t: float) -> SpectralField:
        coeffs = {
            mode.k: mode.amplitude * (cmath.exp(1j * mode.rate * t) - cmath.exp(1j * mode.k * mode.k * t))
            for mode in self.modes
        }
        nmax = max((abs(k) for k in coeffs), default=0)
        return SpectralField.from_dict(coeffs, nmax)

    def samples(self, times) -> dict[int, np.ndarray]:
        times = np.asarray(times, dtype=float)
        return {
            mode.k: mode.amplitude * (np.exp(1j * mode.rate * times) - np.exp(1j * mode.k ** 2 * times))
            for mode in self.modes
        }


def two_mode_correction(params: NlsParams, data: TwoModeData) -> TwoModeCorrection:
    """Explicit correction driven by the off-system forcing components.

    A forcing ``omega c exp(i nu t) exp(ikx)`` with ``nu = omega lam + k`` is
    answered by ``omega c / (nu - k^2) (exp(i nu t) - exp(i k^2 t))``.
    """
    w = params.omega
    modes = []
    for term in error_structure(params, data):
        nu = w * term.lam + term.k
        gap = nu - term.k ** 2
        if abs(gap) < RESONANCE_TOL:
            raise NearResonanceError(f"forcing at k={term.k} is resonant (detuning {gap:.3g})")
        modes.append(CorrectionMode(term.k, w * term.c / gap, nu))
    return TwoModeCorrection(tuple(modes))


def cubic_correction(data: TwoModeData, omega: int, t: float) -> SpectralField:
    """The cubic correction ``v(t)`` on frequencies -1 and 2."""
    return two_mode_correction(NlsParams(3, omega), data).field(t)


def corrected_two_mode(params: NlsParams, data: TwoModeData, t: float) -> SpectralField:
    """The ansatz plus its explicit correction, ``u' = u + v``."""
    return approx_two_mode(params, data, t) + two_mode_correction(params, data).field(t)
