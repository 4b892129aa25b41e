"""Fourier-side dynamics and its two-mode truncation.

``d a_k / dt = i k^2 a_k + i omega sum a_k1 conj(a_k2) a_k3 ... a_k(2m+1)``
over ``k1 - k2 + k3 - ... + k(2m+1) = k``. Conjugated factors sit at the
even positions k2, k4, ...

In truncated mode the indices are restricted to {0, 1}, so the outputs
live on ``{-m, ..., m+1}``. The linear term is ``i k^2 a_k`` for every k,
including the modes other than 0 and 1.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .closed_form import NlsParams
from .errors import DivergenceError
from .spectral import SpectralField, Trajectory

FULL = "full"
TRUNCATED = "truncated"


@lru_cache(maxsize=None)
def tuple_multiplicities(m: int) -> dict[int, tuple[tuple[int, int, int], ...]]:
    """Enumerate ``(k1, ..., k(2m+1)) in {0,1}^(2m+1)`` and group them.

    Returns ``k -> ((count, j_plain, j_conj), ...)`` where ``j_plain`` of the
    m+1 unconjugated factors and ``j_conj`` of the m conjugated ones sit at
    frequency 1, and ``count`` tuples share that pattern.
    """
    groups: dict[int, Counter] = {}
    for ks in itertools.product((0, 1), repeat=2 * m + 1):
        j_plain = sum(ks[0::2])
        j_conj = sum(ks[1::2])
        groups.setdefault(j_plain - j_conj, Counter())[(j_plain, j_conj)] += 1
    return {
        k: tuple((count, jp, jc) for (jp, jc), count in sorted(c.items()))
        for k, c in sorted(groups.items())
    }


@dataclass(frozen=True)
class ModeSystem:
    """State of the Fourier ODE on a frequency window.

    ``mode="truncated"`` restricts the convolution to indices in {0, 1}; the
    state then lives on ``[-(m+1), m+1]`` and frequency ``-(m+1)`` stays zero.
    """

    params: NlsParams
    state: SpectralField
    mode: str = TRUNCATED

    def __post_init__(self):
        if self.mode not in (FULL, TRUNCATED):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == TRUNCATED:
            m = self.params.m
            if self.state.nmax > m + 1:
                outside = [n for n in self.state.support() if not -m <= n <= m + 1]
                if outside:
                    raise ValueError(f"truncated system has no frequencies {outside}")
            object.__setattr__(self, "state", self.state.resized(m + 1))
        elif self.state.nmax < 1:
            object.__setattr__(self, "state", self.state.resized(1))

    @classmethod
    def two_mode(cls, params: NlsParams, alpha: complex, beta: complex) -> "ModeSystem":
        return cls(params, SpectralField.from_dict({0: alpha, 1: beta}, params.m + 1), TRUNCATED)

    @property
    def window(self) -> list[int]:
        if self.mode == TRUNCATED:
            return list(range(-self.params.m, self.params.m + 2))
        return list(range(-self.state.nmax, self.state.nmax + 1))

    def with_state(self, state: SpectralField) -> "ModeSystem":
        return ModeSystem(self.params, state, self.mode)


def _truncated_rhs(params: NlsParams, nmax: int) -> Callable[[np.ndarray], np.ndarray]:
    m, w = params.m, params.omega
    ksq = np.arange(-nmax, nmax + 1) ** 2
    groups = tuple_multiplicities(m)

    def rhs(a: np.ndarray) -> np.ndarray:
        a0, a1 = a[nmax], a[nmax + 1]
        c0, c1 = np.conj(a0), np.conj(a1)
        out = 1j * ksq * a
        for k, patterns in groups.items():
            s = 0j
            for count, jp, jc in patterns:
                s += count * a1 ** jp * a0 ** (m + 1 - jp) * c1 ** jc * c0 ** (m - jc)
            out[k + nmax] += 1j * w * s
        return out

    return rhs


def _full_rhs(params: NlsParams, nmax: int) -> Callable[[np.ndarray], np.ndarray]:
    m, w = params.m, params.omega
    ksq = np.arange(-nmax, nmax + 1) ** 2

    def rhs(a: np.ndarray) -> np.ndarray:
        nl = SpectralField(a, nmax).power_nonlinearity(m, cap=nmax).values
        return 1j * ksq * a + 1j * w * nl

    return rhs


def _rhs_for(system: ModeSystem) -> Callable[[np.ndarray], np.ndarray]:
    if system.mode == TRUNCATED:
        return _truncated_rhs(system.params, system.state.nmax)
    return _full_rhs(system.params, system.state.nmax)


def fnls_rhs(system: ModeSystem) -> SpectralField:
    """Time derivatives of all coefficients in the system's window.

    In full mode the convolution is exact and then projected back onto
    the window (Galerkin truncation).
    """
    return SpectralField(_rhs_for(system)(system.state.values.copy()), system.state.nmax)


def _rk4_step(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(
    system: ModeSystem,
    t_final: float,
    dt: float,
    sample_times: Sequence[float] | None = None,
) -> Trajectory:
    """Classical RK4 with steps no longer than ``dt``.

    Each interval between consecutive sample times is split into equal
    steps so that samples are hit exactly. Defaults to 101 samples.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_final < 0:
        raise ValueError("t_final must be nonnegative")
    if sample_times is None:
        sample_times = np.linspace(0.0, t_final, 101)
    sample_times = np.asarray(sample_times, dtype=float)
    if np.any(np.diff(sample_times) < 0) or sample_times[0] < 0 or sample_times[-1] > t_final * (1 + 1e-12):
        raise ValueError("sample times must be nondecreasing and lie in [0, t_final]")

    rhs = _rhs_for(system)
    y = system.state.values.copy()
    t = 0.0
    out = np.empty((sample_times.size, y.size), dtype=complex)
    for i, target in enumerate(sample_times):
        span = target - t
        nsteps = int(np.ceil(span / dt - 1e-9)) if span > 0 else 0
        if nsteps:
            h = span / nsteps
            with np.errstate(over="ignore", invalid="ignore"):
                for j in range(nsteps):
                    y = _rk4_step(rhs, y, h)
                    if not np.isfinite(y).all():
                        raise DivergenceError(t + (j + 1) * h)
            t = float(target)
        out[i] = y
    return Trajectory(sample_times, out, system.state.nmax)
