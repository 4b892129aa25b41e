"""Fourier-coefficient fields on the torus R/2piZ.

A :class:`SpectralField` stores the coefficients ``a_n`` of
``u(x) = sum_n a_n exp(i n x)`` on the symmetric window ``|n| <= nmax``.
Coefficients follow the normalisation ``a_n = (1/2pi) int u(x) exp(-i n x) dx``,
so the zero-mode coefficient is the spatial mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import AliasingError

__all__ = [
    "SpectralField",
    "ScalingMap",
    "Trajectory",
    "sobolev_norm",
    "to_physical",
    "from_physical",
    "fft_grid_size",
    "dealias_two_thirds",
    "rescale_field",
    "rescale_up",
]


def fft_grid_size(bandwidth: int) -> int:
    """Smallest power of two strictly larger than ``2 * bandwidth``."""
    g = 8
    while g <= 2 * bandwidth:
        g *= 2
    return g


class SpectralField:
    """Immutable set of Fourier coefficients on ``[-nmax, nmax]``.

    Frequencies outside the window are zero. Arithmetic returns new fields;
    products widen the window unless an explicit ``cap`` truncates them.
    """

    __slots__ = ("_data", "nmax")

    def __init__(self, data, nmax: int | None = None):
        arr = np.array(data, dtype=complex).reshape(-1)
        if nmax is None:
            if arr.size % 2 != 1:
                raise ValueError("coefficient array must have odd length 2*nmax+1")
            nmax = arr.size // 2
        if nmax < 0 or arr.size != 2 * nmax + 1:
            raise ValueError(f"expected {2 * nmax + 1} coefficients, got {arr.size}")
        arr.flags.writeable = False
        self._data = arr
        self.nmax = int(nmax)

    @classmethod
    def zeros(cls, nmax: int) -> "SpectralField":
        return cls(np.zeros(2 * nmax + 1, dtype=complex), nmax)

    @classmethod
    def from_dict(cls, coeffs: Mapping[int, complex], nmax: int | None = None) -> "SpectralField":
        keys = [int(n) for n in coeffs]
        need = max((abs(n) for n in keys), default=0)
        if nmax is None:
            nmax = need
        elif need > nmax:
            raise ValueError(f"frequency {need} outside window nmax={nmax}")
        arr = np.zeros(2 * nmax + 1, dtype=complex)
        for n, c in coeffs.items():
            arr[int(n) + nmax] += complex(c)
        return cls(arr, nmax)

    @classmethod
    def from_fft_order(cls, coeffs: np.ndarray, nmax: int) -> "SpectralField":
        """Build from a length-G array in numpy FFT ordering (already divided by G)."""
        g = coeffs.shape[-1]
        if 2 * nmax + 1 > g:
            raise AliasingError(f"window nmax={nmax} does not fit an FFT array of size {g}")
        idx = np.arange(-nmax, nmax + 1) % g
        return cls(coeffs[idx], nmax)

    # -- access ---------------------------------------------------------
    @property
    def values(self) -> np.ndarray:
        """Read-only coefficient array ordered from ``-nmax`` to ``nmax``."""
        return self._data

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.nmax, self.nmax + 1)

    def __getitem__(self, n: int) -> complex:
        n = int(n)
        if abs(n) > self.nmax:
            return 0j
        return complex(self._data[n + self.nmax])

    def as_dict(self, drop_zeros: bool = False) -> dict[int, complex]:
        return {
            int(n): complex(c)
            for n, c in zip(self.frequencies, self._data)
            if not (drop_zeros and c == 0)
        }

    def support(self, tol: float = 0.0) -> list[int]:
        return [int(n) for n in self.frequencies[np.abs(self._data) > tol]]

    def to_fft_order(self, gridsize: int) -> np.ndarray:
        if gridsize <= 2 * self.nmax:
            raise AliasingError(
                f"gridsize {gridsize} cannot hold frequencies up to {self.nmax}; need > {2 * self.nmax}"
            )
        out = np.zeros(gridsize, dtype=complex)
        out[self.frequencies % gridsize] = self._data
        return out

    # -- window changes -------------------------------------------------
    def resized(self, nmax: int) -> "SpectralField":
        """Pad with zeros or truncate to ``|n| <= nmax`` (truncation is explicit here)."""
        if nmax == self.nmax:
            return self
        if nmax > self.nmax:
            arr = np.zeros(2 * nmax + 1, dtype=complex)
            arr[nmax - self.nmax : nmax + self.nmax + 1] = self._data
            return SpectralField(arr, nmax)
        return SpectralField(self._data[self.nmax - nmax : self.nmax + nmax + 1], nmax)

    def _aligned(self, other: "SpectralField"):
        n = max(self.nmax, other.nmax)
        return self.resized(n)._data, other.resized(n)._data, n

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        a, b, n = self._aligned(other)
        return SpectralField(a + b, n)

    def __sub__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        a, b, n = self._aligned(other)
        return SpectralField(a - b, n)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return NotImplemented
        return SpectralField(self._data * complex(scalar), self.nmax)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SpectralField(self._data / complex(scalar), self.nmax)

    def __neg__(self):
        return SpectralField(-self._data, self.nmax)

    def conj(self) -> "SpectralField":
        """Coefficients of the complex conjugate function: ``b_n = conj(a_{-n})``."""
        return SpectralField(np.conj(self._data[::-1]), self.nmax)

    def shift(self, k: int) -> "SpectralField":
        """Multiply the function by ``exp(i k x)``."""
        out = self.resized(self.nmax + abs(k))
        return SpectralField(np.roll(out._data, k), out.nmax)

    def product(self, other: "SpectralField", cap: int | None = None) -> "SpectralField":
        """Pointwise product, exact up to the sum of both windows."""
        nout = self.nmax + other.nmax
        g = fft_grid_size(nout)
        prod = to_physical(self, g) * to_physical(other, g)
        return _capped(from_physical(prod, nout), cap)

    def power_nonlinearity(self, m: int, cap: int | None = None) -> "SpectralField":
        """Coefficients of ``|u|^(2m) u``, computed without aliasing."""
        nout = (2 * m + 1) * self.nmax
        g = fft_grid_size(nout)
        u = to_physical(self, g)
        return _capped(from_physical(np.abs(u) ** (2 * m) * u, nout), cap)

    # -- misc -------------------------------------------------------------
    def allclose(self, other: "SpectralField", rtol=1e-12, atol=1e-14) -> bool:
        a, b, _ = self._aligned(other)
        return bool(np.allclose(a, b, rtol=rtol, atol=atol))

    def __eq__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        a, b, _ = self._aligned(other)
        return bool(np.array_equal(a, b))

    __hash__ = None

    def __repr__(self):
        nz = self.as_dict(drop_zeros=True)
        shown = ", ".join(f"{n}: {c:.6g}" for n, c in list(nz.items())[:6])
        more = ", ..." if len(nz) > 6 else ""
        return f"SpectralField(nmax={self.nmax}, {{{shown}{more}}})"

    def to_json(self) -> dict:
        return {
            "nmax": self.nmax,
            "coeffs": [[int(n), float(c.real), float(c.imag)] for n, c in zip(self.frequencies, self._data)],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "SpectralField":
        nmax = int(obj["nmax"])
        coeffs = {}
        for n, re, im in obj["coeffs"]:
            coeffs[int(n)] = coeffs.get(int(n), 0j) + complex(re, im)
        return cls.from_dict(coeffs, nmax)


def _capped(field: SpectralField, cap: int | None) -> SpectralField:
    if cap is not None and field.nmax > cap:
        return field.resized(cap)
    return field


def dealias_two_thirds(field: SpectralField, gridsize: int) -> SpectralField:
    """Keep only ``|n| <= gridsize // 3`` (the 2/3 rule on a grid of that size)."""
    return _capped(field, gridsize // 3)


def sobolev_norm(field: SpectralField, s: float) -> float:
    """``(sum_n (1+|n|)^(2s) |a_n|^2)^(1/2)`` with compensated summation."""
    if not math.isfinite(s):
        raise ValueError("Sobolev index must be finite")
    weights = (1.0 + np.abs(field.frequencies)) ** (2.0 * s)
    terms = weights * (field.values.real ** 2 + field.values.imag ** 2)
    return math.sqrt(math.fsum(terms.tolist()))


def to_physical(field: SpectralField, gridsize: int) -> np.ndarray:
    """Samples ``u(2 pi j / gridsize)`` for ``j = 0..gridsize-1``."""
    return np.fft.ifft(field.to_fft_order(gridsize)) * gridsize


def from_physical(samples: np.ndarray, nmax: int | None = None) -> SpectralField:
    """Fourier coefficients of equispaced samples on ``[0, 2pi)``."""
    samples = np.asarray(samples, dtype=complex)
    g = samples.shape[-1]
    if nmax is None:
        nmax = (g - 1) // 2
    return SpectralField.from_fft_order(np.fft.fft(samples) / g, nmax)


@dataclass(frozen=True)
class ScalingMap:
    """``U(t, x) -> N^(1/m) U(N^2 t, N x)``, mapping solutions of the power ``2m+1`` equation to solutions."""

    N: int
    m: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")

    @property
    def amplitude(self) -> float:
        return float(self.N) ** (1.0 / self.m)

    @property
    def time_factor(self) -> float:
        return float(self.N) ** 2


def rescale_field(field: SpectralField, scaling: ScalingMap) -> SpectralField:
    """Move coefficient ``k`` to ``N k`` and multiply by ``N^(1/m)``."""
    n = scaling.N
    if n == 1:
        return field
    arr = np.zeros(2 * n * field.nmax + 1, dtype=complex)
    arr[::n] = field.values * scaling.amplitude
    return SpectralField(arr, n * field.nmax)


class Trajectory:
    """Fields sampled at stored times; no interpolation between stamps."""

    def __init__(self, times, coeffs, nmax: int):
        times = np.asarray(times, dtype=float).reshape(-1)
        coeffs = np.asarray(coeffs, dtype=complex).reshape(times.size, 2 * nmax + 1)
        if times.size > 1 and np.any(np.diff(times) < 0):
            raise ValueError("trajectory times must be nondecreasing")
        times.flags.writeable = False
        coeffs.flags.writeable = False
        self.times = times
        self.coeffs = coeffs
        self.nmax = int(nmax)

    @classmethod
    def from_fields(cls, pairs: Iterable[tuple[float, SpectralField]]) -> "Trajectory":
        pairs = list(pairs)
        if not pairs:
            raise ValueError("empty trajectory")
        nmax = max(f.nmax for _, f in pairs)
        return cls([t for t, _ in pairs], [f.resized(nmax).values for _, f in pairs], nmax)

    def __len__(self):
        return self.times.size

    def __iter__(self) -> Iterator[tuple[float, SpectralField]]:
        for i in range(len(self)):
            yield float(self.times[i]), self.field(i)

    def field(self, i: int) -> SpectralField:
        return SpectralField(self.coeffs[i], self.nmax)

    def index_of(self, t: float) -> int:
        hits = np.flatnonzero(np.isclose(self.times, t, rtol=1e-12, atol=1e-14))
        if hits.size == 0:
            raise KeyError(f"time {t!r} is not a stored sample")
        return int(hits[0])

    def at(self, t: float) -> SpectralField:
        return self.field(self.index_of(t))

    def mode(self, n: int) -> np.ndarray:
        """Time series of coefficient ``n``."""
        if abs(n) > self.nmax:
            return np.zeros(len(self), dtype=complex)
        return self.coeffs[:, n + self.nmax].copy()

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.nmax, self.nmax + 1)

    def norms(self, s: float) -> np.ndarray:
        return np.array([sobolev_norm(f, s) for _, f in self])

    def to_json(self) -> list:
        return [{"t": float(t), "field": f.to_json()} for t, f in self]

    @classmethod
    def from_json(cls, obj) -> "Trajectory":
        return cls.from_fields((float(e["t"]), SpectralField.from_json(e["field"])) for e in obj)


def rescale_up(traj: Trajectory, scaling: ScalingMap) -> Trajectory:
    """Lift a unit-scale trajectory to frequency ``N``.

    The output sample at time ``t / N^2`` holds ``N^(1/m)`` times the input
    coefficient ``k`` at frequency ``N k``; other frequencies are zero.
    """
    n = scaling.N
    if n == 1:
        return traj
    coeffs = np.zeros((len(traj), 2 * n * traj.nmax + 1), dtype=complex)
    coeffs[:, ::n] = traj.coeffs * scaling.amplitude
    return Trajectory(traj.times / scaling.time_factor, coeffs, n * traj.nmax)
