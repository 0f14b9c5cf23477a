"""Mode lattice, weighted Fourier transform, sequence norms, and the free Airy phase flow.

The spatial domain is the 2*pi-periodic circle sampled at x_j = -pi + 2*pi*j/M.
Spectral coefficients live on the truncated lattice n in [-N, N] with the zero
mode structurally absent; the weighted coordinates are u(n) = vhat(n)/sqrt(|n|)
with vhat(n) = (1/2pi) * integral of v(x) exp(-i n x) dx, so that
v(x) = sum_n sqrt(|n|) exp(i n x) u(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Tolerance for the conjugate-symmetry check on real_type sequences.  Individual
# operations are exactly symmetric by construction; long evolutions accumulate
# only rounding-level asymmetry, so this is a loose sanity bound.
_REALITY_TOL = 1e-11


@dataclass(frozen=True)
class ModeLattice:
    """Truncated mode lattice: active modes n in [-n_max, n_max] \\ {0}.

    m_samples >= 3*n_max + 1 keeps quadratic grid products alias-safe after
    truncation back to the lattice.
    """

    n_max: int
    m_samples: int

    def __post_init__(self) -> None:
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.m_samples < 3 * self.n_max + 1:
            raise ValueError(
                f"m_samples must be >= 3*n_max + 1 = {3 * self.n_max + 1}, "
                f"got {self.m_samples}"
            )

    @property
    def modes(self) -> np.ndarray:
        """Integer modes -n_max..n_max (the zero slot is carried but unused)."""
        return np.arange(-self.n_max, self.n_max + 1)

    @property
    def size(self) -> int:
        return 2 * self.n_max + 1

    def index(self, n) -> int:
        return n + self.n_max

    def grid(self) -> np.ndarray:
        j = np.arange(self.m_samples)
        return -math.pi + TWO_PI * j / self.m_samples


@dataclass(frozen=True)
class SpectralSequence:
    """Complex coefficients u(n) on a mode lattice.

    real_type marks sequences representing real functions, for which
    u(-n) = conj(u(n)).  The zero mode is forced to zero on construction.
    """

    lattice: ModeLattice
    values: np.ndarray
    real_type: bool = True

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.complex128, copy=True)
        if vals.shape != (self.lattice.size,):
            raise ValueError(
                f"values must have shape ({self.lattice.size},), got {vals.shape}"
            )
        vals[self.lattice.n_max] = 0.0
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.real_type:
            asym = np.max(np.abs(vals[::-1].conj() - vals))
            scale = max(np.max(np.abs(vals)), 1e-300)
            if asym > _REALITY_TOL * scale:
                raise ValueError(
                    f"real_type sequence is not conjugate-symmetric "
                    f"(relative asymmetry {asym / scale:.3e})"
                )

    def value_at(self, n: int) -> complex:
        if not -self.lattice.n_max <= n <= self.lattice.n_max:
            raise ValueError(f"mode {n} outside lattice")
        return complex(self.values[self.lattice.index(n)])

    def support(self) -> np.ndarray:
        """Modes with nonzero coefficient (exact zeros excluded)."""
        return self.lattice.modes[self.values != 0]


def zero_sequence(lattice: ModeLattice, real_type: bool = True) -> SpectralSequence:
    return SpectralSequence(lattice, np.zeros(lattice.size, dtype=np.complex128), real_type)


def sequence_from_modes(lattice: ModeLattice, entries: dict, real_type: bool = True) -> SpectralSequence:
    """Build a sequence from a {mode: value} mapping (test/data convenience)."""
    vals = np.zeros(lattice.size, dtype=np.complex128)
    for n, v in entries.items():
        if n == 0:
            raise ValueError("zero mode is structurally absent")
        vals[lattice.index(n)] = v
    return SpectralSequence(lattice, vals, real_type)


@dataclass(frozen=True)
class GridFunction:
    """Real samples of a mean-zero function on the uniform M-point grid."""

    lattice: ModeLattice
    samples: np.ndarray

    def __post_init__(self) -> None:
        s = np.array(self.samples, dtype=np.float64, copy=True)
        if s.shape != (self.lattice.m_samples,):
            raise ValueError(
                f"samples must have shape ({self.lattice.m_samples},), got {s.shape}"
            )
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)
        mean = abs(float(np.mean(s)))
        scale = max(float(np.max(np.abs(s))), 1e-300)
        if mean > 1e-12 * scale:
            raise ValueError(
                f"samples are not mean-zero (|mean| = {mean:.3e}, scale {scale:.3e})"
            )


@dataclass(frozen=True)
class NormSpec:
    """Weighted sequence norm ||u||_{l^p_s}: p in {1, 2, inf}, weight |k|^s."""

    p: float
    s: float

    def __post_init__(self) -> None:
        if self.p not in (1, 2, math.inf):
            raise ValueError(f"p must be 1, 2, or inf, got {self.p}")


def norm(u: SpectralSequence, spec: NormSpec) -> float:
    """Exact weighted p-norm over active modes."""
    n = u.lattice.modes
    mask = n != 0
    w = np.abs(n[mask]).astype(np.float64) ** spec.s
    a = w * np.abs(u.values[mask])
    if spec.p == math.inf:
        return float(np.max(a)) if a.size else 0.0
    if spec.p == 1:
        return float(np.sum(a))
    return float(math.sqrt(np.sum(a * a)))


def l2s_norm(u: SpectralSequence, s: float) -> float:
    return norm(u, NormSpec(2, s))


def weighted_values_norm(values: np.ndarray, modes: np.ndarray, s: float) -> float:
    """l^2_s norm of a raw coefficient array (internal fast path)."""
    mask = modes != 0
    w = np.abs(modes[mask]).astype(np.float64) ** s
    a = w * np.abs(values[mask])
    return float(math.sqrt(np.sum(a * a)))


def weighted_from_physical(v: GridFunction) -> SpectralSequence:
    """u(n) = vhat(n)/sqrt(|n|) by exact DFT quadrature on the M-point grid."""
    lat = v.lattice
    x = lat.grid()
    pos = np.arange(1, lat.n_max + 1)
    # (1/2pi) integral -> (1/M) sum for band-limited v
    kernel = np.exp(-1j * np.outer(pos, x))
    vhat_pos = kernel @ v.samples / lat.m_samples
    u_pos = vhat_pos / np.sqrt(pos)
    vals = np.zeros(lat.size, dtype=np.complex128)
    vals[lat.n_max + 1:] = u_pos
    vals[:lat.n_max] = u_pos[::-1].conj()
    return SpectralSequence(lat, vals, real_type=True)


def physical_from_weighted(u: SpectralSequence) -> GridFunction:
    """v(x) = sum_n sqrt(|n|) exp(i n x) u(n); requires a real_type sequence."""
    if not u.real_type:
        raise ValueError("physical_from_weighted requires a real_type sequence")
    lat = u.lattice
    x = lat.grid()
    pos = np.arange(1, lat.n_max + 1)
    coef = np.sqrt(pos) * u.values[lat.n_max + 1:]
    kernel = np.exp(1j * np.outer(x, pos))
    samples = 2.0 * np.real(kernel @ coef)
    # exact synthesis of a finite real trig polynomial is mean-zero; remove the
    # rounding-level residue so the GridFunction invariant is exact
    samples -= np.mean(samples)
    return GridFunction(lat, samples)


def linear_phase(u: SpectralSequence, t: float) -> SpectralSequence:
    """Free Airy flow: multiply mode n by exp(i n^3 t)."""
    n = u.lattice.modes.astype(np.float64)
    vals = u.values * np.exp(1j * n**3 * t)
    return SpectralSequence(u.lattice, vals, u.real_type)
