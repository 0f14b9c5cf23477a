"""Polynomial Hamiltonians on the mode lattice and their calculus.

Implements the quadratic flow generator Lambda2, the cubic interaction H3, the
two normal-form generators F1 (cubic) and F2 (quartic), and the resonant
quartic (3/2) i sum |q(n)|^4, together with gradient sequences, the canonical
Poisson bracket, the literal multilinear maps f1/f2, and resonance predicates.

All square roots are taken of absolute values.  Sums run over zero-sum index
tuples of nonzero modes; quartic terms with vanishing cube-sum denominator are
skipped by exact integer test.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .spectral import ModeLattice, SpectralSequence


class Kind(enum.Enum):
    LAMBDA2 = "Lambda2"
    H3 = "H3"
    F1 = "F1"
    F2 = "F2"
    QUARTIC_RESONANT = "QuarticResonant"


# ---------------------------------------------------------------------------
# coefficient kernels (vectorized over integer arrays)
# ---------------------------------------------------------------------------

def _sgn(x: np.ndarray) -> np.ndarray:
    return np.sign(x).astype(np.float64)


def _f1_kernel(n1, n2, n3) -> np.ndarray:
    """sigma(n1 n2 n3) / (3 sqrt|n1 n2 n3|); zero if any index vanishes.

    The sign is fixed by the homological identity {Lambda2, F1} + H3 = 0: the
    time-1 flow of this generator cancels the cubic interaction exactly.
    """
    n1 = np.asarray(n1, dtype=np.int64)
    n2 = np.asarray(n2, dtype=np.int64)
    n3 = np.asarray(n3, dtype=np.int64)
    prod = n1 * n2 * n3
    nz = prod != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        val = _sgn(prod) / (3.0 * np.sqrt(np.abs(prod)))
    return np.where(nz, val, 0.0)


def _f2_raw(a, b, c, d) -> np.ndarray:
    """-(3/2) sqrt|ab/(cd)| sigma(cd) / cube_sum off the resonant set, else zero.

    Literal (unsymmetrized) kernel with numerator pair (a, b) and denominator
    pair (c, d); the vanishing-denominator set is excluded by integer test.
    The overall sign matches the F1 convention fixed by the homological
    identities.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    d = np.asarray(d, dtype=np.int64)
    cube = a**3 + b**3 + c**3 + d**3
    nz = (a != 0) & (b != 0) & (c != 0) & (d != 0) & (cube != 0)
    ab = np.abs(a * b).astype(np.float64)
    cd = np.abs(c * d).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = -1.5 * np.sqrt(ab / np.where(cd == 0, 1.0, cd)) * _sgn(c * d) / np.where(
            cube == 0, 1, cube
        )
    return np.where(nz, val, 0.0)


def _f2_sym_kernel(a, b, c, d) -> np.ndarray:
    """Permutation-symmetric F2 coefficient: average over the 3 pairings x 2
    orientations (the kernel is already symmetric within each pair)."""
    return (
        _f2_raw(a, b, c, d)
        + _f2_raw(c, d, a, b)
        + _f2_raw(a, c, b, d)
        + _f2_raw(b, d, a, c)
        + _f2_raw(a, d, b, c)
        + _f2_raw(b, c, a, d)
    ) / 6.0


def _lambda2_kernel(n1, n2) -> np.ndarray:
    n1 = np.asarray(n1, dtype=np.int64)
    n2 = np.asarray(n2, dtype=np.int64)
    ok = (n1 + n2 == 0) & (n1 != 0)
    return np.where(ok, 0.5j * np.abs(n1).astype(np.float64) ** 3, 0.0)


def _h3_kernel(n1, n2, n3) -> np.ndarray:
    n1 = np.asarray(n1, dtype=np.int64)
    n2 = np.asarray(n2, dtype=np.int64)
    n3 = np.asarray(n3, dtype=np.int64)
    prod = n1 * n2 * n3
    return np.where(prod != 0, 1j * np.sqrt(np.abs(prod).astype(np.float64)), 0.0)


def _quartic_kernel(a, b, c, d) -> np.ndarray:
    """i/2 on permutations of (n, n, -n, -n), else zero."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    d = np.asarray(d, dtype=np.int64)
    ok = (
        (a != 0)
        & (np.abs(a) == np.abs(b))
        & (np.abs(a) == np.abs(c))
        & (np.abs(a) == np.abs(d))
        & (a + b + c + d == 0)
    )
    return np.where(ok, 0.5j, 0.0)


@dataclass(frozen=True)
class HamiltonianSpec:
    """A homogeneous polynomial Hamiltonian given by a symmetric coefficient.

    coefficient maps a zero-sum integer tuple (as arrays, one per slot) to the
    coefficient of the corresponding ordered monomial q(n1)...q(nd).
    """

    kind: Kind
    degree: int
    coefficient: Callable[..., np.ndarray]


LAMBDA2 = HamiltonianSpec(Kind.LAMBDA2, 2, _lambda2_kernel)
H3 = HamiltonianSpec(Kind.H3, 3, _h3_kernel)
F1 = HamiltonianSpec(Kind.F1, 3, _f1_kernel)
F2 = HamiltonianSpec(Kind.F2, 4, _f2_sym_kernel)
QUARTIC_RESONANT = HamiltonianSpec(Kind.QUARTIC_RESONANT, 4, _quartic_kernel)


# ---------------------------------------------------------------------------
# validated scalar coefficient entry points
# ---------------------------------------------------------------------------

def _check_tuple(ns: Sequence[int]) -> None:
    if any(n == 0 for n in ns):
        raise ValueError(f"indices must be nonzero, got {tuple(ns)}")
    if sum(ns) != 0:
        raise ValueError(f"indices must sum to zero, got {tuple(ns)}")


def f1_coeff(n1: int, n2: int, n3: int) -> float:
    """Cubic generator coefficient sigma(n1 n2 n3)/(3 sqrt|n1 n2 n3|)."""
    _check_tuple((n1, n2, n3))
    return float(_f1_kernel(n1, n2, n3))


def f2_coeff(n1: int, n2: int, n3: int, n4: int) -> float:
    """Quartic generator coefficient (literal form, numerator pair (n1, n2));
    exactly zero on the resonant set n1^3+n2^3+n3^3+n4^3 = 0."""
    _check_tuple((n1, n2, n3, n4))
    return float(_f2_raw(n1, n2, n3, n4))


# ---------------------------------------------------------------------------
# resonance analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResonanceWitness:
    tuple: tuple
    cube_sum: int
    factored: int
    resonant: bool


def resonance_witness(ns: Sequence[int]) -> ResonanceWitness:
    """Exact integer cube-sum and its factored form for a zero-sum tuple.

    Triples: n1^3+n2^3+n3^3 = 3 n1 n2 n3 exactly.  Quadruples: the signed
    identity is n1^3+...+n4^3 = 3 (n1+n2)(n1+n3)(n1+n4); absolute values agree
    with the pairwise form 3 |n1+n2||n1+n3||n2+n3|.
    """
    ns = tuple(int(n) for n in ns)
    if len(ns) not in (3, 4):
        raise ValueError(f"tuple must have length 3 or 4, got {len(ns)}")
    _check_tuple(ns)
    cube = sum(n**3 for n in ns)
    if len(ns) == 3:
        fact = 3 * ns[0] * ns[1] * ns[2]
    else:
        fact = 3 * (ns[0] + ns[1]) * (ns[0] + ns[2]) * (ns[0] + ns[3])
    return ResonanceWitness(ns, cube, fact, cube == 0)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def eval_hamiltonian(spec: HamiltonianSpec, q: SpectralSequence) -> complex:
    """Sum the coefficient over all ordered zero-sum tuples of active modes."""
    lat = q.lattice
    vals = q.values
    if spec.degree == 2:
        n = lat.modes
        c = spec.coefficient(n, -n)
        return complex(np.sum(c * vals * vals[::-1]))

    sup = lat.modes[vals != 0]
    if sup.size == 0:
        return 0.0 + 0.0j
    qs = vals[sup + lat.n_max]

    if spec.degree == 3:
        n1 = sup[:, None]
        n2 = sup[None, :]
        n3 = -(n1 + n2)
        mask = (np.abs(n3) <= lat.n_max) & (n3 != 0)
        q3 = np.where(mask, vals[np.clip(n3 + lat.n_max, 0, lat.size - 1)], 0.0)
        c = spec.coefficient(n1, n2, n3)
        return complex(np.sum(np.where(mask, c, 0.0) * qs[:, None] * qs[None, :] * q3))

    # degree 4: loop over the first slot to cap memory
    total = 0.0 + 0.0j
    n2 = sup[:, None]
    n3 = sup[None, :]
    q23 = qs[:, None] * qs[None, :]
    for k1, q1 in zip(sup, qs):
        n4 = -(k1 + n2 + n3)
        mask = (np.abs(n4) <= lat.n_max) & (n4 != 0)
        q4 = np.where(mask, vals[np.clip(n4 + lat.n_max, 0, lat.size - 1)], 0.0)
        c = spec.coefficient(np.int64(k1), n2, n3, n4)
        total += q1 * complex(np.sum(np.where(mask, c, 0.0) * q23 * q4))
    return total


# ---------------------------------------------------------------------------
# gradients:  gradient(spec, q)(n) = d(spec)/dq(-n)
# ---------------------------------------------------------------------------

def _conv_center(a: np.ndarray, b: np.ndarray, n_max: int) -> np.ndarray:
    """Central [-N, N] slice of the full linear convolution of two lattice arrays."""
    return np.convolve(a, b)[n_max: 3 * n_max + 1]


def gradient(spec: HamiltonianSpec, q: SpectralSequence) -> SpectralSequence:
    """Gradient sequence n -> d(spec)/dq(-n); non-real_type in general."""
    lat = q.lattice
    n = lat.modes
    vals = q.values
    absn = np.abs(n).astype(np.float64)

    if spec.kind is Kind.LAMBDA2:
        out = 1j * absn**3 * vals
    elif spec.kind is Kind.H3:
        w = np.sqrt(absn) * vals
        out = 3j * np.sqrt(absn) * _conv_center(w, w, lat.n_max)
        out[lat.n_max] = 0.0
    elif spec.kind is Kind.F1:
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(n != 0, _sgn(n) * vals / np.sqrt(np.where(n == 0, 1.0, absn)), 0.0)
            inv = np.where(n != 0, _sgn(n) / np.sqrt(np.where(n == 0, 1.0, absn)), 0.0)
        out = -inv * _conv_center(z, z, lat.n_max)
    elif spec.degree == 4:
        out = _gradient_quartic(spec, lat, vals)
    else:
        raise ValueError(f"no gradient rule for {spec.kind}")
    return SpectralSequence(lat, out, real_type=False)


def _gradient_quartic(spec: HamiltonianSpec, lat: ModeLattice, vals: np.ndarray) -> np.ndarray:
    if spec.kind is Kind.QUARTIC_RESONANT:
        # d/dq(-n) of (3/2) i sum_m q(m)^2 q(-m)^2
        return 6j * vals * vals * vals[::-1]
    sup = lat.modes[vals != 0]
    out = np.zeros(lat.size, dtype=np.complex128)
    if sup.size == 0:
        return out
    qs = vals[sup + lat.n_max]
    k2 = sup[:, None]
    k3 = sup[None, :]
    q23 = qs[:, None] * qs[None, :]
    for k1, q1 in zip(sup, qs):
        m = k1 + k2 + k3
        mask = (np.abs(m) <= lat.n_max) & (m != 0)
        c = spec.coefficient(np.int64(k1), k2, k3, -m)
        contrib = 4.0 * np.where(mask, c, 0.0) * q1 * q23
        np.add.at(out, np.clip(m + lat.n_max, 0, lat.size - 1), np.where(mask, contrib, 0.0))
    out[lat.n_max] = 0.0
    return out


Functional = Union[HamiltonianSpec, Callable[[SpectralSequence], complex]]


def fd_gradient(func: Callable[[SpectralSequence], complex], q: SpectralSequence,
                step: float | None = None) -> SpectralSequence:
    """Central-difference gradient sequence of a black-box functional.

    The holomorphic derivative d/dq(-n) is obtained by perturbing the -n slot
    in the real direction; polynomial functionals make this exact to O(step^2).
    """
    lat = q.lattice
    if step is None:
        scale = float(np.max(np.abs(q.values))) or 1.0
        step = 1e-6 * scale
    out = np.zeros(lat.size, dtype=np.complex128)
    base = q.values
    for i, n in enumerate(lat.modes):
        if n == 0:
            continue
        j = lat.index(-n)
        vp = base.copy()
        vp[j] += step
        vm = base.copy()
        vm[j] -= step
        fp = func(SpectralSequence(lat, vp, real_type=False))
        fm = func(SpectralSequence(lat, vm, real_type=False))
        out[lat.index(n)] = (fp - fm) / (2.0 * step)
    return SpectralSequence(lat, out, real_type=False)


def _gradient_of(a: Functional, q: SpectralSequence, fd_step: float | None) -> np.ndarray:
    if isinstance(a, HamiltonianSpec):
        return gradient(a, q).values
    return fd_gradient(a, q, fd_step).values


def poisson_bracket(a: Functional, b: Functional, q: SpectralSequence,
                    fd_step: float | None = None) -> complex:
    """{A, B}(q) = sum_{n != 0} sigma(n) dA/dq(n) dB/dq(-n).

    Either argument may be a black-box functional, in which case its gradient
    is taken by central finite differences.
    """
    ga = _gradient_of(a, q, fd_step)
    gb = _gradient_of(b, q, fd_step)
    sgn = _sgn(q.lattice.modes)
    # dA/dq(n) is the gradient sequence evaluated at -n
    return complex(np.sum(sgn * ga[::-1] * gb))


# ---------------------------------------------------------------------------
# literal multilinear maps of the a-priori estimates
# ---------------------------------------------------------------------------

def f1_apply(q1: SpectralSequence, q2: SpectralSequence) -> SpectralSequence:
    """f1(q1, q2)(n) = sum_{n1+n2+n=0} sigma(n1 n2 n)/sqrt|n1 n2 n| q1(n1) q2(n2)."""
    lat = q1.lattice
    n = lat.modes
    absn = np.abs(n).astype(np.float64)
    safe = np.where(n == 0, 1.0, absn)
    z1 = _sgn(n) * q1.values / np.sqrt(safe)
    z2 = _sgn(n) * q2.values / np.sqrt(safe)
    conv = _conv_center(z1, z2, lat.n_max)
    out = _sgn(n) / np.sqrt(safe) * conv[::-1]
    out[lat.n_max] = 0.0
    return SpectralSequence(lat, out, real_type=False)


def f2_apply(q1: SpectralSequence, q2: SpectralSequence, q3: SpectralSequence) -> SpectralSequence:
    """Trilinear map with the displayed two-term quartic kernel,

    f2(q1,q2,q3)(n) = -3 sum_{n+n1+n2+n3=0}
        [sqrt|n n1/(n2 n3)| sigma(n2 n3) + sqrt|n1 n2/(n3 n)| sigma(n3 n)]
        / (n^3+n1^3+n2^3+n3^3) * q1(n1) q2(n2) q3(n3),

    with vanishing-denominator tuples skipped.
    """
    lat = q1.lattice
    out = np.zeros(lat.size, dtype=np.complex128)
    sups = []
    for q in (q1, q2, q3):
        s = lat.modes[q.values != 0]
        if s.size == 0:
            return SpectralSequence(lat, out, real_type=False)
        sups.append(s)
    s1, s2, s3 = sups
    v2 = q2.values[s2 + lat.n_max][:, None]
    v3 = q3.values[s3 + lat.n_max][None, :]
    n2 = s2[:, None]
    n3 = s3[None, :]
    for k1 in s1:
        a1 = q1.values[lat.index(k1)]
        m = -(k1 + n2 + n3)  # output mode n
        mask = (np.abs(m) <= lat.n_max) & (m != 0)
        # kernel = (2/3)[raw(n,n1|n2,n3) + raw(n1,n2|n3,n)], times overall 3
        kern = 2.0 * (_f2_raw(m, np.int64(k1), n2, n3) + _f2_raw(np.int64(k1), n2, n3, m))
        contrib = np.where(mask, kern, 0.0) * a1 * v2 * v3
        np.add.at(out, np.clip(m + lat.n_max, 0, lat.size - 1), np.where(mask, contrib, 0.0))
    out[lat.n_max] = 0.0
    return SpectralSequence(lat, out, real_type=False)
