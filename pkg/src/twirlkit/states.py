"""Multipartite density matrices and the trace polynomials built from them.

Subsystem convention: subsystem 0 is the first tensor factor (slowest index),
so the flattened basis index is ``sum(i_l * stride_l)`` with
``stride_l = prod(dims[l+1:])`` -- exactly numpy's ``kron`` ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-9
PSD_TOL = 1e-9


class StateError(ValueError):
    """Base class for density-matrix validation failures."""


class DimensionMismatchError(StateError):
    pass


class HermiticityError(StateError):
    pass


class TraceError(StateError):
    pass


class PositivityError(StateError):
    pass


@dataclass(frozen=True)
class DimsProfile:
    """Ordered local dimensions of a multipartite system."""

    dims: tuple[int, ...]

    def __init__(self, dims: Iterable[int]):
        object.__setattr__(self, "dims", tuple(int(d) for d in dims))
        for d in self.dims:
            if d < 2:
                raise DimensionMismatchError(f"local dimension {d} < 2")

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self):
        return iter(self.dims)

    def __getitem__(self, i):
        return self.dims[i]


@dataclass(frozen=True)
class DensityMatrix:
    """A validated state: Hermitian, unit trace, PSD within tolerances."""

    dims: DimsProfile
    entries: np.ndarray = field(repr=False)

    @property
    def total(self) -> int:
        return self.dims.total

    def marginal(self, keep: Sequence[int]) -> "DensityMatrix":
        return partial_trace(self, keep)


def _as_matrix(entries) -> np.ndarray:
    m = np.asarray(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    return m


def make_state(entries, dims: DimsProfile | Iterable[int]) -> DensityMatrix:
    """Validate a raw matrix as a density matrix on the given dimension profile.

    Raises a distinct error per violated invariant: dimension mismatch,
    Hermiticity (1e-12), unit trace (1e-9), positivity (smallest eigenvalue
    >= -1e-9).
    """
    if not isinstance(dims, DimsProfile):
        dims = DimsProfile(dims)
    m = _as_matrix(entries)
    if m.shape[0] != dims.total:
        raise DimensionMismatchError(
            f"matrix size {m.shape[0]} != product of local dimensions {dims.total}"
        )
    herm = np.max(np.abs(m - m.conj().T))
    if herm > HERMITICITY_TOL:
        raise HermiticityError(f"Hermiticity violation {herm:.3e} > {HERMITICITY_TOL}")
    tr = m.trace()
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceError(f"trace {tr} differs from 1 by more than {TRACE_TOL}")
    lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
    if lo < -PSD_TOL:
        raise PositivityError(f"smallest eigenvalue {lo:.3e} < -{PSD_TOL}")
    m = m.copy()
    m.flags.writeable = False
    return DensityMatrix(dims=dims, entries=m)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on the subsystems in ``keep`` (order preserved as in rho).

    An empty ``keep`` returns the scalar 1 as a 1x1 matrix on a trivial
    profile; this is the documented convention, not an error.
    """
    dims = rho.dims.dims
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    for k in keep:
        if not 0 <= k < n:
            raise DimensionMismatchError(f"subsystem index {k} out of range 0..{n - 1}")
    if not keep:
        return make_state(np.array([[1.0 + 0j]]), DimsProfile(()))
    t = rho.entries.reshape(dims + dims)
    remaining = list(dims)
    for idx in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=idx, axis2=idx + len(remaining))
        remaining.pop(idx)
    total = math.prod(remaining)
    out = t.reshape(total, total).copy()
    out.flags.writeable = False
    return DensityMatrix(dims=DimsProfile(remaining), entries=out)


def partial_transpose(rho: DensityMatrix, subsystem: int) -> np.ndarray:
    """Transpose the indices of one subsystem only.

    The result is Hermitian with unit trace but may have negative
    eigenvalues; it is returned as a raw matrix, never validated as a state.
    """
    dims = rho.dims.dims
    n = len(dims)
    if not 0 <= subsystem < n:
        raise DimensionMismatchError(f"subsystem index {subsystem} out of range 0..{n - 1}")
    t = rho.entries.reshape(dims + dims)
    t = np.swapaxes(t, subsystem, subsystem + n)
    return t.reshape(rho.total, rho.total)


def trace_power(m, k: int) -> float:
    """Tr(m^k) as a real number; imaginary part must vanish for Hermitian input."""
    if k < 1:
        raise ValueError("power k must be >= 1")
    a = _as_matrix(m)
    acc = a
    for _ in range(k - 1):
        acc = acc @ a
    val = acc.trace()
    return float(val.real)


def maximally_mixed(dims: DimsProfile | Iterable[int]) -> DensityMatrix:
    if not isinstance(dims, DimsProfile):
        dims = DimsProfile(dims)
    return make_state(np.eye(dims.total) / dims.total, dims)


def max_entangled_projector(d: int) -> np.ndarray:
    """Projector onto the canonical maximally entangled state of C^d x C^d."""
    psi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        psi[i * d + i] = 1.0 / math.sqrt(d)
    return np.outer(psi, psi.conj())


def werner_state(d: int, p: float) -> DensityMatrix:
    """p P_+ + (1-p)/d^2 I, with P_+ the maximally entangled projector.

    This is the family the source material calls "Werner"; much literature
    calls it the isotropic state (see README).
    """
    if d < 2:
        raise DimensionMismatchError("d must be >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing parameter p={p} outside [0, 1]")
    m = p * max_entangled_projector(d) + (1.0 - p) / d**2 * np.eye(d * d)
    return make_state(m, DimsProfile((d, d)))


@dataclass(frozen=True)
class BellDiagonalSpectrum:
    """Probability 4-vector over the Bell basis."""

    lambdas: tuple[float, float, float, float]

    def __init__(self, lambdas: Iterable[float]):
        lam = tuple(float(v) for v in lambdas)
        if len(lam) != 4:
            raise ValueError("a Bell-diagonal spectrum has exactly 4 entries")
        if any(v < -1e-12 or v > 1 + 1e-12 for v in lam):
            raise ValueError(f"lambdas {lam} not all in [0, 1]")
        if abs(sum(lam) - 1.0) > 1e-12:
            raise ValueError(f"lambdas {lam} do not sum to 1")
        object.__setattr__(self, "lambdas", lam)


def bell_diagonal(spectrum: BellDiagonalSpectrum) -> DensityMatrix:
    """Two-qubit state diagonal in the Bell basis, as a 4x4 block matrix."""
    l1, l2, l3, l4 = spectrum.lambdas
    m = 0.5 * np.array(
        [
            [l1 + l2, 0, 0, l1 - l2],
            [0, l3 + l4, l3 - l4, 0],
            [0, l3 - l4, l3 + l4, 0],
            [l1 - l2, 0, 0, l1 + l2],
        ],
        dtype=complex,
    )
    return make_state(m, DimsProfile((2, 2)))


def random_density(
    dims: DimsProfile | Iterable[int], rank: int, seed: int | np.random.Generator
) -> DensityMatrix:
    """Seeded Ginibre state GG^dag / Tr(GG^dag) of the requested rank."""
    if not isinstance(dims, DimsProfile):
        dims = DimsProfile(dims)
    total = dims.total
    if not 1 <= rank <= total:
        raise ValueError(f"rank {rank} out of range 1..{total}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = rng.normal(size=(total, rank)) + 1j * rng.normal(size=(total, rank))
    m = g @ g.conj().T
    m /= m.trace()
    return make_state(m, dims)
