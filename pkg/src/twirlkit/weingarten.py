"""Permutations of S2/S3, Weingarten values, and the diagram-contraction oracle.

The fixed permutation order for all S3-indexed matrices is
``{e, (12), (23), (13), (312), (231)}`` where the cycles are written in
one-line notation on {1,2,3} (0-based internally).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .states import DensityMatrix


class SingularDimensionError(ValueError):
    """Raised when a local dimension makes the order-3 calculus singular (d=2)."""


@dataclass(frozen=True)
class Permutation:
    """A bijection on {0..n-1}, stored as the tuple of images."""

    images: tuple[int, ...]

    def __init__(self, images):
        images = tuple(int(i) for i in images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"{images} is not a bijection on 0..{len(images) - 1}")
        object.__setattr__(self, "images", images)

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, k: int) -> int:
        return self.images[k]

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: (self . other)(k) = self(other(k))."""
        if self.n != other.n:
            raise ValueError("order mismatch")
        return Permutation(tuple(self.images[other.images[k]] for k in range(self.n)))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for k, v in enumerate(self.images):
            inv[v] = k
        return Permutation(tuple(inv))

    def cycles(self) -> list[tuple[int, ...]]:
        seen = [False] * self.n
        out = []
        for start in range(self.n):
            if seen[start]:
                continue
            cyc = []
            k = start
            while not seen[k]:
                seen[k] = True
                cyc.append(k)
                k = self.images[k]
            out.append(tuple(cyc))
        return out

    @property
    def cycle_type(self) -> tuple[int, ...]:
        """Partition of n, sorted in decreasing order."""
        return tuple(sorted((len(c) for c in self.cycles()), reverse=True))


IDENTITY_1 = Permutation((0,))
S2 = (Permutation((0, 1)), Permutation((1, 0)))
# {e, (12), (23), (13), (312), (231)}; (312) maps 1->3, 2->1, 3->2.
S3 = (
    Permutation((0, 1, 2)),
    Permutation((1, 0, 2)),
    Permutation((0, 2, 1)),
    Permutation((2, 1, 0)),
    Permutation((2, 0, 1)),
    Permutation((1, 2, 0)),
)


def _normalize_cycle_type(cycle_type, n: int | None) -> tuple[int, ...]:
    if isinstance(cycle_type, Permutation):
        ct = cycle_type.cycle_type
    else:
        ct = tuple(sorted((int(c) for c in cycle_type), reverse=True))
    if n is not None and sum(ct) != n:
        raise ValueError(f"cycle type {ct} is not a partition of n={n}")
    return ct


def wg(cycle_type, d: int, n: int | None = None) -> float:
    """Weingarten value for a conjugacy class of S_n at dimension d (n <= 3).

    Computed from the closed forms; exact rationals evaluated in floats.
    """
    ct = _normalize_cycle_type(cycle_type, n)
    n = sum(ct)
    d = int(d)
    if n == 1:
        return 1.0 / d
    if n == 2:
        denom = d * (d * d - 1)
        return float(Fraction(d if ct == (1, 1) else -1, denom))
    if n == 3:
        if d < 3:
            raise SingularDimensionError(
                "order-3 Weingarten values are singular at d=2 (denominator d^2-4)"
            )
        denom = d * (d * d - 1) * (d * d - 4)
        num = {(1, 1, 1): d * d - 2, (2, 1): -d, (3,): 2}[ct]
        return float(Fraction(num, denom))
    raise ValueError(f"unsupported order n={n} (only n <= 3)")


def gram(sigma: Permutation, tau: Permutation, d: int) -> float:
    """Gram matrix entry d^(#cycles of sigma tau^-1)."""
    if sigma.n != tau.n:
        raise ValueError("order mismatch")
    return float(d ** len(sigma.compose(tau.inverse()).cycles()))


def permutations_of_order(n: int) -> tuple[Permutation, ...]:
    if n == 1:
        return (IDENTITY_1,)
    if n == 2:
        return S2
    if n == 3:
        return S3
    raise ValueError(f"unsupported order n={n}")


def w_matrix(n: int, d: int) -> np.ndarray:
    """Matrix of Wg(sigma tau^-1, d) over the fixed permutation order."""
    perms = permutations_of_order(n)
    return np.array(
        [[wg(s.compose(t.inverse()), d) for t in perms] for s in perms]
    )


@dataclass(frozen=True)
class EqualityPattern:
    """Set partition of measurement-round indices into blocks of equal outcomes."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, n: int, blocks):
        blocks = tuple(tuple(sorted(b)) for b in blocks)
        flat = sorted(i for b in blocks for i in b)
        if flat != list(range(n)):
            raise ValueError(f"{blocks} is not a partition of 0..{n - 1}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "blocks", tuple(sorted(blocks)))

    def block_of(self, k: int) -> tuple[int, ...]:
        for b in self.blocks:
            if k in b:
                return b
        raise KeyError(k)

    def delta_row(self) -> np.ndarray:
        """Row of per-permutation delta products [1, delta...] for this pattern."""
        same = lambda i, j: self.block_of(i) == self.block_of(j)
        row = []
        for p in permutations_of_order(self.n):
            row.append(1.0 if all(same(k, p(k)) for k in range(self.n)) else 0.0)
        return np.array(row)


def patterns_order2() -> tuple[EqualityPattern, EqualityPattern]:
    """(both equal, both distinct) -- the s_matrix(2) row order."""
    return (EqualityPattern(2, (((0, 1)),)), EqualityPattern(2, ((0,), (1,))))


def patterns_order3() -> tuple[EqualityPattern, ...]:
    """Row order: all-distinct, pair(12), pair(23), pair(13), all-equal."""
    return (
        EqualityPattern(3, ((0,), (1,), (2,))),
        EqualityPattern(3, ((0, 1), (2,))),
        EqualityPattern(3, ((1, 2), (0,))),
        EqualityPattern(3, ((0, 2), (1,))),
        EqualityPattern(3, ((0, 1, 2),)),
    )


def s_matrix(n: int) -> np.ndarray:
    """Equality-pattern x permutation 0/1 matrix of surviving delta products."""
    if n == 2:
        pats = patterns_order2()
    elif n == 3:
        pats = patterns_order3()
    else:
        raise ValueError(f"unsupported order n={n}")
    return np.array([p.delta_row() for p in pats])


def diagram_contract(
    rho: DensityMatrix, tau_a: Permutation, tau_b: Permutation
) -> float:
    """Contract n copies of a bipartite rho along the (tau_A, tau_B) wiring.

    Row index p_k of copy k is tied to column index q_{tau(k)} on each side.
    Deliberately implemented as explicit loops over all column-index tuples:
    this is the slow, independent oracle everything downstream is checked
    against (fine at the small dimensions the protocol targets).
    """
    if tau_a.n != tau_b.n:
        raise ValueError("permutation order mismatch")
    if rho.dims.n_parties != 2:
        raise ValueError("diagram contraction is defined for bipartite states")
    n = tau_a.n
    d_a, d_b = rho.dims.dims
    m = rho.entries
    total = 0.0 + 0.0j
    for qa in itertools.product(range(d_a), repeat=n):
        for qb in itertools.product(range(d_b), repeat=n):
            term = 1.0 + 0.0j
            for k in range(n):
                row = qa[tau_a(k)] * d_b + qb[tau_b(k)]
                col = qa[k] * d_b + qb[k]
                term *= m[row, col]
            total += term
    if abs(total.imag) > 1e-12:
        raise ArithmeticError(f"contraction has nonzero imaginary part {total.imag:.3e}")
    return float(total.real)


# Table of which invariant each (tau_A, tau_B) pair of S3 x S3 contracts to,
# indexed in the fixed order {e,(12),(23),(13),(312),(231)} on both axes.
# Ids 0..8 are the mixed-marginal traces; 9 is Tr rho^3 (matching cycles) and
# 10 is Tr (rho^Gamma)^3 (opposite cycles) -- resolved by the oracle itself,
# see tests and the selftest report.
INVARIANT_ID = (
    (0, 1, 1, 1, 2, 2),
    (3, 5, 4, 4, 6, 6),
    (3, 4, 5, 4, 6, 6),
    (3, 4, 4, 5, 6, 6),
    (7, 8, 8, 8, 9, 10),
    (7, 8, 8, 8, 10, 9),
)
