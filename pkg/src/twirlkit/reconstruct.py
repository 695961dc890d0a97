"""Forward maps y = M x between twirl-averaged statistics and invariants,
and their inverses at orders 2 and 3.

Conventions
-----------
Order-2 vectors are indexed by subsystem subsets as bitmasks with subsystem 0
the most significant bit, so for two parties the order is
(1, Tr rho_B^2, Tr rho_A^2, Tr rho^2).

Order-3 component order (bipartite, three rounds), A-pattern major over
{all-distinct, one-pair, all-equal} with the (pair, pair) case split:

    y0 (dist, dist)   y1 (dist, pair)   y2 (dist, equal)
    y3 (pair, dist)   y4 (pair, pair | different pairs of rounds coincide)
    y5 (pair, pair | the same pair of rounds coincides on both sides)
    y6 (pair, equal)  y7 (equal, dist)  y8 (equal, pair)  y9 (equal, equal)

With this order y4 - y5 = (x4 - x5) / (d_A(d_A^2-1) d_B(d_B^2-1)).  Each y
component is the average over all index tuples of its equality class (every
representative has the same expectation, so the average equals the
single-representative value).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .states import (
    DensityMatrix,
    DimsProfile,
    partial_trace,
    partial_transpose,
    trace_power,
)
from .weingarten import (
    SingularDimensionError,
    patterns_order3,
    s_matrix,
    w_matrix,
    INVARIANT_ID,
)


class ReconstructionError(ArithmeticError):
    """Numerical failure: the recovered invariants do not reproduce the data."""


RESIDUAL_TOL = 1e-6


# ---------------------------------------------------------------------------
# order 2
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class YVector2:
    """Per-class averages of twirled two-round probability products.

    ``values[q]`` is the average over unitaries and over all index pairs
    (I1, I2) with I1 != I2 exactly on the subsystems in the bitmask ``q``.
    """

    dims: DimsProfile
    values: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class XVector2:
    """Marginal purities Tr rho_P^2, indexed by the subset bitmask P."""

    dims: DimsProfile
    purities: np.ndarray = field(repr=False)

    @property
    def full_purity(self) -> float:
        return float(self.purities[-1])

    def purity(self, subsystems: Sequence[int]) -> float:
        return float(self.purities[subset_mask(subsystems, self.dims.n_parties)])


def subset_mask(subsystems: Sequence[int], n_parties: int) -> int:
    mask = 0
    for s in subsystems:
        if not 0 <= s < n_parties:
            raise ValueError(f"subsystem {s} out of range")
        mask |= 1 << (n_parties - 1 - s)
    return mask


def _in_mask(mask: int, party: int, n_parties: int) -> bool:
    return bool(mask >> (n_parties - 1 - party) & 1)


def pair_class_counts(dims: DimsProfile) -> np.ndarray:
    """Number of index pairs (I1, I2) in each inequality class Q."""
    n = dims.n_parties
    counts = np.ones(2**n)
    for q in range(2**n):
        c = 1
        for l, d in enumerate(dims):
            c *= d * (d - 1) if _in_mask(q, l, n) else d
        counts[q] = c
    return counts


def forward_matrix_2(dims: DimsProfile) -> np.ndarray:
    """Kronecker-factored map from marginal purities to per-class averages."""
    factors = []
    for d in dims:
        w_equal = 1.0 / (d * (d + 1))
        factors.append(
            np.array([[w_equal, w_equal], [1.0 / (d * d - 1), -1.0 / (d * (d * d - 1))]])
        )
    m = np.ones((1, 1))
    for f in factors:
        m = np.kron(m, f)
    return m


def forward_2(x: XVector2, dims: DimsProfile | None = None) -> YVector2:
    """Exact per-class averages for a state with the given marginal purities."""
    dims = dims if dims is not None else x.dims
    y = forward_matrix_2(dims) @ np.asarray(x.purities, dtype=float)
    return YVector2(dims=dims, values=y)


def invert_2(y: YVector2, dims: DimsProfile | None = None) -> XVector2:
    """Recover all marginal purities from per-class averages.

    Applies the class-pair multiplicities and the tensor product of
    [[1, 1], [d_l, -1]] factors.
    """
    dims = dims if dims is not None else y.dims
    sums = np.asarray(y.values, dtype=float) * pair_class_counts(dims)
    m = np.ones((1, 1))
    for d in dims:
        m = np.kron(m, np.array([[1.0, 1.0], [float(d), -1.0]]))
    return XVector2(dims=dims, purities=m @ sums)


def purity_marginal(y: YVector2, subsystems: Sequence[int], dims: DimsProfile | None = None) -> float:
    """Tr rho_P^2 from class averages via the per-subsystem product formula."""
    dims = dims if dims is not None else y.dims
    n = dims.n_parties
    p_mask = subset_mask(subsystems, n)
    sums = np.asarray(y.values, dtype=float) * pair_class_counts(dims)
    total = 0.0
    for q in range(2**n):
        coeff = 1.0
        for l, d in enumerate(dims):
            if _in_mask(p_mask, l, n):
                coeff *= -1.0 if _in_mask(q, l, n) else float(d)
        total += coeff * sums[q]
    return total


def purity_marginal_hamming(
    y: YVector2, subsystems: Sequence[int], dims: DimsProfile | None = None
) -> float:
    """Equal-dimension Hamming-distance form of the marginal purity.

    Sums d^{#P} (-d)^{-D(I1, I2)} over all pairs of P-restricted indices,
    using the class averages as the per-pair expectations.  Must agree with
    :func:`purity_marginal` whenever all local dimensions are equal.
    """
    dims = dims if dims is not None else y.dims
    n = dims.n_parties
    d = dims[0]
    if any(dl != d for dl in dims):
        raise ValueError("Hamming form requires equal local dimensions")
    p_list = sorted(set(subsystems))
    subset_mask(p_list, n)  # range check
    counts = pair_class_counts(dims)
    # per-pair expectation of the P-marginal product, by P-restricted class
    total = 0.0
    for i1 in itertools.product(range(d), repeat=len(p_list)):
        for i2 in itertools.product(range(d), repeat=len(p_list)):
            hamming = sum(a != b for a, b in zip(i1, i2))
            # marginal pair value: sum of full-pair class sums consistent
            # with this restriction, i.e. complement subsystems unconstrained
            marg = 0.0
            for q in range(2**n):
                consistent = all(
                    _in_mask(q, l, n) == (i1[j] != i2[j]) for j, l in enumerate(p_list)
                )
                if consistent:
                    marg += counts[q] * y.values[q]
            # marg now counts every complement completion; divide by the
            # number of completions of the restricted pair in its class
            restricted = 1.0
            for j, l in enumerate(p_list):
                restricted *= d * (d - 1) if i1[j] != i2[j] else d
            total += d ** len(p_list) * (-float(d)) ** (-hamming) * marg / restricted
    return total


def exact_x2(rho: DensityMatrix) -> XVector2:
    """All marginal purities computed directly from the state."""
    n = rho.dims.n_parties
    purities = np.empty(2**n)
    for p_mask in range(2**n):
        keep = [l for l in range(n) if _in_mask(p_mask, l, n)]
        purities[p_mask] = trace_power(partial_trace(rho, keep).entries, 2)
    return XVector2(dims=rho.dims, purities=purities)


# ---------------------------------------------------------------------------
# order 3
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class YVector3:
    """The ten per-class averages of twirled three-round products."""

    d_a: int
    d_b: int
    values: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class XVector3:
    """The eleven third-order invariants x0..x10.

    x9 = Tr rho^3 and x10 = Tr (rho^Gamma)^3.  Reconstructed vectors carry
    the measurable symmetric combination x_S in both slots, since only
    x9 + x10 is accessible from randomized measurements.
    """

    values: tuple[float, ...]

    def __init__(self, values):
        values = tuple(float(v) for v in values)
        if len(values) != 11:
            raise ValueError("an order-3 invariant vector has 11 components")
        object.__setattr__(self, "values", values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    @property
    def x_s(self) -> float:
        return 0.5 * (self.values[9] + self.values[10])

    @property
    def delta(self) -> float:
        return self.values[4] - self.values[5]


def exact_x3(rho: DensityMatrix) -> XVector3:
    """Closed-form trace expressions for all eleven bipartite invariants."""
    if rho.dims.n_parties != 2:
        raise ValueError("order-3 invariants are defined for bipartite states")
    dims = rho.dims.dims
    m = rho.entries
    r_a = partial_trace(rho, [0]).entries
    r_b = partial_trace(rho, [1]).entries
    m2 = m @ m
    t = m2.reshape(dims + dims)
    trb_m2 = np.trace(t, axis1=1, axis2=3)  # Tr_B rho^2, operator on A
    tra_m2 = np.trace(t, axis1=0, axis2=2)  # Tr_A rho^2, operator on B
    return XVector3(
        (
            float(np.trace(m).real) ** 3,
            (np.trace(r_b @ r_b) * np.trace(m)).real,
            np.trace(r_b @ r_b @ r_b).real,
            (np.trace(r_a @ r_a) * np.trace(m)).real,
            np.trace(np.kron(r_a, r_b) @ m).real,
            (np.trace(m2) * np.trace(m)).real,
            np.trace(tra_m2 @ r_b).real,
            np.trace(r_a @ r_a @ r_a).real,
            np.trace(trb_m2 @ r_a).real,
            np.trace(m2 @ m).real,
            trace_power(partial_transpose(rho, 1), 3),
        )
    )


@dataclass(frozen=True)
class ForwardModel3:
    """All constants of the bipartite order-3 linear system at (d_A, d_B)."""

    d_a: int
    d_b: int
    wg_a: tuple[float, float, float]  # (identity, transposition, 3-cycle)
    wg_b: tuple[float, float, float]
    matrix11: np.ndarray = field(repr=False)  # 10 x 11, acts on (x0..x10)
    matrix10: np.ndarray = field(repr=False)  # 10 x 10, acts on (x0..x8, x_S)
    delta_coeff: float  # y4 - y5 = delta_coeff * (x4 - x5)

    @property
    def a(self) -> tuple[float, float]:
        """Per-side a = t + i (transposition plus identity Weingarten values)."""
        return (self.wg_a[1] + self.wg_a[0], self.wg_b[1] + self.wg_b[0])

    @property
    def b(self) -> tuple[float, float]:
        """Per-side b = c + t (3-cycle plus transposition)."""
        return (self.wg_a[2] + self.wg_a[1], self.wg_b[2] + self.wg_b[1])

    @property
    def eta(self) -> float:
        """The (a - b) product splitting the two (pair, pair) classes."""
        (a_a, a_b), (b_a, b_b) = self.a, self.b
        return (b_a - a_a) * (a_b - b_b)


def _check_order3_dims(d_a: int, d_b: int) -> None:
    if d_a < 3 or d_b < 3:
        raise SingularDimensionError(
            "order-3 reconstruction requires local dimensions >= 3"
        )


# rows of the ten y components as (A-pattern, B-pattern) indices into
# patterns_order3(): 0 all-distinct, 1 pair(12), 2 pair(23), 4 all-equal
_Y3_PATTERN_PAIRS = (
    (0, 0), (0, 1), (0, 4),
    (1, 0),
    (1, 2),  # y4: different pairs of rounds coincide on the two sides
    (1, 1),  # y5: the same pair of rounds coincides on both sides
    (1, 4),
    (4, 0), (4, 1), (4, 4),
)


@lru_cache(maxsize=None)
def forward_model_3(d_a: int, d_b: int) -> ForwardModel3:
    """Build the 10-equation forward model from the S rows and W matrices."""
    _check_order3_dims(d_a, d_b)
    w_a, w_b = w_matrix(3, d_a), w_matrix(3, d_b)
    s3 = s_matrix(3)
    m11 = np.zeros((10, 11))
    for r, (pa, pb) in enumerate(_Y3_PATTERN_PAIRS):
        v_a = s3[pa] @ w_a
        v_b = s3[pb] @ w_b
        for i in range(6):
            for j in range(6):
                m11[r, INVARIANT_ID[i][j]] += v_a[i] * v_b[j]
    m10 = np.column_stack([m11[:, :9], m11[:, 9] + m11[:, 10]])
    def first_wgs(w):
        return (w[0, 0], w[0, 1], w[0, 4])
    return ForwardModel3(
        d_a=d_a,
        d_b=d_b,
        wg_a=first_wgs(w_a),
        wg_b=first_wgs(w_b),
        matrix11=m11,
        matrix10=m10,
        delta_coeff=m11[4, 4] - m11[5, 4],
    )


def forward_3(x: XVector3, d_a: int, d_b: int) -> YVector3:
    """Exact per-class averages from the eleven invariants."""
    model = forward_model_3(d_a, d_b)
    return YVector3(d_a=d_a, d_b=d_b, values=model.matrix11 @ np.asarray(x.values))


_KEPT_ROWS = (0, 1, 2, 3, 5, 6, 7, 8, 9)  # drop y4: equal to y5 after merging x4


def _closed_form_factor(d: int) -> np.ndarray:
    return np.array(
        [
            [(d - 2) * (d - 1), 3 * (d - 1), 1],
            [-(d - 2) * (d - 1), (d - 2) * (d - 1), d],
            [(d - 2) * (d - 1), -1.5 * (d - 1) ** 2, 0.5 * (d * d + 1)],
        ]
    )


def _delta_correction(d_a: int, d_b: int) -> np.ndarray:
    """Coefficient vector of the x5 = x4 - Delta substitution on the kept rows.

    This is the image of the y5 forward column (rescaled by the per-side
    c_K = 1/((d^2-1)(d^2-4)) constants) before applying the tensor factors.
    """
    diag9 = np.kron(
        [1.0, d_a - 2.0, (d_a - 2.0) * (d_a - 1.0)],
        [1.0, d_b - 2.0, (d_b - 2.0) * (d_b - 1.0)],
    )
    v5 = np.array(
        [
            3.0 * d_a * d_b,
            d_a * (1.0 - d_b),
            -3.0 * d_a,
            d_b * (1.0 - d_a),
            float(d_a * d_b + d_a + d_b + 3),
            d_a - 1.0,
            -3.0 * d_b,
            d_b - 1.0,
            3.0,
        ]
    )
    c_a = 1.0 / ((d_a**2 - 1) * (d_a**2 - 4))
    c_b = 1.0 / ((d_b**2 - 1) * (d_b**2 - 4))
    return c_a * c_b * (diag9 * v5)


def _assemble_x(x9: np.ndarray, delta: float) -> XVector3:
    x0, x1, x2, x3, x4, x6, x7, x8, x_s = x9
    return XVector3((x0, x1, x2, x3, x4, x4 - delta, x6, x7, x8, x_s, x_s))


def invert_3(y: YVector3, d_a: int | None = None, d_b: int | None = None) -> XVector3:
    """Closed-form inversion: Delta rescaling plus the tensor-product solve.

    Delta = (y4 - y5) d_A(d_A^2-1) d_B(d_B^2-1), then the nine remaining
    unknowns come from the explicit 3x3 tensor factors and the Delta
    correction vector.  Raises if the recovered invariants fail to reproduce
    the input within the residual tolerance.
    """
    d_a = d_a if d_a is not None else y.d_a
    d_b = d_b if d_b is not None else y.d_b
    _check_order3_dims(d_a, d_b)
    vals = np.asarray(y.values, dtype=float)
    delta = (vals[4] - vals[5]) * d_a * (d_a**2 - 1) * d_b * (d_b**2 - 1)
    mm = np.kron(_closed_form_factor(d_a), _closed_form_factor(d_b))
    x9 = d_a * d_b * (mm @ vals[list(_KEPT_ROWS)])
    x9 += delta * (mm @ _delta_correction(d_a, d_b))
    x = _assemble_x(x9, delta)
    residual = np.max(np.abs(forward_3(x, d_a, d_b).values - vals))
    if residual > RESIDUAL_TOL:
        raise ReconstructionError(
            f"inversion residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )
    return x


def invert_3_numeric(y: YVector3, d_a: int | None = None, d_b: int | None = None) -> XVector3:
    """Generic route: linear solve of the reduced 9x9 system.

    Standing regression partner of :func:`invert_3`; the two must agree to
    1e-9 (the closed form transcribes long hand-derived matrices).
    """
    d_a = d_a if d_a is not None else y.d_a
    d_b = d_b if d_b is not None else y.d_b
    model = forward_model_3(d_a, d_b)
    vals = np.asarray(y.values, dtype=float)
    delta = (vals[4] - vals[5]) / model.delta_coeff
    m10 = model.matrix10
    # substitute x5 = x4 - delta: merge column 5 into column 4
    m9 = np.column_stack([m10[:, :4], m10[:, 4] + m10[:, 5], m10[:, 6:]])
    rhs = vals + delta * m10[:, 5]
    rows = list(_KEPT_ROWS)
    x9 = np.linalg.solve(m9[rows], rhs[rows])
    return _assemble_x(x9, delta)
