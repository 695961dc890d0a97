"""Randomized-measurement simulation: sample local unitaries, measure in the
computational basis, and average outcome-probability products per equality
class.

Reproducibility: unitaries are drawn in fixed chunks; chunk c for party l uses
the substream ``c * n_parties + l`` of the master seed, and per-chunk sums are
merged with ``math.fsum`` in chunk order.  Results are therefore bit-identical
for a given (state, config) regardless of the worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .haar import DEFAULT_SEED, RngStream, sample_haar_batch
from .reconstruct import YVector2, YVector3, pair_class_counts
from .states import DensityMatrix, DimsProfile
from .weingarten import SingularDimensionError


class EstimationError(ArithmeticError):
    """Raised when an estimator cannot produce finite statistics."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs of a simulated protocol run.

    shots = 0 means ideal statistics: exact Born probabilities per unitary,
    no multinomial sampling.  With finite shots the default estimators are
    the unbiased U-statistics over ordered distinct shots; ``plug_in`` swaps
    in the biased empirical-frequency products (O(1/shots) bias).
    """

    n_unitaries: int
    shots: int = 0
    master_seed: int = DEFAULT_SEED
    batch_size: int = 512
    plug_in: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.n_unitaries < 1:
            raise ValueError("n_unitaries must be >= 1")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class OutcomeDistribution:
    """Born probabilities of computational-basis outcomes after local unitaries."""

    dims: DimsProfile
    probabilities: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class YEstimate:
    """A y-vector estimate with per-component standard errors.

    ``std_error`` is the sample standard deviation across unitaries divided
    by sqrt(n_unitaries); it scales as 1/sqrt(n_unitaries).
    """

    values: np.ndarray = field(repr=False)
    std_error: np.ndarray = field(repr=False)
    n_unitaries: int
    shots: int
    chunk_means: np.ndarray = field(repr=False)  # (n_chunks, n_components)
    chunk_sizes: np.ndarray = field(repr=False)


def outcome_distribution(rho: DensityMatrix, unitaries: list[np.ndarray]) -> OutcomeDistribution:
    """p(I) = <I| (U rho U^dag) |I> for one product unitary U = U_1 x ... x U_N."""
    if len(unitaries) != rho.dims.n_parties:
        raise ValueError("one unitary per subsystem is required")
    u = np.ones((1, 1), dtype=complex)
    for l, ul in enumerate(unitaries):
        if ul.shape != (rho.dims[l], rho.dims[l]):
            raise ValueError(f"unitary {l} has shape {ul.shape}, expected {(rho.dims[l],) * 2}")
        u = np.kron(u, ul)
    p = np.einsum("ij,ik,kj->j", u.conj(), rho.entries, u).real
    if np.min(p) < -1e-14:
        raise EstimationError(f"negative probability {np.min(p):.3e}")
    return OutcomeDistribution(dims=rho.dims, probabilities=np.maximum(p, 0.0))


def _batched_probabilities(rho: DensityMatrix, locals_: list[np.ndarray]) -> np.ndarray:
    """(B, total) Born probabilities for a batch of product unitaries."""
    u = locals_[0]
    for ul in locals_[1:]:
        # batched kron: (B, m, m) x (B, d, d) -> (B, m d, m d)
        b, m, _ = u.shape
        d = ul.shape[-1]
        u = np.einsum("bij,bkl->bikjl", u, ul).reshape(b, m * d, m * d)
    p = np.einsum("bij,ik,bkj->bj", u.conj(), rho.entries, u).real
    return np.maximum(p, 0.0)


# ---------------------------------------------------------------------------
# per-class one-hot matrices
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _class_matrix_2(dims: tuple[int, ...]) -> np.ndarray:
    """(total^2, 2^N) map from flattened pair products to class averages."""
    n = len(dims)
    total = math.prod(dims)
    counts = pair_class_counts(DimsProfile(dims))
    cm = np.zeros((total * total, 2**n))
    digits = np.empty((total, n), dtype=int)
    for idx in range(total):
        r = idx
        for l in range(n - 1, -1, -1):
            digits[idx, l] = r % dims[l]
            r //= dims[l]
    for i1 in range(total):
        for i2 in range(total):
            q = 0
            for l in range(n):
                if digits[i1, l] != digits[i2, l]:
                    q |= 1 << (n - 1 - l)
            cm[i1 * total + i2, q] = 1.0 / counts[q]
    return cm


def _pair_pattern(a: int, b: int, c: int) -> int:
    """Equality pattern of a round triple: 0 distinct, 1 (12), 2 (23), 3 (13), 4 equal."""
    if a == b == c:
        return 4
    if a == b:
        return 1
    if b == c:
        return 2
    if a == c:
        return 3
    return 0


# map (A-pattern, B-pattern) -> y3 component, None for unused combinations
# (pair classes on one side against a different-pair class on the other are
# all "misaligned" and pool into y4; matching pairs pool into y5)
def _y3_component(pa: int, pb: int) -> int | None:
    a_kind = 0 if pa == 0 else (2 if pa == 4 else 1)
    b_kind = 0 if pb == 0 else (2 if pb == 4 else 1)
    if a_kind != 1 or b_kind != 1:
        return {
            (0, 0): 0, (0, 1): 1, (0, 2): 2,
            (1, 0): 3, (1, 2): 6,
            (2, 0): 7, (2, 1): 8, (2, 2): 9,
        }[(a_kind, b_kind)]
    return 4 if pa != pb else 5


@lru_cache(maxsize=None)
def _class_matrix_3(d_a: int, d_b: int) -> np.ndarray:
    """(total^3, 10) map from flattened triple products to class averages."""
    total = d_a * d_b
    cm = np.zeros((total**3, 10))
    counts = np.zeros(10)
    comp = np.empty((total, total, total), dtype=int)
    for i1 in range(total):
        a1, b1 = divmod(i1, d_b)
        for i2 in range(total):
            a2, b2 = divmod(i2, d_b)
            for i3 in range(total):
                a3, b3 = divmod(i3, d_b)
                c = _y3_component(_pair_pattern(a1, a2, a3), _pair_pattern(b1, b2, b3))
                comp[i1, i2, i3] = c
                counts[c] += 1
    flat = comp.reshape(-1)
    cm[np.arange(total**3), flat] = 1.0 / counts[flat]
    return cm


# ---------------------------------------------------------------------------
# shot-level estimators
# ---------------------------------------------------------------------------

def _pair_products(p: np.ndarray, counts: np.ndarray | None, shots: int, plug_in: bool) -> np.ndarray:
    """(B, t, t) estimates of p_i p_j per unitary."""
    if counts is None:
        return p[:, :, None] * p[:, None, :]
    c = counts.astype(float)
    if plug_in:
        f = c / shots
        return f[:, :, None] * f[:, None, :]
    t = c.shape[1]
    prod = c[:, :, None] * c[:, None, :]
    prod[:, np.arange(t), np.arange(t)] -= c
    return prod / (shots * (shots - 1))


def _triple_products(p: np.ndarray, counts: np.ndarray | None, shots: int, plug_in: bool) -> np.ndarray:
    """(B, t, t, t) estimates of p_i p_j p_k per unitary."""
    if counts is None:
        return p[:, :, None, None] * p[:, None, :, None] * p[:, None, None, :]
    c = counts.astype(float)
    if plug_in:
        f = c / shots
        return f[:, :, None, None] * f[:, None, :, None] * f[:, None, None, :]
    t = c.shape[1]
    eye = np.eye(t)
    # ordered distinct shots: c_i (c_j - d_ij) (c_k - d_ik - d_jk)
    cj = c[:, None, :] - eye[None, :, :]  # (B, i, j)
    ck = (
        c[:, None, None, :]
        - eye[None, :, None, :]
        - eye[None, None, :, :]
    )  # (B, i, j, k)
    out = c[:, :, None, None] * cj[:, :, :, None] * ck
    return out / (shots * (shots - 1) * (shots - 2))


# ---------------------------------------------------------------------------
# the estimation loop
# ---------------------------------------------------------------------------

def _run_chunks(rho: DensityMatrix, cfg: EstimatorConfig, order: int, class_matrix: np.ndarray) -> YEstimate:
    n_parties = rho.dims.n_parties
    n_chunks = -(-cfg.n_unitaries // cfg.batch_size)
    min_shots = {2: 2, 3: 3}[order]
    if cfg.shots and cfg.shots < min_shots and not cfg.plug_in:
        raise EstimationError(
            f"unbiased order-{order} estimation needs at least {min_shots} shots"
        )
    if cfg.plug_in and cfg.shots:
        warnings.warn(
            "plug-in estimator is biased at finite shots (O(1/shots))",
            stacklevel=3,
        )

    def one_chunk(c: int) -> tuple[np.ndarray, np.ndarray, int]:
        start = c * cfg.batch_size
        size = min(cfg.batch_size, cfg.n_unitaries - start)
        locals_ = []
        for l in range(n_parties):
            stream = RngStream(cfg.master_seed, c * n_parties + l)
            locals_.append(sample_haar_batch(rho.dims[l], size, stream))
        p = _batched_probabilities(rho, locals_)
        counts = None
        if cfg.shots:
            # shot noise reuses the last party's chunk stream, offset so it
            # never collides with a unitary substream of any chunk
            shot_rng = RngStream(
                cfg.master_seed, (n_chunks + c) * n_parties
            ).generator()
            counts = shot_rng.multinomial(cfg.shots, p)
        if order == 2:
            prods = _pair_products(p, counts, cfg.shots, cfg.plug_in)
        else:
            prods = _triple_products(p, counts, cfg.shots, cfg.plug_in)
        samples = prods.reshape(size, -1) @ class_matrix  # (size, n_components)
        return samples.sum(axis=0), (samples * samples).sum(axis=0), size

    if cfg.workers == 1:
        results = [one_chunk(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one_chunk, range(n_chunks)))

    n_comp = class_matrix.shape[1]
    mean = np.array(
        [math.fsum(r[0][k] for r in results) for k in range(n_comp)]
    ) / cfg.n_unitaries
    sq = np.array([math.fsum(r[1][k] for r in results) for k in range(n_comp)])
    if cfg.n_unitaries > 1:
        var = (sq - cfg.n_unitaries * mean**2) / (cfg.n_unitaries - 1)
        se = np.sqrt(np.maximum(var, 0.0) / cfg.n_unitaries)
    else:
        se = np.full(n_comp, np.nan)
    if not np.all(np.isfinite(mean)):
        raise EstimationError("estimator produced non-finite values")
    sizes = np.array([r[2] for r in results], dtype=float)
    chunk_means = np.array([r[0] for r in results]) / sizes[:, None]
    return YEstimate(
        values=mean,
        std_error=se,
        n_unitaries=cfg.n_unitaries,
        shots=cfg.shots,
        chunk_means=chunk_means,
        chunk_sizes=sizes,
    )


def estimate_y2(rho: DensityMatrix, cfg: EstimatorConfig) -> tuple[YVector2, YEstimate]:
    """Estimate the 2^N order-2 class averages for an N-partite state."""
    cm = _class_matrix_2(rho.dims.dims)
    est = _run_chunks(rho, cfg, order=2, class_matrix=cm)
    return YVector2(dims=rho.dims, values=est.values), est


def estimate_y3(rho: DensityMatrix, cfg: EstimatorConfig) -> tuple[YVector3, YEstimate]:
    """Estimate the ten order-3 class averages for a bipartite state."""
    if rho.dims.n_parties != 2:
        raise ValueError("order-3 estimation is defined for bipartite states")
    d_a, d_b = rho.dims.dims
    if d_a < 3 or d_b < 3:
        raise SingularDimensionError(
            "order-3 reconstruction requires local dimensions >= 3"
        )
    cm = _class_matrix_3(d_a, d_b)
    est = _run_chunks(rho, cfg, order=3, class_matrix=cm)
    return YVector3(d_a=d_a, d_b=d_b, values=est.values), est
