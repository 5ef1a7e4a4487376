"""Quadratic forms X'AX of dependent sequences: exact variances, Monte Carlo
estimates, and the profile-driven variance bounds.

The bounds come in three strengths, all with the universal constant factored
out so that reported values are the trace/coefficient product only:

* zero-diagonal matrices need ``sup E X^4 + sum_k k phi_k`` times tr(AA'),
* arbitrary matrices add the squared-variable covariance mass ``sum phi_sq``,
* linear processes y = G x trade tr(AA') for tr(S A S A') with S = GG'.

``empirical_constant`` reports how tight those envelopes are on a concrete
matrix family: the largest ratio of true (or estimated) variance to bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import (
    CovarianceModel,
    DependenceProfile,
    GaussianAR1,
    GaussianMA,
    RademacherIID,
    RademacherProductMDS,
    covariance_matrix,
    dependence_profile,
    generate_paths,
    path_rng,
)

__all__ = [
    "evaluate",
    "symmetrize",
    "trace_product",
    "gaussian_exact_variance",
    "VarianceEstimate",
    "mc_variance",
    "mc_fourth_moment",
    "brute_force_variance",
    "BoundReport",
    "fourth_moment_bound",
    "hollow_variance_bound",
    "general_variance_bound",
    "linear_process_variance_bound",
    "empirical_constant",
    "gaussian_test_matrix",
]

_BRUTE_FORCE_MAX_P = 20
_CHUNK = 1 << 14


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def _as_vector(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError(f"expected a non-empty vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector entries must be finite")
    return a


def evaluate(x, A) -> float:
    """x'Ax for a real vector and a square matrix of matching size."""
    A = _as_square(A)
    x = _as_vector(x)
    if x.size != A.shape[0]:
        raise ValueError(f"dimension mismatch: x has {x.size}, A is {A.shape}")
    return float(x @ A @ x)


def symmetrize(A) -> np.ndarray:
    """(A + A')/2; leaves x'Ax unchanged for every x."""
    A = _as_square(A)
    return (A + A.T) / 2.0


def trace_product(A, B) -> float:
    """tr(AB) without forming the product."""
    A = _as_square(A)
    B = _as_square(B)
    if A.shape != B.shape:
        raise ValueError("trace_product needs equal shapes")
    return float(np.sum(A * B.T))


def _check_symmetric(S: np.ndarray, rel: float, what: str) -> np.ndarray:
    defect = np.linalg.norm(S - S.T)
    scale = max(1.0, float(np.linalg.norm(S)))
    if defect > rel * scale:
        raise ValueError(f"{what} must be symmetric (defect {defect:.3e})")
    return S


def gaussian_exact_variance(Sigma, A) -> float:
    """var(y'Ay) for y ~ N(0, Sigma): equals 2 tr((Sigma B)^2), B = (A+A')/2.

    This is the closed-form oracle every Monte Carlo and bound check in the
    Gaussian lane is measured against.
    """
    Sigma = _check_symmetric(_as_square(Sigma), 1e-12, "Sigma")
    B = symmetrize(A)
    if B.shape != Sigma.shape:
        raise ValueError("Sigma and A must have equal shapes")
    M = Sigma @ B
    return 2.0 * float(np.sum(M * M.T))


@dataclass(frozen=True)
class VarianceEstimate:
    """Monte Carlo variance of a quadratic form with its own uncertainty."""

    variance: float
    std_error: float
    mean: float
    replicates: int


def _quad_values(model: CovarianceModel, A: np.ndarray, replicates: int, seed: int) -> np.ndarray:
    paths = generate_paths(model, A.shape[0], seed, replicates)
    return np.einsum("ri,ri->r", paths @ A, paths)


def mc_variance(model: CovarianceModel, A, replicates: int, seed: int) -> VarianceEstimate:
    """Sample variance of x'Ax over independent paths.

    Replicate r uses stream (seed, r), so the estimate is reproducible and
    independent of evaluation order.  The standard error plugs the sample
    moments into the exact variance of the sample variance,
    (m4 - s^4)/n + 2 s^4 / (n (n-1)); the second term keeps the estimate
    positive when the values are two-point distributed, where the leading
    term vanishes identically.
    """
    A = _as_square(A)
    if replicates < 2:
        raise ValueError("replicates must be >= 2")
    q = _quad_values(model, A, replicates, seed)
    mean = float(q.mean())
    centred = q - mean
    s2 = float(centred @ centred) / (replicates - 1)
    m4 = float(np.mean(centred**4))
    var_s2 = max(m4 - s2 * s2, 0.0) / replicates
    var_s2 += 2.0 * s2 * s2 / (replicates * (replicates - 1.0))
    se = math.sqrt(var_s2)
    return VarianceEstimate(variance=s2, std_error=se, mean=mean, replicates=replicates)


def mc_fourth_moment(model: CovarianceModel, a, replicates: int, seed: int) -> tuple[float, float]:
    """Monte Carlo E (x'a)^4 with its standard error."""
    a = _as_vector(a)
    if replicates < 2:
        raise ValueError("replicates must be >= 2")
    v = (generate_paths(model, a.size, seed, replicates) @ a) ** 4
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(replicates))


def brute_force_variance(model: CovarianceModel, A) -> float:
    """Exact var(x'Ax) for sign-driven models by enumerating all driving signs.

    Equal-weight enumeration over 2^p (independent signs) or 2^(p+1)
    (products of consecutive signs) configurations; exact because every
    intermediate sum is a small integer.
    """
    A = _as_square(A)
    p = A.shape[0]
    if p > _BRUTE_FORCE_MAX_P:
        raise ValueError(f"enumeration capped at p = {_BRUTE_FORCE_MAX_P}, got {p}")
    if isinstance(model, RademacherIID):
        n_signs = p
    elif isinstance(model, RademacherProductMDS):
        n_signs = p + 1
    else:
        raise TypeError("brute_force_variance covers the Rademacher models only")
    total = 1 << n_signs
    acc1 = 0.0
    acc2 = 0.0
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        signs = (((idx[:, None] >> np.arange(n_signs)[None, :]) & 1) * 2 - 1).astype(float)
        x = signs if isinstance(model, RademacherIID) else signs[:, :-1] * signs[:, 1:]
        q = np.einsum("ri,ri->r", x @ A, x)
        acc1 += float(q.sum())
        acc2 += float((q * q).sum())
    mean = acc1 / total
    return acc2 / total - mean * mean


@dataclass(frozen=True)
class BoundReport:
    """A variance bound split into its trace factor and coefficient factor,
    with the universal constant left out."""

    bound_value: float
    trace_term: float
    coefficient_sum: float
    bound_kind: str


def fourth_moment_bound(profile: DependenceProfile, a) -> BoundReport:
    """Envelope for E (x'a)^4: coefficient sum times (a'a)^2."""
    a = _as_vector(a)
    trace_term = float(a @ a) ** 2
    coeff = profile.hollow_coefficient_sum
    return BoundReport(coeff * trace_term, trace_term, coeff, "fourth_moment")


def hollow_variance_bound(profile: DependenceProfile, A) -> BoundReport:
    """Envelope for var(x'Ax) when diag(A) = 0: coefficient sum times tr(AA')."""
    A = _as_square(A)
    if np.any(np.diag(A) != 0.0):
        raise ValueError("hollow bound requires an exactly zero diagonal")
    trace_term = float(np.sum(A * A))
    coeff = profile.hollow_coefficient_sum
    return BoundReport(coeff * trace_term, trace_term, coeff, "hollow_variance")


def general_variance_bound(profile: DependenceProfile, A) -> BoundReport:
    """Envelope for var(x'Ax) with arbitrary diagonal: adds the phi_sq mass."""
    A = _as_square(A)
    trace_term = float(np.sum(A * A))
    coeff = profile.general_coefficient_sum
    return BoundReport(coeff * trace_term, trace_term, coeff, "general_variance")


def linear_process_variance_bound(profile: DependenceProfile, Sigma, A) -> BoundReport:
    """Envelope for var(y'Ay), y = G x with GG' = Sigma and orthonormal x:
    coefficient sum times tr(S A S A')."""
    Sigma = _check_symmetric(_as_square(Sigma), 1e-12, "Sigma")
    A = _as_square(A)
    if Sigma.shape != A.shape:
        raise ValueError("Sigma and A must have equal shapes")
    M = Sigma @ A
    N = Sigma @ A.T
    trace_term = float(np.sum(M * N.T))
    coeff = profile.general_coefficient_sum
    return BoundReport(coeff * trace_term, trace_term, coeff, "linear_process_variance")


def empirical_constant(
    model: CovarianceModel,
    matrices,
    replicates: int,
    seed: int,
    max_lag: int = 64,
) -> float:
    """Largest variance-to-bound ratio over a matrix family.

    Gaussian models use the exact variance, sign-driven models fall back to
    Monte Carlo (matrix i drawing from seed + i).  A zero matrix has bound
    zero and variance zero and contributes a ratio of 0 by convention.
    """
    profile = dependence_profile(model, max_lag)
    gaussian = isinstance(model, (GaussianAR1, GaussianMA))
    worst = 0.0
    for i, A in enumerate(matrices):
        A = _as_square(A)
        bound = general_variance_bound(profile, A).bound_value
        if bound == 0.0:
            continue
        if gaussian:
            var = gaussian_exact_variance(covariance_matrix(model, A.shape[0]), A)
        else:
            var = mc_variance(model, A, replicates, seed + i).variance
        worst = max(worst, var / bound)
    return worst


def gaussian_test_matrix(p: int, seed: int, hollow: bool = False) -> np.ndarray:
    """Reproducible dense test matrix with standard normal entries; ``hollow``
    zeroes the diagonal."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    A = path_rng(seed, 0).standard_normal((p, p))
    if hollow:
        np.fill_diagonal(A, 0.0)
    return A
