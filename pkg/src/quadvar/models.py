"""Weakly dependent unit-variance sequences and their dependence profiles.

A dependence profile summarises how fast mixed product covariances of a
stationary sequence decay.  For a centred, unit-variance sequence X_1, X_2, ...
with bounded fourth moments we track a non-increasing envelope ``phi`` with

    |cov(X_i, X_j X_k X_l)| <= phi[j - i]      (i < j <= k <= l)
    |cov(X_i X_j X_k, X_l)| <= phi[l - k]      (i <= j <= k < l)
    |cov(X_i X_j, X_k X_l)| <= phi[k - j]      (i <= j < k <= l)
    |cov(X_i, X_j)|         <= phi[j - i]      (i < j)

and a second sequence ``phi_sq`` with cov(X_i^2, X_j^2) <= phi_sq[j - i].
The aggregates that enter the variance bounds are the supremum of fourth
moments, the lag-weighted sum of ``phi`` and the plain sum of ``phi_sq``.

Profiles here are exact: Gaussian models get closed forms via Isserlis
pairings, Rademacher models get exhaustive enumeration of their driving
signs.  Sampling uses a counter-based generator keyed by (seed, stream), so
any path is reproducible in isolation regardless of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

_MASK64 = (1 << 64) - 1

__all__ = [
    "GaussianAR1",
    "GaussianMA",
    "RademacherIID",
    "RademacherProductMDS",
    "CovarianceModel",
    "SamplePath",
    "DependenceProfile",
    "path_rng",
    "generate_path",
    "generate_paths",
    "autocovariance",
    "covariance_matrix",
    "isserlis_fourth_moment",
    "exact_product_moment",
    "dependence_profile",
    "min_phi_double_sum",
]


@dataclass(frozen=True)
class GaussianAR1:
    """Stationary Gaussian AR(1) with unit marginal variance, C(j) = rho^|j|."""

    rho: float

    def __post_init__(self):
        if not (abs(self.rho) < 1.0):
            raise ValueError(f"rho must satisfy |rho| < 1, got {self.rho}")


@dataclass(frozen=True)
class GaussianMA:
    """Gaussian moving average X_t = sum_j c_j e_{t-j}, rescaled to variance 1.

    Coefficients are normalised at construction so that sum(c_j^2) = 1; the
    stored tuple is the normalised one.
    """

    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs must be finite")
        norm = math.sqrt(float(c @ c))
        if norm == 0.0:
            raise ValueError("coeffs must not all be zero")
        object.__setattr__(self, "coeffs", tuple(float(v) for v in c / norm))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1


@dataclass(frozen=True)
class RademacherIID:
    """Independent signs, P(X = +1) = P(X = -1) = 1/2."""


@dataclass(frozen=True)
class RademacherProductMDS:
    """X_t = e_{t-1} e_t for independent signs e_j: a strictly stationary
    martingale difference sequence with X_t^2 = 1."""


CovarianceModel = Union[GaussianAR1, GaussianMA, RademacherIID, RademacherProductMDS]


@dataclass(frozen=True)
class SamplePath:
    """A finite stretch of one realisation, together with its provenance."""

    values: np.ndarray
    model: CovarianceModel
    seed: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a non-empty 1-D array")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def path_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for (seed, stream).

    Philox is keyed directly with the pair, so streams for distinct indices
    never overlap and any one of them can be reconstructed independently.
    """
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw_innovations(model: CovarianceModel, p: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(model, GaussianAR1):
        return rng.standard_normal(p)
    if isinstance(model, GaussianMA):
        return rng.standard_normal(p + model.order)
    if isinstance(model, RademacherIID):
        return rng.integers(0, 2, size=p).astype(float) * 2.0 - 1.0
    if isinstance(model, RademacherProductMDS):
        return rng.integers(0, 2, size=p + 1).astype(float) * 2.0 - 1.0
    raise TypeError(f"unknown model {model!r}")


def _paths_from_innovations(model: CovarianceModel, innovations: np.ndarray) -> np.ndarray:
    """Map a (count, width) innovation block to (count, p) sample paths.

    The arithmetic is elementwise across rows, so a one-row block reproduces
    the single-path result bit for bit.
    """
    z = innovations
    if isinstance(model, GaussianAR1):
        rho = model.rho
        scale = math.sqrt(1.0 - rho * rho)
        x = np.empty_like(z)
        x[:, 0] = z[:, 0]
        for t in range(1, z.shape[1]):
            x[:, t] = rho * x[:, t - 1] + scale * z[:, t]
        return x
    if isinstance(model, GaussianMA):
        c = np.asarray(model.coeffs)
        p = z.shape[1] - model.order
        out = np.empty((z.shape[0], p))
        for r in range(z.shape[0]):
            out[r] = np.convolve(z[r], c, mode="valid")
        return out
    if isinstance(model, RademacherIID):
        return z
    if isinstance(model, RademacherProductMDS):
        return z[:, :-1] * z[:, 1:]
    raise TypeError(f"unknown model {model!r}")


def generate_path(model: CovarianceModel, p: int, seed: int) -> SamplePath:
    """Sample X_1..X_p from stream (seed, 0). Deterministic in its arguments."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    z = _draw_innovations(model, p, path_rng(seed, 0))
    values = _paths_from_innovations(model, z[np.newaxis, :])[0]
    return SamplePath(values=values, model=model, seed=seed)


def generate_paths(model: CovarianceModel, p: int, seed: int, count: int) -> np.ndarray:
    """Sample `count` independent paths as a (count, p) array.

    Row r is drawn from stream (seed, r); row 0 coincides with
    ``generate_path(model, p, seed)``.
    """
    if p < 1 or count < 1:
        raise ValueError("p and count must be >= 1")
    probe = _draw_innovations(model, p, path_rng(seed, 0))
    block = np.empty((count, probe.size))
    block[0] = probe
    for r in range(1, count):
        block[r] = _draw_innovations(model, p, path_rng(seed, r))
    return _paths_from_innovations(model, block)


def autocovariance(model: CovarianceModel, lag) -> np.ndarray | float:
    """C(lag) = cov(X_t, X_{t+lag}); accepts scalars or integer arrays."""
    j = np.abs(np.asarray(lag))
    if isinstance(model, GaussianAR1):
        out = np.where(j == 0, 1.0, np.power(float(model.rho), j.astype(float)))
    elif isinstance(model, GaussianMA):
        c = np.asarray(model.coeffs)
        q = model.order
        acf = np.array([float(c[: len(c) - h] @ c[h:]) for h in range(q + 1)])
        out = np.where(j <= q, acf[np.minimum(j, q)], 0.0)
    elif isinstance(model, (RademacherIID, RademacherProductMDS)):
        out = np.where(j == 0, 1.0, 0.0)
    else:
        raise TypeError(f"unknown model {model!r}")
    return float(out) if np.isscalar(lag) else out


def covariance_matrix(model: CovarianceModel, p: int) -> np.ndarray:
    """The p x p Toeplitz matrix [C(|i-j|)]."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    idx = np.arange(p)
    return autocovariance(model, np.abs(idx[:, None] - idx[None, :]))


def isserlis_fourth_moment(s_ij, s_ik, s_il, s_jk, s_jl, s_kl) -> float:
    """E[X_i X_j X_k X_l] for centred jointly Gaussian variables: the sum of
    the three pairings s_ij*s_kl + s_ik*s_jl + s_il*s_jk."""
    return float(s_ij * s_kl + s_ik * s_jl + s_il * s_jk)


def _gaussian_moment(model, indices) -> float:
    if len(indices) % 2 == 1:
        return 0.0
    if len(indices) == 0:
        return 1.0
    if len(indices) == 2:
        a, b = indices
        return float(autocovariance(model, b - a))
    if len(indices) == 4:
        i, j, k, l = indices
        s = lambda a, b: float(autocovariance(model, b - a))
        return isserlis_fourth_moment(s(i, j), s(i, k), s(i, l), s(j, k), s(j, l), s(k, l))
    raise ValueError("Gaussian product moments implemented up to order 4")


def _parity_moment(sign_indices) -> float:
    """E of a product of independent signs: 1 if every sign occurs an even
    number of times, else 0."""
    counts: dict[int, int] = {}
    for s in sign_indices:
        counts[s] = counts.get(s, 0) + 1
    return 1.0 if all(c % 2 == 0 for c in counts.values()) else 0.0


def exact_product_moment(model: CovarianceModel, indices) -> float:
    """Exact E[X_{i1} * ... * X_{in}] at the given (1-based) positions.

    Gaussian models use Isserlis pairings (orders <= 4); Rademacher models
    reduce to a parity count of their driving signs, which is exact for any
    order.
    """
    idx = tuple(int(i) for i in indices)
    if any(i < 1 for i in idx):
        raise ValueError("positions must be >= 1")
    if isinstance(model, (GaussianAR1, GaussianMA)):
        return _gaussian_moment(model, tuple(sorted(idx)))
    if isinstance(model, RademacherIID):
        return _parity_moment(idx)
    if isinstance(model, RademacherProductMDS):
        driving = []
        for i in idx:
            driving.extend((i - 1, i))
        return _parity_moment(driving)
    raise TypeError(f"unknown model {model!r}")


@dataclass(frozen=True)
class DependenceProfile:
    """Certified dependence envelopes for one model.

    ``phi``/``phi_sq`` hold lags 1..max_lag.  Beyond max_lag the envelope is
    bounded by tail_coeff * tail_ratio**lag, and the stored aggregate sums
    already include those analytic tails, so truncation never silently drops
    mass.  ``min_double_sum`` optionally carries the exact value of
    sum_{q,r >= 1} min(phi_q, phi_r) when the construction knows it.
    """

    phi: np.ndarray
    phi_sq: np.ndarray
    fourth_moment_sup: float
    phi_lag_weighted_sum: float
    phi_sq_sum: float
    max_lag: int
    tail_coeff: float = 0.0
    tail_ratio: float = 0.0
    min_double_sum: float | None = field(default=None)

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float).copy()
        phi_sq = np.asarray(self.phi_sq, dtype=float).copy()
        if self.max_lag < 1:
            raise ValueError("max_lag must be >= 1")
        if phi.shape != (self.max_lag,) or phi_sq.shape != (self.max_lag,):
            raise ValueError("phi and phi_sq must have shape (max_lag,)")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(phi_sq))):
            raise ValueError("profile entries must be finite")
        if np.any(phi < 0) or np.any(phi_sq < 0):
            raise ValueError("profile entries must be non-negative")
        if np.any(np.diff(phi) > 1e-12):
            raise ValueError("phi must be non-increasing")
        if self.fourth_moment_sup < 1.0:
            raise ValueError("sup E X^4 >= (E X^2)^2 = 1 for unit variance")
        if not (0.0 <= self.tail_ratio < 1.0) or self.tail_coeff < 0.0:
            raise ValueError("tail bound must be geometric with ratio in [0, 1)")
        lags = np.arange(1, self.max_lag + 1)
        if self.phi_lag_weighted_sum < float(lags @ phi) - 1e-9 * (1 + abs(self.phi_lag_weighted_sum)):
            raise ValueError("phi_lag_weighted_sum misses stored mass")
        if self.phi_sq_sum < float(phi_sq.sum()) - 1e-9 * (1 + abs(self.phi_sq_sum)):
            raise ValueError("phi_sq_sum misses stored mass")
        phi.setflags(write=False)
        phi_sq.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "phi_sq", phi_sq)

    def phi_at(self, lag: int) -> float:
        """Envelope value at a 1-based lag, falling back to the tail bound."""
        if lag < 1:
            raise ValueError("lag must be >= 1")
        if lag <= self.max_lag:
            return float(self.phi[lag - 1])
        return self.tail_coeff * self.tail_ratio**lag

    @property
    def hollow_coefficient_sum(self) -> float:
        """sup E X^4 + sum_k k*phi_k: the factor for zero-diagonal bounds."""
        return self.fourth_moment_sup + self.phi_lag_weighted_sum

    @property
    def general_coefficient_sum(self) -> float:
        """Adds the squared-variable covariance mass needed once diagonals enter."""
        return self.hollow_coefficient_sum + self.phi_sq_sum


def _gaussian_ar1_profile(model: GaussianAR1, max_lag: int) -> DependenceProfile:
    # Every mixed product covariance of a centred Gaussian vector is a sum of
    # at most three Isserlis pairings; each pairing contains one covariance
    # factor bridging the split position, and |C| <= 1 bounds the rest.  With
    # C(j) = rho^j that yields phi_k = 3 |rho|^k, exact for all lags, and
    # cov(X_i^2, X_j^2) = 2 C(j-i)^2 gives phi_sq_k = 2 rho^{2k}.
    r = abs(model.rho)
    lags = np.arange(1, max_lag + 1, dtype=float)
    phi = 3.0 * r**lags
    phi_sq = 2.0 * (model.rho**2) ** lags
    weighted = 3.0 * r / (1.0 - r) ** 2 if r > 0 else 0.0
    sq_sum = 2.0 * model.rho**2 / (1.0 - model.rho**2) if r > 0 else 0.0
    return DependenceProfile(
        phi=phi,
        phi_sq=phi_sq,
        fourth_moment_sup=3.0,
        phi_lag_weighted_sum=weighted,
        phi_sq_sum=sq_sum,
        max_lag=max_lag,
        tail_coeff=3.0 if r > 0 else 0.0,
        tail_ratio=r,
    )


def _gaussian_ma_profile(model: GaussianMA, max_lag: int) -> DependenceProfile:
    q = model.order
    acf = np.array([autocovariance(model, h) for h in range(q + 1)])
    # psi[k] = max_{h >= k} |C(h)| is the monotone envelope the pairing
    # argument needs; support ends at the MA order.
    psi_full = np.zeros(q + 1)
    if q >= 1:
        psi_full[1:] = np.flip(np.maximum.accumulate(np.flip(np.abs(acf[1:]))))
    phi_full = 3.0 * psi_full[1:]
    sq_full = 2.0 * acf[1:] ** 2
    lags_full = np.arange(1, q + 1, dtype=float)
    weighted = float(lags_full @ phi_full)
    sq_sum = float(sq_full.sum())
    min_double = float((2.0 * lags_full - 1.0) @ phi_full)
    phi = np.zeros(max_lag)
    phi_sq = np.zeros(max_lag)
    upto = min(max_lag, q)
    phi[:upto] = phi_full[:upto]
    phi_sq[:upto] = sq_full[:upto]
    tail_coeff = 0.0
    tail_ratio = 0.0
    if max_lag < q:
        # Finite support that outruns the stored window: certify the stub with
        # a crude geometric majorant; the exact aggregates above are unaffected.
        tail_ratio = 0.5
        ks = np.arange(max_lag + 1, q + 1, dtype=float)
        tail_coeff = float(np.max(phi_full[max_lag:] / tail_ratio**ks))
    return DependenceProfile(
        phi=phi,
        phi_sq=phi_sq,
        fourth_moment_sup=3.0,
        phi_lag_weighted_sum=weighted,
        phi_sq_sum=sq_sum,
        max_lag=max_lag,
        tail_coeff=tail_coeff,
        tail_ratio=tail_ratio,
        min_double_sum=min_double,
    )


_ENUM_WINDOW = 8


def _enumerated_profile(model: CovarianceModel, max_lag: int) -> DependenceProfile:
    """Profile for sign-driven models by exhaustive enumeration.

    All sign configurations of a sliding window are enumerated and the four
    covariance families are maximised per gap.  Both Rademacher variants have
    driving range <= 1, so index tuples reaching beyond the window split into
    independent sign blocks and contribute exactly zero; the window loses
    nothing.
    """
    w = _ENUM_WINDOW
    n_driving = w if isinstance(model, RademacherIID) else w + 1
    configs = np.arange(2**n_driving, dtype=np.int64)
    bits = (configs[:, None] >> np.arange(n_driving)[None, :]) & 1
    signs = bits.astype(float) * 2.0 - 1.0
    x = signs if isinstance(model, RademacherIID) else signs[:, :-1] * signs[:, 1:]

    def mean_prod(*cols):
        prod = np.ones(x.shape[0])
        for c in cols:
            prod = prod * x[:, c]
        return float(prod.mean())

    phi = np.zeros(max_lag)
    phi_sq = np.zeros(max_lag)
    for i in range(w):
        for j in range(i + 1, w):
            gap = j - i
            pair = abs(mean_prod(i, j) - mean_prod(i) * mean_prod(j))
            sq = float((x[:, i] ** 2 * x[:, j] ** 2).mean()) - float(
                (x[:, i] ** 2).mean()
            ) * float((x[:, j] ** 2).mean())
            if gap <= max_lag:
                phi[gap - 1] = max(phi[gap - 1], pair)
                phi_sq[gap - 1] = max(phi_sq[gap - 1], sq)
    for i in range(w):
        for j in range(i + 1, w):
            for k in range(j + 1, w):
                for l in range(k + 1, w):
                    e4 = mean_prod(i, j, k, l)
                    one_three = abs(e4 - mean_prod(i) * mean_prod(j, k, l))
                    three_one = abs(e4 - mean_prod(i, j, k) * mean_prod(l))
                    two_two = abs(e4 - mean_prod(i, j) * mean_prod(k, l))
                    for gap, val in ((j - i, one_three), (l - k, three_one), (k - j, two_two)):
                        if gap <= max_lag:
                            phi[gap - 1] = max(phi[gap - 1], val)
    fourth = float((x[:, 0] ** 4).mean())
    lags = np.arange(1, max_lag + 1, dtype=float)
    return DependenceProfile(
        phi=phi,
        phi_sq=phi_sq,
        fourth_moment_sup=fourth,
        phi_lag_weighted_sum=float(lags @ phi),
        phi_sq_sum=float(phi_sq.sum()),
        max_lag=max_lag,
        min_double_sum=float((2.0 * lags - 1.0) @ phi),
    )


def dependence_profile(model: CovarianceModel, max_lag: int) -> DependenceProfile:
    """Exact dependence profile of a model, valid at every lag."""
    if max_lag < 1:
        raise ValueError(f"max_lag must be >= 1, got {max_lag}")
    if isinstance(model, GaussianAR1):
        return _gaussian_ar1_profile(model, max_lag)
    if isinstance(model, GaussianMA):
        return _gaussian_ma_profile(model, max_lag)
    if isinstance(model, (RademacherIID, RademacherProductMDS)):
        return _enumerated_profile(model, max_lag)
    raise TypeError(f"unknown model {model!r}")


def min_phi_double_sum(profile: DependenceProfile) -> float:
    """sum_{q,r >= 1} min(phi_q, phi_r), tails included.

    Monotonicity turns the double sum into sum_m (2m - 1) phi_m, which is at
    most twice the lag-weighted sum; the geometric tail is added in closed
    form.  Used to certify that envelope aggregation never doubles mass.
    """
    if profile.min_double_sum is not None:
        return profile.min_double_sum
    lags = np.arange(1, profile.max_lag + 1, dtype=float)
    total = float((2.0 * lags - 1.0) @ profile.phi)
    a, r, L = profile.tail_coeff, profile.tail_ratio, profile.max_lag
    if a > 0.0 and r > 0.0:
        t0 = r ** (L + 1) / (1.0 - r)
        t1 = r ** (L + 1) * ((L + 1) - L * r) / (1.0 - r) ** 2
        total += a * (2.0 * t1 - t0)
    return total
