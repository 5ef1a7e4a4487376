"""Kernel long-run variance estimation and its bias/variance diagnostics.

The estimator is the kernel-weighted double sum

    sigma2_hat = (1/n) sum_{s,t} K(|s - t| / m) X_s X_t,

computed here in its equivalent lag form.  A kernel enters through three
quantities: its sup-envelope square integral (driving the variance bound),
the local curvature pair (q, k_q) with K(x) = 1 + k_q x^q + o(x^q) (driving
the leading squared bias 4 (k_q Gamma_q)^2 / m^{2q}), and its support
(driving the cost of the lag form).  ``exact_bias`` evaluates the finite-n
expectation exactly instead of through the asymptotic expansion, so the
expansion's O(1/n) remainder is itself testable.

All bound reports keep the unquantified universal constant factored out;
comparisons against Monte Carlo are ratio checks, not absolute inequalities.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .models import (
    CovarianceModel,
    DependenceProfile,
    GaussianAR1,
    GaussianMA,
    RademacherIID,
    RademacherProductMDS,
    SamplePath,
    autocovariance,
    exact_product_moment,
)

__all__ = [
    "Kernel",
    "KernelAssumptions",
    "LRVEstimate",
    "BiasDecomposition",
    "MSEReport",
    "kernel_eval",
    "kernel_envelope",
    "kernel_kq",
    "check_assumptions",
    "estimate_lrv",
    "lrv_true",
    "gamma_q",
    "exact_bias",
    "variance_bound_c_free",
    "mse_bound",
    "fourth_cumulant",
    "cumulant_sum",
]

_NAMED_VARIANTS = ("bartlett", "parzen", "quadratic_spectral", "truncated", "tabulated")

# Sup-envelope grids for kernels without a monotone closed form.
_ENVELOPE_STEP = 1e-4
_ENVELOPE_EXTENT = 200.0


@dataclass(frozen=True)
class Kernel:
    """One HAC kernel, carrying its derived constants as cached attributes.

    Use the classmethod constructors; ``variant`` is an internal tag.
    Tabulated kernels interpolate linearly on their grid and are zero beyond
    it.
    """

    variant: str
    grid: tuple[float, ...] | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.variant not in _NAMED_VARIANTS:
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if self.variant == "tabulated":
            if self.grid is None or self.values is None:
                raise ValueError("tabulated kernels need grid and values")
            g = np.asarray(self.grid, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if g.ndim != 1 or g.shape != v.shape or g.size < 2:
                raise ValueError("grid and values must be 1-D, equal length >= 2")
            if not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
                raise ValueError("grid and values must be finite")
            if g[0] != 0.0 or np.any(np.diff(g) <= 0.0):
                raise ValueError("grid must start at 0 and increase strictly")
            if abs(v[0] - 1.0) > 1e-12:
                raise ValueError(f"K(0) must be 1, got {v[0]!r}")
            object.__setattr__(self, "grid", tuple(float(x) for x in g))
            object.__setattr__(self, "values", tuple(float(x) for x in v))
        elif self.grid is not None or self.values is not None:
            raise ValueError("only tabulated kernels take grid/values")

    @classmethod
    def bartlett(cls) -> "Kernel":
        return cls("bartlett")

    @classmethod
    def parzen(cls) -> "Kernel":
        return cls("parzen")

    @classmethod
    def quadratic_spectral(cls) -> "Kernel":
        return cls("quadratic_spectral")

    @classmethod
    def truncated(cls) -> "Kernel":
        return cls("truncated")

    @classmethod
    def tabulated(cls, grid, values) -> "Kernel":
        return cls("tabulated", grid=tuple(grid), values=tuple(values))

    @classmethod
    def from_csv(cls, path) -> "Kernel":
        """Tabulated kernel from a two-column (x, K(x)) CSV file."""
        grid = []
        values = []
        with open(path, newline="") as handle:
            for row in csv.reader(handle):
                if not row or row[0].strip().startswith("#"):
                    continue
                if len(row) != 2:
                    raise ValueError(f"{path}: expected two columns, got {row!r}")
                try:
                    grid.append(float(row[0]))
                    values.append(float(row[1]))
                except ValueError:
                    if grid:
                        raise ValueError(f"{path}: non-numeric row {row!r}")
                    continue  # header line
        if not grid:
            raise ValueError(f"{path}: no data rows")
        return cls.tabulated(grid, values)

    @property
    def support_radius(self) -> float:
        """Smallest r with K(x) = 0 for all x > r (inf when none exists)."""
        if self.variant in ("bartlett", "parzen", "truncated"):
            return 1.0
        if self.variant == "tabulated":
            return self.grid[-1]
        return math.inf

    @cached_property
    def _envelope_table(self) -> tuple[np.ndarray, np.ndarray]:
        """(breakpoints, suffix maxima of |K|) for non-monotone kernels.

        The envelope is the step function x -> table[floor(x / step)]; being
        a suffix maximum over everything from the covering breakpoint on
        (plus the analytic tail bound), it upper-bounds sup_{y >= x} |K(y)|
        and is non-increasing by construction.
        """
        if self.variant == "quadratic_spectral":
            xs = np.arange(0.0, _ENVELOPE_EXTENT + _ENVELOPE_STEP, _ENVELOPE_STEP)
            vals = np.abs(kernel_eval(self, xs))
            vals[-1] = max(vals[-1], _qs_tail_bound(_ENVELOPE_EXTENT))
        else:  # tabulated: suffix maxima over its own nodes are exact
            xs = np.asarray(self.grid, dtype=float)
            vals = np.abs(np.asarray(self.values, dtype=float))
        return xs, np.maximum.accumulate(vals[::-1])[::-1]

    @cached_property
    def sup_abs(self) -> float:
        """sup_x |K(x)|."""
        return float(kernel_envelope(self, 0.0))

    @cached_property
    def envelope_sq_integral(self) -> float:
        """Integral of the squared sup-envelope over [0, inf)."""
        if self.variant == "bartlett":
            return 1.0 / 3.0
        if self.variant == "parzen":
            return 151.0 / 560.0
        if self.variant == "truncated":
            return 1.0
        xs, table = self._envelope_table
        total = float(np.sum(table[:-1] ** 2 * np.diff(xs)))
        if self.variant == "quadratic_spectral":
            # Remaining mass under the |K(x)| <= beta(x)/x^2 majorant.
            total += _qs_tail_bound(_ENVELOPE_EXTENT) ** 2 * _ENVELOPE_EXTENT / 3.0
        return total

    @cached_property
    def q(self) -> float:
        return kernel_kq(self)[0]

    @cached_property
    def k_q(self) -> float:
        return kernel_kq(self)[1]


def _qs_tail_bound(x: float) -> float:
    """Decreasing majorant of |K(x)| for the quadratic spectral kernel:
    |sin(a)/a - cos(a)| <= 1/a + 1 with a = 6 pi x / 5."""
    return 25.0 / (12.0 * math.pi**2 * x * x) * (1.0 + 5.0 / (6.0 * math.pi * x))


def _validate_nonnegative(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("kernel argument must be >= 0")
    return arr


def kernel_eval(kernel: Kernel, x):
    """K(x) for x >= 0 (scalar or array, shape preserved)."""
    arr = _validate_nonnegative(x)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if kernel.variant == "bartlett":
        out = np.maximum(1.0 - arr, 0.0)
    elif kernel.variant == "parzen":
        out = np.where(
            arr <= 0.5,
            1.0 - 6.0 * arr**2 + 6.0 * arr**3,
            2.0 * np.maximum(1.0 - arr, 0.0) ** 3,
        )
    elif kernel.variant == "truncated":
        out = np.where(arr <= 1.0, 1.0, 0.0)
    elif kernel.variant == "quadratic_spectral":
        a = 1.2 * math.pi * arr
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            direct = 25.0 / (12.0 * math.pi**2 * arr**2) * (np.sin(a) / a - np.cos(a))
        # Near zero the direct form cancels; the series in a = 6 pi x / 5 does not.
        a2 = a * a
        series = 1.0 - a2 / 10.0 + a2 * a2 / 280.0 - a2 * a2 * a2 / 15120.0
        out = np.where(a < 0.05, series, direct)
    else:
        out = np.interp(arr, kernel.grid, kernel.values, right=0.0)
    return float(out[0]) if scalar else out


def kernel_envelope(kernel: Kernel, x):
    """Sup-envelope sup_{y >= x} |K(y)|, non-increasing in x.

    Equals K itself for the monotone non-negative kernels; for the
    oscillating and tabulated ones it is the cached step-function suffix
    maximum (an upper bound tight to the grid resolution).
    """
    arr = _validate_nonnegative(x)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if kernel.variant in ("bartlett", "parzen", "truncated"):
        out = kernel_eval(kernel, arr)
    else:
        xs, table = kernel._envelope_table
        idx = np.minimum(np.searchsorted(xs, arr, side="right") - 1, table.size - 1)
        out = table[np.maximum(idx, 0)]
        if kernel.variant == "quadratic_spectral":
            far = arr > _ENVELOPE_EXTENT
            if far.any():
                out = np.where(far, _qs_tail_bound(np.maximum(arr, 1.0)), out)
        else:
            out = np.where(arr > xs[-1], 0.0, out)
    return float(out[0]) if scalar else out


def kernel_kq(kernel: Kernel) -> tuple[float, float]:
    """The curvature pair (q, k_q) with K(x) - 1 ~ k_q x^q as x -> 0+.

    Closed forms for the named kernels; for tabulated kernels the limit is
    taken along x = 2^-j with a stabilisation certificate on both the fitted
    exponent and the coefficient.  A kernel that is exactly 1 near zero is
    degenerate: reported as (inf, 0.0).
    """
    if kernel.variant == "bartlett":
        return (1.0, -1.0)
    if kernel.variant == "parzen":
        return (2.0, -6.0)
    if kernel.variant == "quadratic_spectral":
        return (2.0, -18.0 * math.pi**2 / 125.0)
    if kernel.variant == "truncated":
        return (math.inf, 0.0)
    if len(kernel.values) > 1 and kernel.values[0] == 1.0 and kernel.values[1] == 1.0:
        # the interpolant is exactly 1 on the whole first grid segment
        return (math.inf, 0.0)
    xs = np.array([2.0**-j for j in range(0, 45)])
    xs = xs[xs <= kernel.grid[-1]]
    diffs = kernel_eval(kernel, xs) - 1.0
    if np.all(np.abs(diffs) <= 1e-12):
        return (math.inf, 0.0)
    usable = np.abs(diffs) > 1e-15
    xs, diffs = xs[usable], diffs[usable]
    if xs.size < 4:
        raise ValueError("tabulated kernel: too few usable points near 0 for k_q")
    with np.errstate(divide="ignore", invalid="ignore"):
        q_fits = np.log2(diffs[:-1] / diffs[1:])
    if not np.isfinite(q_fits[-2:]).all() or abs(q_fits[-1] - q_fits[-2]) > 1e-2:
        raise ValueError(
            "tabulated kernel: x^-q (K(x) - 1) does not stabilise (assumption (c))"
        )
    q = float(q_fits[-1])
    coeffs = diffs / xs**q
    if abs(coeffs[-1] - coeffs[-2]) > 1e-2 * max(1e-9, abs(coeffs[-1])):
        raise ValueError(
            "tabulated kernel: k_q estimates do not stabilise (assumption (c))"
        )
    return (q, float(coeffs[-1]))


@dataclass(frozen=True)
class KernelAssumptions:
    """Witnessed pass/fail report for the three kernel conditions."""

    bounded: bool
    square_integrable: bool
    curvature_limit: bool
    sup_abs: float
    envelope_sq_integral: float
    q: float
    k_q: float
    degenerate_limit: bool

    @property
    def all_pass(self) -> bool:
        return self.bounded and self.square_integrable and self.curvature_limit


def check_assumptions(kernel: Kernel) -> KernelAssumptions:
    """Check K(0) = 1 with continuity, a finite squared-envelope integral,
    and an existing curvature limit; failures are report entries."""
    near = np.linspace(0.0, 1e-3, 101)
    bounded = (
        abs(kernel_eval(kernel, 0.0) - 1.0) <= 1e-12
        and float(np.max(np.abs(kernel_eval(kernel, near) - 1.0))) <= 0.01
        and math.isfinite(kernel.sup_abs)
    )
    integral = kernel.envelope_sq_integral
    square_integrable = math.isfinite(integral)
    try:
        q, k_q = kernel_kq(kernel)
        curvature_limit = True
    except ValueError:
        q, k_q = math.nan, math.nan
        curvature_limit = False
    return KernelAssumptions(
        bounded=bounded,
        square_integrable=square_integrable,
        curvature_limit=curvature_limit,
        sup_abs=kernel.sup_abs,
        envelope_sq_integral=integral,
        q=q,
        k_q=k_q,
        degenerate_limit=curvature_limit and math.isinf(q),
    )


@dataclass(frozen=True)
class LRVEstimate:
    """One evaluation of the kernel estimator."""

    value: float
    n: int
    m: float
    kernel: Kernel


def estimate_lrv(path: SamplePath, kernel: Kernel, m: float) -> LRVEstimate:
    """sigma2_hat = (1/n) sum_{s,t} K(|s - t|/m) X_s X_t via the lag form.

    Cost is O(n * lags in the kernel support): the double sum collapses to
    n^-1 (sum X_t^2 + 2 sum_j K(j/m) sum_t X_t X_{t+j}).
    """
    if not (m > 0.0):
        raise ValueError(f"bandwidth m must be positive, got {m}")
    x = np.asarray(path.values, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("path must be non-empty")
    j_max = n - 1
    if math.isfinite(kernel.support_radius):
        j_max = min(j_max, int(math.floor(kernel.support_radius * m)))
    total = float(x @ x)
    if j_max >= 1:
        js = np.arange(1, j_max + 1)
        weights = kernel_eval(kernel, js / m)
        for j, w in zip(js, weights):
            if w != 0.0:
                total += 2.0 * w * float(x[:-j] @ x[j:])
    return LRVEstimate(value=total / n, n=n, m=float(m), kernel=kernel)


def _autocov_tail_sum(model: CovarianceModel, start: int) -> float:
    """sum_{j >= start} C(j), exact for every bundled model (start >= 1)."""
    if isinstance(model, GaussianAR1):
        return float(model.rho**start / (1.0 - model.rho))
    if isinstance(model, GaussianMA):
        order = model.order
        if start > order:
            return 0.0
        return float(np.sum(autocovariance(model, np.arange(start, order + 1))))
    return 0.0


def lrv_true(model: CovarianceModel, tail_tol: float = 1e-12) -> float:
    """sigma^2 = sum_j C(j) over all integers j.

    Every bundled model admits an exact evaluation (geometric series for the
    autoregression, a finite sum for the moving average, white noise
    otherwise), so ``tail_tol`` never forces a truncation here.
    """
    del tail_tol
    if isinstance(model, GaussianAR1):
        return (1.0 + model.rho) / (1.0 - model.rho)
    if isinstance(model, GaussianMA):
        return float(sum(model.coeffs)) ** 2
    if isinstance(model, (RademacherIID, RademacherProductMDS)):
        return 1.0
    raise TypeError(f"unknown model {model!r}")


def gamma_q(model: CovarianceModel, q: float, tail_tol: float = 1e-12) -> float:
    """Gamma_q = sum_{j >= 1} j^q C(j) with a certified truncation error.

    The autoregression is summed until the geometric ratio bound certifies
    the remainder below ``tail_tol``; the moving average is a finite sum and
    white noise contributes nothing.
    """
    if not (math.isfinite(q) and q >= 0.0):
        raise ValueError(f"q must be a finite real >= 0, got {q}")
    if isinstance(model, (RademacherIID, RademacherProductMDS)):
        return 0.0
    if isinstance(model, GaussianMA):
        js = np.arange(1, model.order + 1)
        if js.size == 0:
            return 0.0
        return float(np.sum(js**q * autocovariance(model, js)))
    if isinstance(model, GaussianAR1):
        r = abs(model.rho)
        if r == 0.0:
            return 0.0
        total = 0.0
        j = 1
        while True:
            term = j**q * model.rho**j
            total += term
            ratio = r * ((j + 1) / j) ** q
            if ratio < 1.0:
                remainder = (j + 1) ** q * r ** (j + 1) / (1.0 - ratio)
                if remainder <= tail_tol:
                    return total
            j += 1
            if j > 10**7:
                raise ValueError(
                    f"Gamma_q tail not certified below {tail_tol} within 1e7 terms"
                )
    raise TypeError(f"unknown model {model!r}")


@dataclass(frozen=True)
class BiasDecomposition:
    """Finite-n expectation error of the estimator and its first-order part.

    ``exact`` is E sigma2_hat - sigma^2 summed in full; ``leading`` is the
    m-driven term 2 sum_{j >= 1} (K(j/m) - 1) C(j), whose gap from ``exact``
    shrinks like 1/n.
    """

    exact: float
    leading: float


def _bias_sum(model: CovarianceModel, kernel: Kernel, m: float, j_stop: int,
              triangular_n: int | None) -> float:
    """2 sum_{j=1}^{j_stop} (w_j K(j/m) - 1) C(j) - 2 sum_{j > j_stop} C(j),
    with w_j the triangular factor (1 - j/n) or 1."""
    js = np.arange(1, j_stop + 1)
    cov = autocovariance(model, js) if js.size else np.zeros(0)
    weights = kernel_eval(kernel, js / m) if js.size else np.zeros(0)
    if triangular_n is not None:
        weights = weights * (1.0 - js / triangular_n)
    head = 2.0 * float(np.sum((weights - 1.0) * cov))
    return head - 2.0 * _autocov_tail_sum(model, j_stop + 1)


def exact_bias(
    model: CovarianceModel, kernel: Kernel, m: float, n: int
) -> BiasDecomposition:
    """E sigma2_hat - sigma^2, exactly, plus the first-order bias term.

    The expectation of the lag form is a finite weighted sum of
    autocovariances; subtracting sigma^2 leaves
    2 sum_{j=1}^{n-1} ((1 - j/n) K(j/m) - 1) C(j) - 2 sum_{j >= n} C(j),
    evaluated with the model's exact tail.  The leading term drops the
    triangular factor and extends the sum far enough that the residual tail
    is exact for the bundled models.
    """
    if not (m > 0.0):
        raise ValueError(f"bandwidth m must be positive, got {m}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    exact = _bias_sum(model, kernel, m, n - 1, triangular_n=n)
    stop = _leading_stop(model, kernel, m, n)
    leading = _bias_sum(model, kernel, m, stop, triangular_n=None)
    return BiasDecomposition(exact=exact, leading=leading)


def _leading_stop(model: CovarianceModel, kernel: Kernel, m: float, n: int) -> int:
    """Lag count after which both K(j/m) C(j) and C(j) are exactly summable."""
    stop = n - 1
    if math.isfinite(kernel.support_radius):
        stop = max(stop, int(math.ceil(kernel.support_radius * m)))
    if isinstance(model, GaussianAR1) and model.rho != 0.0:
        r = abs(model.rho)
        # beyond this lag the geometric tail is below double precision
        stop = max(stop, int(math.ceil(math.log(1e-18 * (1.0 - r)) / math.log(r))))
    elif isinstance(model, GaussianMA):
        stop = max(stop, model.order)
    return stop


def variance_bound_c_free(
    profile: DependenceProfile, kernel: Kernel, m: float, n: int
) -> float:
    """(Phi0 + Phi1 + Phi2) (1/n + 2 (m/n) int K-bar^2), the variance bound
    with the universal constant factored out."""
    if not (m > 0.0):
        raise ValueError(f"bandwidth m must be positive, got {m}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    integral = kernel.envelope_sq_integral
    if not math.isfinite(integral):
        raise ValueError("kernel envelope is not square integrable")
    return profile.general_coefficient_sum * (1.0 / n + 2.0 * (m / n) * integral)


@dataclass(frozen=True)
class MSEReport:
    """Constant-free pieces of the mean-square-error bound at one (m, n)."""

    exact_bias: float
    variance_bound_c_free: float
    squared_bias_leading: float
    gamma_q: float
    sigma2_true: float

    def __post_init__(self):
        if self.variance_bound_c_free < 0.0 or self.squared_bias_leading < 0.0:
            raise ValueError("bound terms must be non-negative")


def mse_bound(
    profile: DependenceProfile,
    model: CovarianceModel,
    kernel: Kernel,
    m: float,
    n: int,
    tail_tol: float = 1e-12,
) -> MSEReport:
    """Report both leading MSE terms: the C-free variance part and the exact
    squared-bias coefficient 4 (k_q Gamma_q)^2 / m^{2q}.

    A degenerate curvature limit (kernel identically 1 near zero) zeroes the
    squared-bias term; the exact finite-n bias still carries the whole bias.
    """
    report = check_assumptions(kernel)
    if not report.all_pass:
        raise ValueError(f"kernel fails its assumptions: {report}")
    if report.degenerate_limit or report.k_q == 0.0:
        gq = 0.0
        squared_leading = 0.0
    else:
        gq = gamma_q(model, report.q, tail_tol)
        squared_leading = 4.0 * (report.k_q * gq) ** 2 / m ** (2.0 * report.q)
    return MSEReport(
        exact_bias=exact_bias(model, kernel, m, n).exact,
        variance_bound_c_free=variance_bound_c_free(profile, kernel, m, n),
        squared_bias_leading=squared_leading,
        gamma_q=gq,
        sigma2_true=lrv_true(model),
    )


def fourth_cumulant(model: CovarianceModel, j: int, k: int, l: int) -> float:
    """kappa(X_t, X_{t+j}, X_{t+k}, X_{t+l}) for centred stationary X,
    via the standard identity E[WXYZ] - E[WX]E[YZ] - E[WY]E[XZ] - E[WZ]E[XY]."""
    if min(j, k, l) < 0:
        raise ValueError("lags must be >= 0")
    moment = exact_product_moment(model, (1, 1 + j, 1 + k, 1 + l))

    def c(lag: int) -> float:
        return float(autocovariance(model, abs(lag)))

    return moment - c(j) * c(l - k) - c(k) * c(l - j) - c(l) * c(k - j)


def cumulant_sum(model: CovarianceModel, max_lag: int) -> float:
    """Triple sum of |kappa(X_t, X_{t+j}, X_{t+k}, X_{t+l})| over
    1 <= j, k, l <= max_lag (the summability condition competing with the
    covariance-envelope route)."""
    if max_lag < 1:
        raise ValueError(f"max_lag must be >= 1, got {max_lag}")
    total = 0.0
    for j in range(1, max_lag + 1):
        for k in range(1, max_lag + 1):
            for l in range(1, max_lag + 1):
                total += abs(fourth_cumulant(model, j, k, l))
    return total
