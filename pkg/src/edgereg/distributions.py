"""Random-variate generators for the full conditionals.

The workhorse is the three-parameter generalized inverse Gaussian
GIG(m, a, b) with density

    f(x) = (a/b)^(m/2) / (2 K_m(sqrt(ab))) * x^(m-1) * exp(-(a x + b / x) / 2)

on x > 0.  Draws use a log-concave two-sided-exponential-envelope rejection
sampler on the log scale (Devroye's construction), which is valid for every
admissible (m, a, b) with a, b > 0 and has a uniformly bounded rejection
constant, so no per-regime algorithm switching is needed.  The degenerate
boundaries dispatch to the Gamma (b = 0) and inverse-Gamma (a = 0) limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import kve

from ._jit import njit

__all__ = [
    "GigParams",
    "sample_gig",
    "sample_gig_block",
    "gig_log_density",
    "sample_mvn",
    "NumericalError",
    "GIG_B_EPS",
]

# Guard for the cold-start corner beta == 0 with GIG order <= 0: substitute
# b = GIG_B_EPS**2 so the conditional stays proper.  Under the continuous
# prior beta is almost surely nonzero, so this only protects initial states.
GIG_B_EPS = 1e-12


class NumericalError(RuntimeError):
    """Raised when a linear-algebra step fails beyond the jitter policy."""


@dataclass(frozen=True)
class GigParams:
    """Parameters of GIG(m, a, b); see module docstring for the density."""

    m: float
    a: float
    b: float

    def __post_init__(self):
        m, a, b = self.m, self.a, self.b
        if not (math.isfinite(m) and math.isfinite(a) and math.isfinite(b)):
            raise ValueError("GIG parameters must be finite")
        if a < 0 or b < 0:
            raise ValueError("GIG requires a >= 0 and b >= 0")
        if b == 0 and not (m > 0 and a > 0):
            raise ValueError(f"GIG with b=0 requires m > 0 and a > 0, got m={m}, a={a}")
        if a == 0 and not (m < 0 and b > 0):
            raise ValueError(f"GIG with a=0 requires m < 0 and b > 0, got m={m}, b={b}")


@njit(cache=True)
def _gig_psi(x, alpha, lam):
    return -alpha * (math.cosh(x) - 1.0) - lam * (math.exp(x) - x - 1.0)


@njit(cache=True)
def _gig_dpsi(x, alpha, lam):
    return -alpha * math.sinh(x) - lam * math.expm1(x)


@njit(cache=True)
def _gig_std_draw(lam, omega, rng):
    """Draw from the standard form x^(lam-1) exp(-omega (x + 1/x) / 2), lam >= 0."""
    # rationalized to avoid cancellation when omega << lam
    alpha = omega * omega / (math.sqrt(omega * omega + lam * lam) + lam)
    t = 1.0
    v = -_gig_psi(1.0, alpha, lam)
    if v > 2.0:
        t = math.sqrt(2.0 / (alpha + lam))
    elif v < 0.5:
        t = math.log(4.0 / (alpha + 2.0 * lam))
    s = 1.0
    v = -_gig_psi(-1.0, alpha, lam)
    if v > 2.0:
        s = math.sqrt(4.0 / (alpha * math.cosh(1.0) + lam))
    elif v < 0.5:
        if alpha == 0.0:
            s = 1.0 / lam
        else:
            sa = math.log(1.0 + 1.0 / alpha + math.sqrt(1.0 / (alpha * alpha) + 2.0 / alpha))
            s = sa if lam == 0.0 else min(1.0 / lam, sa)
    eta = -_gig_psi(t, alpha, lam)
    zeta = -_gig_dpsi(t, alpha, lam)
    theta = -_gig_psi(-s, alpha, lam)
    xi = _gig_dpsi(-s, alpha, lam)
    p = 1.0 / xi
    r = 1.0 / zeta
    td = t - r * eta
    sd = s - p * theta
    q = td + sd
    total = p + q + r
    while True:
        u = rng.random()
        v = rng.random()
        w = rng.random()
        upqr = u * total
        if upqr < q:
            xv = -sd + q * v
        elif upqr < q + r:
            xv = td - r * math.log(v)
        else:
            xv = -sd + p * math.log(v)
        if -sd <= xv <= td:
            g = 1.0
        elif xv > td:
            g = math.exp(-eta - zeta * (xv - t))
        else:
            g = math.exp(-theta + xi * (xv + s))
        if w * g <= math.exp(_gig_psi(xv, alpha, lam)):
            break
    return math.exp(xv) * (lam + math.sqrt(lam * lam + omega * omega)) / omega


@njit(cache=True)
def _gig_draw(m, a, b, rng):
    """Three-parameter GIG draw with boundary dispatch; see GigParams."""
    if b == 0.0:
        return rng.gamma(m, 2.0 / a)
    if a == 0.0:
        return b / (2.0 * rng.gamma(-m, 1.0))
    omega = math.sqrt(a * b)
    if m < 0.0:
        return math.sqrt(b / a) / _gig_std_draw(-m, omega, rng)
    return math.sqrt(b / a) * _gig_std_draw(m, omega, rng)


def sample_gig(params: GigParams, rng: np.random.Generator) -> float:
    """One draw from GIG(m, a, b).  Deterministic given the rng state."""
    if not isinstance(params, GigParams):
        params = GigParams(*params)
    return float(_gig_draw(params.m, params.a, params.b, rng))


@njit(cache=True)
def sample_gig_block(m, a, b, rng):
    """Elementwise GIG draws for arrays of equal shape (flattened order).

    Applies the b == 0 guard: with m > 0 the Gamma limit is exact; with
    m <= 0 the b = GIG_B_EPS**2 substitution keeps the draw proper.
    """
    out = np.empty(m.size)
    mf = m.ravel()
    af = a.ravel()
    bf = b.ravel()
    for k in range(mf.size):
        bb = bf[k]
        if bb == 0.0 and mf[k] <= 0.0:
            bb = GIG_B_EPS * GIG_B_EPS
        out[k] = _gig_draw(mf[k], af[k], bb, rng)
    return out.reshape(m.shape)


def gig_log_density(x: float, params: GigParams) -> float:
    """Exact log density of GIG(m, a, b) at x, normalizing constant included.

    Requires a > 0 and b > 0 (the constant involves the Bessel K_m).
    """
    if not isinstance(params, GigParams):
        params = GigParams(*params)
    m, a, b = params.m, params.a, params.b
    if a <= 0 or b <= 0:
        raise ValueError("exact normalization requires a > 0 and b > 0")
    x = float(x)
    if x <= 0:
        raise ValueError("GIG support is x > 0")
    z = math.sqrt(a * b)
    kv = kve(m, z)
    if not np.isfinite(kv) or kv <= 0:
        raise ValueError(f"Bessel K_{m}({z}) not representable in float64")
    log_k = math.log(kv) - z
    return (
        0.5 * m * (math.log(a) - math.log(b))
        - math.log(2.0)
        - log_k
        + (m - 1.0) * math.log(x)
        - 0.5 * (a * x + b / x)
    )


def sample_mvn(
    mean: np.ndarray, covariance: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Multivariate normal draw via Cholesky with a bounded jitter ladder.

    On factorization failure, adds 1e-10 * (trace/k) to the diagonal and
    escalates tenfold up to 1e-6 * (trace/k) before raising NumericalError.
    """
    mean = np.asarray(mean, dtype=np.float64)
    cov = np.asarray(covariance, dtype=np.float64)
    k = mean.shape[0]
    if cov.shape != (k, k):
        raise ValueError(f"covariance must be {k}x{k}")
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise ValueError("covariance must be symmetric")
    base = np.trace(cov) / k
    if not base > 0:
        eigs = np.linalg.eigvalsh(cov)
        raise NumericalError(
            "covariance has non-positive trace "
            f"(eig range [{eigs.min():.3e}, {eigs.max():.3e}])"
        )
    jitter = 0.0
    while True:
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(k) if jitter else cov)
            break
        except np.linalg.LinAlgError:
            jitter = 1e-10 * base if jitter == 0.0 else jitter * 10.0
            if jitter > 1e-6 * base * (1 + 1e-9):
                eigs = np.linalg.eigvalsh(cov)
                raise NumericalError(
                    "covariance factorization failed after max jitter "
                    f"(eig range [{eigs.min():.3e}, {eigs.max():.3e}])"
                )
    return mean + chol @ rng.standard_normal(k)
