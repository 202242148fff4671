"""Posterior summarization: edge inclusion probabilities, Bayesian FDR
selection, covariate-level graph prediction, positive-definiteness auditing,
and the Geweke stationarity diagnostic."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    DiagPrecision,
    EdgeCoefficients,
    edge_pairs,
    predict_precision,
)

__all__ = [
    "PosteriorDraws",
    "GraphEstimate",
    "PdAuditReport",
    "rho_at",
    "compute_ppi",
    "fdr_select",
    "predict_graph",
    "pd_audit",
    "geweke_diagnostic",
]


@dataclass(frozen=True)
class PosteriorDraws:
    """Thinned posterior draws from one chain.

    ``rho`` holds partial correlations at the recorded covariate levels
    (draws x levels x edges); ``beta`` and ``omega`` keep the underlying
    coefficient and diagonal draws so partial correlations can be rebuilt
    at any other covariate level.  Partial correlations are finite but not
    constrained to [-1, 1] by the model.
    """

    levels: np.ndarray           # (n_levels, q)
    rho: np.ndarray              # (L, n_levels, E)
    beta: np.ndarray             # (L, q, E)
    omega: np.ndarray            # (L, p)
    draw_iterations: np.ndarray  # (L,)
    rho_subject: np.ndarray | None = None  # (L, N, E)

    @property
    def n_draws(self) -> int:
        return self.rho.shape[0]

    @property
    def n_levels(self) -> int:
        return self.levels.shape[0]

    @property
    def n_edge(self) -> int:
        return self.beta.shape[2]

    @property
    def p(self) -> int:
        return self.omega.shape[1]

    def level_index(self, x) -> int:
        x = np.asarray(x, dtype=np.float64)
        for lv in range(self.levels.shape[0]):
            if np.allclose(self.levels[lv], x, rtol=0, atol=1e-12):
                return lv
        raise KeyError(f"covariate level {x} not recorded")


def rho_at(draws: PosteriorDraws, x) -> np.ndarray:
    """Partial-correlation draws (L x E) at an arbitrary covariate level."""
    x = np.asarray(x, dtype=np.float64)
    pairs = edge_pairs(draws.p)
    omega_off = np.einsum("q,lqe->le", x, draws.beta)
    denom = np.sqrt(draws.omega[:, pairs[:, 0]] * draws.omega[:, pairs[:, 1]])
    return -omega_off / denom


@dataclass(frozen=True)
class GraphEstimate:
    """Selected edge set at one covariate level with PPIs and signed strengths."""

    level: np.ndarray
    selected: frozenset          # canonical edge indices
    ppi: np.ndarray
    rho_mean: np.ndarray
    kappa: float
    alpha: float
    fdr_threshold: float

    @property
    def selected_mask(self) -> np.ndarray:
        mask = np.zeros(self.ppi.shape[0], dtype=bool)
        mask[list(self.selected)] = True
        return mask


def compute_ppi(draws: PosteriorDraws, level: int, kappa: float) -> np.ndarray:
    """Fraction of draws with |rho| > kappa, per edge, at a recorded level."""
    if draws.n_draws < 1:
        raise ValueError("no draws")
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    return (np.abs(draws.rho[:, level, :]) > kappa).mean(axis=0)


def fdr_select(ppi: np.ndarray, alpha: float) -> tuple[frozenset, float]:
    """Bayesian FDR edge selection at expected false-discovery level alpha.

    Sorts the local FDR estimates q = 1 - PPI ascending, finds the largest
    prefix whose mean is strictly below alpha, sets the threshold phi to the
    last prefix member, and selects edges with q strictly below phi.  If no
    prefix qualifies the selection is empty with phi = 0.  Degenerate tie:
    when phi lands on 0 with some q exactly 0, the q = 0 edges (PPI = 1) are
    selected rather than dropped by the strict inequality.
    """
    ppi = np.asarray(ppi, dtype=np.float64)
    if ppi.ndim != 1 or np.any(ppi < 0) or np.any(ppi > 1):
        raise ValueError("ppi must be a vector in [0, 1]")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    q = 1.0 - ppi
    order = np.sort(q)
    prefix_means = np.cumsum(order) / np.arange(1, q.size + 1)
    qualifying = np.nonzero(prefix_means < alpha)[0]
    if qualifying.size == 0:
        return frozenset(), 0.0
    phi = float(order[qualifying[-1]])
    selected = np.nonzero(q < phi)[0]
    if phi == 0.0 and np.any(q == 0.0):
        selected = np.nonzero(q == 0.0)[0]
    return frozenset(int(k) for k in selected), phi


def predict_graph(draws: PosteriorDraws, level: int, kappa: float,
                  alpha: float) -> GraphEstimate:
    """PPI computation + FDR selection + posterior-mean strengths at a level."""
    ppi = compute_ppi(draws, level, kappa)
    selected, phi = fdr_select(ppi, alpha)
    rho_mean = draws.rho[:, level, :].mean(axis=0)
    return GraphEstimate(
        level=draws.levels[level].copy(),
        selected=selected,
        ppi=ppi,
        rho_mean=rho_mean,
        kappa=float(kappa),
        alpha=float(alpha),
        fdr_threshold=phi,
    )


@dataclass(frozen=True)
class PdAuditReport:
    grid: np.ndarray
    pd_flags: np.ndarray               # per-level, before thresholding
    fraction_pd: float
    pd_flags_thresholded: np.ndarray | None = None
    fraction_pd_thresholded: float | None = None


def _is_pd(mat: np.ndarray) -> bool:
    # strict: a clean symmetric factorization with no perturbation
    try:
        np.linalg.cholesky(mat)
        return True
    except np.linalg.LinAlgError:
        return False


def pd_audit(coeffs: EdgeCoefficients, diag: DiagPrecision, grid,
             draws: PosteriorDraws | None = None, kappa: float = 0.1,
             alpha: float = 0.1) -> PdAuditReport:
    """Positive-definiteness check of the predicted precision matrix over a
    grid of covariate levels.

    When ``draws`` is given, a second pass zeroes the off-diagonals not
    selected at each level (PPI/FDR rule at kappa, alpha) while keeping the
    diagonal, and reports the thresholded PD fraction as well.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim == 1:
        grid = grid[:, None]
    if grid.shape[0] == 0:
        raise ValueError("grid must be non-empty")
    pairs = edge_pairs(diag.p)
    flags = np.zeros(grid.shape[0], dtype=bool)
    flags_thr = np.zeros(grid.shape[0], dtype=bool) if draws is not None else None
    for g in range(grid.shape[0]):
        x = grid[g]
        omega = predict_precision(coeffs, diag, x)
        flags[g] = _is_pd(omega)
        if draws is not None:
            rho = rho_at(draws, x)
            ppi = (np.abs(rho) > kappa).mean(axis=0)
            selected, _ = fdr_select(ppi, alpha)
            keep = np.zeros(pairs.shape[0], dtype=bool)
            keep[list(selected)] = True
            omega_thr = omega.copy()
            off = ~keep
            omega_thr[pairs[off, 0], pairs[off, 1]] = 0.0
            omega_thr[pairs[off, 1], pairs[off, 0]] = 0.0
            flags_thr[g] = _is_pd(omega_thr)
    return PdAuditReport(
        grid=grid,
        pd_flags=flags,
        fraction_pd=float(flags.mean()),
        pd_flags_thresholded=flags_thr,
        fraction_pd_thresholded=None if flags_thr is None else float(flags_thr.mean()),
    )


# ---------------------------------------------------------------------------
# Geweke diagnostic
# ---------------------------------------------------------------------------


def _long_run_variance(x: np.ndarray) -> float:
    """Bartlett-windowed estimate of the spectral density at frequency zero."""
    n = x.shape[0]
    xc = x - x.mean()
    max_lag = int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))
    max_lag = min(max_lag, n - 1)
    gamma0 = float(xc @ xc) / n
    s = gamma0
    for k in range(1, max_lag + 1):
        cov = float(xc[k:] @ xc[:-k]) / n
        s += 2.0 * (1.0 - k / (max_lag + 1.0)) * cov
    return max(s, 0.0)


def geweke_diagnostic(trace: np.ndarray, first_fraction: float = 0.1,
                      last_fraction: float = 0.5) -> tuple[float, float]:
    """Two-window mean comparison with spectral variance estimates.

    Returns (z, two-sided p).  Raises on traces too short or (numerically)
    constant, where the variance is undefined.
    """
    trace = np.asarray(trace, dtype=np.float64).ravel()
    n = trace.shape[0]
    if n < 100:
        raise ValueError("trace must have length >= 100")
    if not 0 < first_fraction < 1 or not 0 < last_fraction < 1:
        raise ValueError("window fractions must lie in (0, 1)")
    if first_fraction + last_fraction > 1:
        raise ValueError("windows overlap")
    n_a = int(n * first_fraction)
    n_b = int(n * last_fraction)
    a = trace[:n_a]
    b = trace[n - n_b:]
    var = _long_run_variance(a) / n_a + _long_run_variance(b) / n_b
    if var <= 0 or not np.isfinite(var):
        raise ValueError("degenerate trace: variance undefined")
    z = (a.mean() - b.mean()) / math.sqrt(var)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return float(z), float(p)
