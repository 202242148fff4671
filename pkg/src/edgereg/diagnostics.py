"""Chain-health reporting: per-parameter trace summaries with Geweke
stationarity checks and effective-sample-size estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .inference import geweke_diagnostic

__all__ = ["TraceReport", "effective_sample_size", "batch_geweke", "histogram_bins"]


@dataclass(frozen=True)
class TraceReport:
    parameter: str
    mean: float
    sd: float
    geweke_z: float | None
    geweke_p: float | None
    ess: float | None


def effective_sample_size(trace: np.ndarray) -> float:
    """ESS via the initial-positive-sequence truncation of the
    autocorrelation sum (pairs of consecutive autocorrelations are summed
    until a pair goes negative)."""
    x = np.asarray(trace, dtype=np.float64).ravel()
    n = x.shape[0]
    if n < 4:
        return float(n)
    xc = x - x.mean()
    var = float(xc @ xc) / n
    if var <= 0:
        return float("nan")
    acf_sum = 0.0
    k = 1
    while k + 1 < n:
        rho_a = float(xc[k:] @ xc[:-k]) / (n * var)
        rho_b = float(xc[k + 1:] @ xc[:-(k + 1)]) / (n * var)
        pair = rho_a + rho_b
        if pair < 0:
            break
        acf_sum += pair
        k += 2
    return n / (1.0 + 2.0 * acf_sum)


def batch_geweke(traces: dict, first_fraction: float = 0.1,
                 last_fraction: float = 0.5) -> list[TraceReport]:
    """Apply the Geweke diagnostic to every named trace.

    Constant (or too-short) traces are reported with null diagnostics, not
    dropped.  Reports come back sorted by parameter id.
    """
    reports = []
    for name in sorted(traces):
        x = np.asarray(traces[name], dtype=np.float64).ravel()
        mean = float(x.mean()) if x.size else float("nan")
        sd = float(x.std(ddof=1)) if x.size > 1 else float("nan")
        try:
            z, p = geweke_diagnostic(x, first_fraction, last_fraction)
            ess = effective_sample_size(x)
        except ValueError:
            z = p = ess = None
        reports.append(TraceReport(parameter=name, mean=mean, sd=sd,
                                   geweke_z=z, geweke_p=p, ess=ess))
    return reports


def histogram_bins(reports, n_bins: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Counts of Geweke p-values over equal bins of [0, 1] (null p-values
    are excluded from the histogram but remain in the reports)."""
    ps = np.array([r.geweke_p for r in reports if r.geweke_p is not None])
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    counts, _ = np.histogram(ps, bins=edges)
    return counts, edges
