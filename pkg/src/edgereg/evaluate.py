"""Structure-recovery metrics against ground truth: confusion rates, the
joint (kappa, alpha) ROC sweep, binned bivariate AUC, and univariate AUCs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .inference import PosteriorDraws, fdr_select

__all__ = [
    "RocPoint",
    "EvalReport",
    "confusion",
    "roc_sweep",
    "bauc",
    "auc_univariate",
    "best_univariate_aucs",
    "point_at_fpr",
    "DEFAULT_KAPPA_GRID",
    "DEFAULT_ALPHA_GRID",
]

DEFAULT_KAPPA_GRID = tuple(np.round(np.arange(0.0, 0.301, 0.02), 10))
DEFAULT_ALPHA_GRID = tuple(np.round(np.arange(0.01, 0.991, 0.01), 10))


@dataclass(frozen=True)
class RocPoint:
    graph: str
    kappa: float
    alpha: float
    fpr: float
    tpr: float


@dataclass
class EvalReport:
    graph_metrics: dict = field(default_factory=dict)  # graph -> dict of metrics
    roc_points: list = field(default_factory=list)

    def overall(self, key: str) -> float:
        vals = [m[key] for m in self.graph_metrics.values() if key in m]
        return float(np.mean(vals))


def confusion(selected, truth, universe) -> tuple[float, float]:
    """(TPR, FPR) of a selected edge set against a true edge set.

    TPR = |selected & truth| / |truth|; FPR counts selections among the
    non-edges of the universe.  An empty truth leaves TPR undefined.
    """
    selected = frozenset(selected)
    truth = frozenset(truth)
    universe = frozenset(universe)
    if not truth:
        raise ValueError("empty truth: TPR undefined")
    if not truth <= universe:
        raise ValueError("truth must be contained in the universe")
    if not selected <= universe:
        raise ValueError("selected must be contained in the universe")
    negatives = universe - truth
    tpr = len(selected & truth) / len(truth)
    fpr = len(selected - truth) / len(negatives) if negatives else 0.0
    return tpr, fpr


def roc_sweep(draws: PosteriorDraws, truth_edges: dict, level_for_graph: dict,
              kappa_grid=DEFAULT_KAPPA_GRID,
              alpha_grid=DEFAULT_ALPHA_GRID) -> list[RocPoint]:
    """One (fpr, tpr) per (kappa, alpha) cell per target graph.

    ``truth_edges`` maps graph name -> true canonical edge set;
    ``level_for_graph`` maps graph name -> recorded level index.
    """
    if len(kappa_grid) == 0 or len(alpha_grid) == 0:
        raise ValueError("grids must be non-empty")
    e = draws.n_edge
    universe = frozenset(range(e))
    points = []
    for graph, truth in truth_edges.items():
        lv = level_for_graph[graph]
        abs_rho = np.abs(draws.rho[:, lv, :])
        for kappa in kappa_grid:
            ppi = (abs_rho > kappa).mean(axis=0)
            for alpha in alpha_grid:
                selected, _ = fdr_select(ppi, alpha)
                tpr, fpr = confusion(selected, truth, universe)
                points.append(RocPoint(graph=graph, kappa=float(kappa),
                                       alpha=float(alpha), fpr=fpr, tpr=tpr))
    return points


def bauc(roc_points, n_bins: int = 100) -> float:
    """Bivariate AUC: bin the sweep by false-positive rate into equal-width
    bins, average the sensitivity within each occupied bin, and integrate
    the binned step curve by trapezoid over occupied bin centers.  Empty
    bins are skipped.  When the sweep does not reach a corner (the boundary
    bin is unoccupied) the curve is anchored at (0, 0) / (1, 1); when it
    does, the step extends flat to the boundary, so perfect separation
    scores exactly 1."""
    if len(roc_points) == 0:
        raise ValueError("need at least one point")
    fpr = np.array([pt.fpr for pt in roc_points])
    tpr = np.array([pt.tpr for pt in roc_points])
    bins = np.clip((fpr * n_bins).astype(int), 0, n_bins - 1)
    occupied = np.unique(bins)
    xs = [(b + 0.5) / n_bins for b in occupied]
    ys = [float(tpr[bins == b].mean()) for b in occupied]
    left = (0.0, 0.0) if occupied[0] > 0 else (0.0, ys[0])
    right = (1.0, 1.0) if occupied[-1] < n_bins - 1 else (1.0, ys[-1])
    xs = [left[0]] + xs + [right[0]]
    ys = [left[1]] + ys + [right[1]]
    return float(np.trapezoid(ys, xs))


def auc_univariate(fpr, tpr) -> float:
    """Trapezoidal AUC of a single-parameter sweep after monotonizing the
    curve (upper staircase: cumulative max of tpr in fpr order), anchored
    at (0, 0) and (1, 1)."""
    fpr = np.asarray(fpr, dtype=np.float64)
    tpr = np.asarray(tpr, dtype=np.float64)
    order = np.argsort(fpr, kind="stable")
    f = fpr[order]
    t = np.maximum.accumulate(tpr[order])
    f = np.concatenate([[0.0], f, [1.0]])
    t = np.concatenate([[0.0], t, [t[-1] if t.size else 1.0]])
    t[-1] = max(t[-1], 1.0)
    return float(np.trapezoid(t, f))


def best_univariate_aucs(roc_points, graph: str) -> tuple[float, float]:
    """(AUC1, AUC2) for one graph: the best AUC over the alpha sweep at a
    fixed kappa, and the best over the kappa sweep at a fixed alpha."""
    pts = [pt for pt in roc_points if pt.graph == graph]
    if not pts:
        raise ValueError(f"no points for graph {graph!r}")
    kappas = sorted({pt.kappa for pt in pts})
    alphas = sorted({pt.alpha for pt in pts})
    auc1 = max(
        auc_univariate([pt.fpr for pt in pts if pt.kappa == k],
                       [pt.tpr for pt in pts if pt.kappa == k])
        for k in kappas
    )
    auc2 = max(
        auc_univariate([pt.fpr for pt in pts if pt.alpha == a],
                       [pt.tpr for pt in pts if pt.alpha == a])
        for a in alphas
    )
    return auc1, auc2


def point_at_fpr(roc_points, graph: str, target_fpr: float = 0.1) -> RocPoint:
    """The sweep point whose FPR is closest to the target (ties: higher TPR)."""
    pts = [pt for pt in roc_points if pt.graph == graph]
    if not pts:
        raise ValueError(f"no points for graph {graph!r}")
    return min(pts, key=lambda pt: (abs(pt.fpr - target_fpr), -pt.tpr))
