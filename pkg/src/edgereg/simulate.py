"""Ground-truth precision construction and synthetic mixed-sample generation.

Two sparse-precision designs are provided.  Design 1 places the two
component graphs on disjoint off-diagonal bands with weak uniform
magnitudes.  Design 2 starts both components from a fixed banded matrix,
rewires one of them (remove/add random edges) and repairs positive
definiteness by row-sum normalization, giving partially overlapping graphs
with weak signal.  Observed samples mix component expressions on the raw
(anti-logged) scale according to a purity weight in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Dataset, edge_pairs, standardize_columns

__all__ = [
    "GroundTruth",
    "build_sim1",
    "build_sim2",
    "mix_expressions",
    "purity_covariates",
    "generate_dataset",
    "encode_groups",
    "derive_seeds",
]

_PD_RETRIES = 100
_OVERLAP_RETRIES = 10_000


@dataclass(frozen=True)
class GroundTruth:
    """Component precision matrices (both symmetric positive definite)."""

    omega_n: np.ndarray  # normal component
    omega_t: np.ndarray  # tumor component

    def __post_init__(self):
        for name in ("omega_n", "omega_t"):
            m = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be square")
            if not np.array_equal(m, m.T):
                raise ValueError(f"{name} must be symmetric")
            if not _is_pd(m):
                raise ValueError(f"{name} must be positive definite")
            object.__setattr__(self, name, m)
        if self.omega_n.shape != self.omega_t.shape:
            raise ValueError("component matrices must share shape")

    @property
    def p(self) -> int:
        return self.omega_n.shape[0]

    def edge_set(self, which: str) -> frozenset:
        """Canonical edge indices with nonzero off-diagonal in one component."""
        m = {"normal": self.omega_n, "tumor": self.omega_t}[which]
        p = self.p
        pairs = edge_pairs(p)
        nz = m[pairs[:, 0], pairs[:, 1]] != 0.0
        return frozenset(int(e) for e in np.nonzero(nz)[0])


def _is_pd(m: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(m)
        return True
    except np.linalg.LinAlgError:
        return False


def _band_magnitudes(rng: np.random.Generator, size: int) -> np.ndarray:
    # uniform over [-0.5,-0.3] U [0.3,0.5]: magnitude then random sign
    mag = rng.uniform(0.3, 0.5, size=size)
    sign = rng.integers(0, 2, size=size) * 2 - 1
    return mag * sign


def build_sim1(rng: np.random.Generator, p: int = 20) -> GroundTruth:
    """Disjoint-band design: normal edges on the first off-diagonal band,
    tumor edges on the second, unit diagonals, magnitudes in
    [-0.5,-0.3] U [0.3,0.5].  Regenerates magnitudes on a PD failure."""
    if p < 4:
        raise ValueError("p must be >= 4")
    for _ in range(_PD_RETRIES):
        omega_n = np.eye(p)
        vals = _band_magnitudes(rng, p - 1)
        omega_n[np.arange(p - 1), np.arange(1, p)] = vals
        omega_n[np.arange(1, p), np.arange(p - 1)] = vals
        omega_t = np.eye(p)
        vals = _band_magnitudes(rng, p - 2)
        omega_t[np.arange(p - 2), np.arange(2, p)] = vals
        omega_t[np.arange(2, p), np.arange(p - 2)] = vals
        if _is_pd(omega_n) and _is_pd(omega_t):
            return GroundTruth(omega_n=omega_n, omega_t=omega_t)
    raise RuntimeError(f"no positive definite draw in {_PD_RETRIES} attempts")


def _row_normalize_repair(m: np.ndarray) -> np.ndarray:
    """Divide each off-diagonal entry by 1.5x the absolute sum of the
    off-diagonals in its row, then symmetrize by averaging with the
    transpose.  Leaves the (unit) diagonal untouched; the result is strictly
    diagonally dominant, hence positive definite."""
    p = m.shape[0]
    out = m.copy()
    off = out - np.diag(np.diag(out))
    row_sums = np.abs(off).sum(axis=1)
    scale = 1.5 * row_sums
    with np.errstate(invalid="ignore", divide="ignore"):
        normalized = np.where(scale[:, None] > 0, off / scale[:, None], off)
    sym = (normalized + normalized.T) / 2.0
    np.fill_diagonal(sym, np.diag(m))
    return sym


def build_sim2(rng: np.random.Generator, p: int = 20,
               n_rewire: int = 30) -> GroundTruth:
    """Overlapping design: tumor component fixed banded (1 on the diagonal,
    0.5 and 0.4 on the first two bands); normal component obtained by
    removing ``n_rewire`` tumor edges, adding ``n_rewire`` new edges with
    magnitudes in [-0.6,-0.4] U [0.4,0.6], then applying the row-sum repair.
    At p = 20 the retained-edge overlap is exactly 7."""
    omega_t = np.eye(p)
    omega_t[np.arange(p - 1), np.arange(1, p)] = 0.5
    omega_t[np.arange(1, p), np.arange(p - 1)] = 0.5
    omega_t[np.arange(p - 2), np.arange(2, p)] = 0.4
    omega_t[np.arange(2, p), np.arange(p - 2)] = 0.4
    if not _is_pd(omega_t):
        raise RuntimeError("banded tumor component not positive definite")

    pairs = edge_pairs(p)
    nz = omega_t[pairs[:, 0], pairs[:, 1]] != 0.0
    present = np.nonzero(nz)[0]
    absent = np.nonzero(~nz)[0]
    if len(present) < n_rewire or len(absent) < n_rewire:
        raise ValueError("not enough edges to rewire")
    target_overlap = len(present) - n_rewire
    for _ in range(_OVERLAP_RETRIES):
        removed = rng.choice(present, size=n_rewire, replace=False)
        added = rng.choice(absent, size=n_rewire, replace=False)
        raw = omega_t.copy()
        for e in removed:
            i, j = pairs[e]
            raw[i, j] = raw[j, i] = 0.0
        mags = rng.uniform(0.4, 0.6, size=n_rewire) * (rng.integers(0, 2, size=n_rewire) * 2 - 1)
        for e, v in zip(added, mags):
            i, j = pairs[e]
            raw[i, j] = raw[j, i] = v
        omega_n = _row_normalize_repair(raw)
        overlap = len(frozenset(np.nonzero(omega_n[pairs[:, 0], pairs[:, 1]])[0])
                      & frozenset(present.tolist()))
        if overlap == target_overlap and _is_pd(omega_n):
            return GroundTruth(omega_n=omega_n, omega_t=omega_t)
    raise RuntimeError("could not satisfy the overlap constraint")


def mix_expressions(n_expr: np.ndarray, t_expr: np.ndarray, pi: float) -> np.ndarray:
    """Mix two log2-scale expression vectors on the raw scale:
    log2((1-pi) 2^n + pi 2^t), elementwise.  Exact at the endpoints."""
    if not 0.0 <= pi <= 1.0:
        raise ValueError("pi must lie in [0, 1]")
    n_expr = np.asarray(n_expr, dtype=np.float64)
    t_expr = np.asarray(t_expr, dtype=np.float64)
    if pi == 0.0:
        return n_expr.copy()
    if pi == 1.0:
        return t_expr.copy()
    return np.logaddexp2(n_expr + np.log2(1.0 - pi), t_expr + np.log2(pi))


def purity_covariates(pi) -> np.ndarray:
    """Purity encoding x = (1 - pi, pi): the two columns weight the normal
    and tumor components, so the convex path between them is covered."""
    pi = np.atleast_1d(np.asarray(pi, dtype=np.float64))
    if np.any(pi < 0) or np.any(pi > 1):
        raise ValueError("pi must lie in [0, 1]")
    return np.column_stack([1.0 - pi, pi])


def generate_dataset(truth: GroundTruth, n_reference: int, n_mixed: int,
                     rng: np.random.Generator,
                     node_names=None) -> tuple[Dataset, np.ndarray]:
    """Reference samples (purity 0) plus mixed samples with purities on an
    arithmetic grid from 0.01 to 0.99, standardized over all samples.

    Returns (dataset, purity vector) with covariates x = (1-pi, pi).
    """
    if n_reference < 1 or n_mixed < 1:
        raise ValueError("counts must be >= 1")
    p = truth.p
    chol_n = np.linalg.cholesky(np.linalg.inv(truth.omega_n))
    chol_t = np.linalg.cholesky(np.linalg.inv(truth.omega_t))

    reference = rng.standard_normal((n_reference, p)) @ chol_n.T
    pis = np.linspace(0.01, 0.99, n_mixed)
    normals = rng.standard_normal((n_mixed, p)) @ chol_n.T
    tumors = rng.standard_normal((n_mixed, p)) @ chol_t.T
    mixed = np.empty((n_mixed, p))
    for k in range(n_mixed):
        mixed[k] = mix_expressions(normals[k], tumors[k], pis[k])

    y_raw = np.vstack([reference, mixed])
    pi_all = np.concatenate([np.zeros(n_reference), pis])
    y, means, sds = standardize_columns(y_raw)
    if node_names is None:
        node_names = tuple(f"node{k}" for k in range(p))
    data = Dataset(
        y=y,
        x=purity_covariates(pi_all),
        node_names=tuple(node_names),
        covariate_names=("normal_weight", "tumor_weight"),
        standardized=True,
        y_means=means,
        y_sds=sds,
    )
    return data, pi_all


_GROUP_ROWS = {"normal": (1.0, 0.0, 1.0), "tumor": (0.0, 1.0, 1.0)}


def encode_groups(labels) -> np.ndarray:
    """Two-group membership encoding with a shared-strength interaction
    column: normal -> (1, 0, 1), tumor -> (0, 1, 1)."""
    rows = []
    for lab in labels:
        try:
            rows.append(_GROUP_ROWS[lab])
        except KeyError:
            raise ValueError(f"unknown group label {lab!r}") from None
    return np.asarray(rows, dtype=np.float64)


def derive_seeds(seed: int, n: int) -> list[int]:
    """Independent child seeds for replicate datasets/chains."""
    ss = np.random.SeedSequence(seed)
    return [int(child.generate_state(1)[0]) for child in ss.spawn(n)]


def sim_truth_edges(truth: GroundTruth) -> dict:
    """Convenience: canonical edge-index sets for both components."""
    return {"normal": truth.edge_set("normal"), "tumor": truth.edge_set("tumor")}
