"""Core domain types for covariate-dependent Gaussian graphical models.

Edge strengths (off-diagonal precision elements) are linear functions of
subject-level covariates; diagonal precisions are constant.  This module
holds the value types shared by the sampler, the inference layer, and the
simulation harness, plus the deterministic maps between coefficients,
precision elements, and partial correlations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dataset",
    "EdgeId",
    "EdgeCoefficients",
    "DiagPrecision",
    "LocalScales",
    "ShrinkageHyper",
    "n_edges",
    "edge_index",
    "edge_from_index",
    "edge_pairs",
    "cpf_evaluate",
    "partial_correlation",
    "predict_precision",
    "standardize_columns",
]


# ---------------------------------------------------------------------------
# Canonical edge indexing
#
# Edges of an undirected p-node graph are stored in lexicographic (i, j),
# i < j order: (0,1), (0,2), ..., (0,p-1), (1,2), ..., (p-2,p-1).
# Storing one column per unordered pair structurally enforces the symmetry
# of the off-diagonal precision coefficients.
# ---------------------------------------------------------------------------


def n_edges(p: int) -> int:
    """Number of unordered node pairs for a p-node graph."""
    return p * (p - 1) // 2


def edge_index(i: int, j: int, p: int) -> int:
    """Flat column index of edge (i, j) under canonical ordering.

    Accepts either orientation; (j, i) maps to the same index.
    """
    if i == j:
        raise ValueError(f"no self edge ({i},{i})")
    if i > j:
        i, j = j, i
    if not (0 <= i < j < p):
        raise ValueError(f"edge ({i},{j}) out of range for p={p}")
    return i * p - i * (i + 1) // 2 + (j - i - 1)


def edge_from_index(e: int, p: int) -> "EdgeId":
    """Inverse of :func:`edge_index`."""
    if not 0 <= e < n_edges(p):
        raise ValueError(f"edge index {e} out of range for p={p}")
    i = 0
    offset = 0
    while offset + (p - i - 1) <= e:
        offset += p - i - 1
        i += 1
    return EdgeId(i, e - offset + i + 1)


def edge_pairs(p: int) -> np.ndarray:
    """(E, 2) int array of all canonical (i, j) pairs in storage order."""
    iu = np.triu_indices(p, k=1)
    return np.column_stack(iu).astype(np.int64)


@dataclass(frozen=True)
class EdgeId:
    """Canonical identifier of an undirected edge: 0 <= i < j < p."""

    i: int
    j: int

    def __post_init__(self):
        if self.i > self.j:
            lo, hi = self.j, self.i
            object.__setattr__(self, "i", lo)
            object.__setattr__(self, "j", hi)
        if self.i == self.j or self.i < 0:
            raise ValueError(f"invalid edge ({self.i},{self.j})")

    def index(self, p: int) -> int:
        return edge_index(self.i, self.j, p)


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Observations (N x p) together with subject-level covariates (N x q).

    When ``standardized`` is true every column of ``y`` has mean ~0 and
    sample standard deviation ~1; the original location/scale is retained
    in ``y_means``/``y_sds`` so estimates can be mapped back.
    """

    y: np.ndarray
    x: np.ndarray
    node_names: tuple[str, ...]
    covariate_names: tuple[str, ...]
    standardized: bool = False
    y_means: np.ndarray | None = None
    y_sds: np.ndarray | None = None

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        if y.ndim != 2 or x.ndim != 2:
            raise ValueError("y and x must be 2-D")
        n, p = y.shape
        if x.shape[0] != n:
            raise ValueError(f"y has {n} rows but x has {x.shape[0]}")
        q = x.shape[1]
        if n < 2 or p < 2 or q < 1:
            raise ValueError(f"need N>=2, p>=2, q>=1; got N={n}, p={p}, q={q}")
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
            raise ValueError("non-finite entries in data")
        if len(self.node_names) != p:
            raise ValueError("node_names length mismatch")
        if len(self.covariate_names) != q:
            raise ValueError("covariate_names length mismatch")
        if self.standardized:
            mu = y.mean(axis=0)
            sd = y.std(axis=0, ddof=1)
            if np.max(np.abs(mu)) > 1e-8 or np.max(np.abs(sd - 1.0)) > 1e-8:
                raise ValueError("standardized=True but columns are not standardized")
        y.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "node_names", tuple(self.node_names))
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))

    @property
    def n_samples(self) -> int:
        return self.y.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.y.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.x.shape[1]

    @property
    def n_edges(self) -> int:
        return n_edges(self.n_nodes)


def standardize_columns(y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center/scale each column to mean 0, sample sd 1.  Returns (z, means, sds)."""
    y = np.asarray(y, dtype=np.float64)
    mu = y.mean(axis=0)
    sd = y.std(axis=0, ddof=1)
    if np.any(sd <= 0):
        raise ValueError("constant column cannot be standardized")
    return (y - mu) / sd, mu, sd


@dataclass(frozen=True)
class EdgeCoefficients:
    """Per-edge regression coefficients, q covariates x E canonical edges."""

    beta: np.ndarray
    p: int

    def __post_init__(self):
        beta = np.ascontiguousarray(self.beta, dtype=np.float64)
        if beta.ndim != 2 or beta.shape[1] != n_edges(self.p):
            raise ValueError(
                f"beta must be q x {n_edges(self.p)} for p={self.p}, got {beta.shape}"
            )
        if not np.all(np.isfinite(beta)):
            raise ValueError("non-finite coefficients")
        object.__setattr__(self, "beta", beta)

    @property
    def q(self) -> int:
        return self.beta.shape[0]

    def column(self, edge: EdgeId) -> np.ndarray:
        return self.beta[:, edge.index(self.p)]


@dataclass(frozen=True)
class DiagPrecision:
    """Constant diagonal precision entries, strictly positive."""

    omega_diag: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.omega_diag, dtype=np.float64)
        if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("omega_diag must be 1-D, finite and strictly positive")
        object.__setattr__(self, "omega_diag", w)

    @property
    def p(self) -> int:
        return self.omega_diag.shape[0]


@dataclass(frozen=True)
class LocalScales:
    """Per-coefficient prior variances (q x E), strictly positive."""

    psi: np.ndarray

    def __post_init__(self):
        psi = np.ascontiguousarray(self.psi, dtype=np.float64)
        if psi.ndim != 2 or not np.all(np.isfinite(psi)) or np.any(psi <= 0):
            raise ValueError("psi must be 2-D, finite and strictly positive")
        object.__setattr__(self, "psi", psi)


@dataclass(frozen=True)
class ShrinkageHyper:
    """Shrinkage hyperparameters: shape lambda_s per covariate, common gamma^2,
    scale targets m_s, and random-walk step sizes sigma_lambda."""

    lam: np.ndarray
    gamma_sq: float
    m_s: np.ndarray
    sigma_lambda: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        lam = np.ascontiguousarray(self.lam, dtype=np.float64)
        m_s = np.ascontiguousarray(self.m_s, dtype=np.float64)
        sig = self.sigma_lambda
        sig = np.ones_like(lam) if sig is None else np.ascontiguousarray(sig, dtype=np.float64)
        for name, arr in (("lam", lam), ("m_s", m_s), ("sigma_lambda", sig)):
            if arr.ndim != 1 or not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ValueError(f"{name} must be finite and strictly positive")
        if not (lam.shape == m_s.shape == sig.shape):
            raise ValueError("hyperparameter vectors must share length q")
        if not (np.isfinite(self.gamma_sq) and self.gamma_sq > 0):
            raise ValueError("gamma_sq must be finite and strictly positive")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "m_s", m_s)
        object.__setattr__(self, "sigma_lambda", sig)
        object.__setattr__(self, "gamma_sq", float(self.gamma_sq))

    @property
    def q(self) -> int:
        return self.lam.shape[0]


# ---------------------------------------------------------------------------
# Deterministic maps
# ---------------------------------------------------------------------------


def cpf_evaluate(beta_edge: np.ndarray, x: np.ndarray) -> float:
    """Edge precision at covariate level x: sum_s beta_s * x_s."""
    beta_edge = np.asarray(beta_edge, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if beta_edge.shape != x.shape or beta_edge.ndim != 1:
        raise ValueError(f"shape mismatch: beta {beta_edge.shape} vs x {x.shape}")
    return float(beta_edge @ x)


def partial_correlation(omega_ij: float, omega_ii: float, omega_jj: float) -> float:
    """Partial correlation -omega_ij / sqrt(omega_ii * omega_jj)."""
    if omega_ii <= 0 or omega_jj <= 0:
        raise ValueError("diagonal precision entries must be strictly positive")
    return -omega_ij / np.sqrt(omega_ii * omega_jj)


def predict_precision(
    coeffs: EdgeCoefficients, diag: DiagPrecision, x: np.ndarray
) -> np.ndarray:
    """Assemble the p x p precision matrix at covariate level x.

    Off-diagonals come from the per-edge linear predictors, the diagonal
    from ``diag``.  The result is exactly symmetric by construction; it is
    not clamped to be positive definite.
    """
    p = diag.p
    if coeffs.p != p:
        raise ValueError("coefficients and diagonal disagree on p")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (coeffs.q,):
        raise ValueError(f"x must have length q={coeffs.q}")
    omega_off = x @ coeffs.beta  # (E,)
    out = np.zeros((p, p))
    iu = np.triu_indices(p, k=1)
    out[iu] = omega_off
    out[(iu[1], iu[0])] = omega_off
    out[np.diag_indices(p)] = diag.omega_diag
    return out
