"""Metropolis-within-Gibbs sampler for covariate-dependent edge regression.

Per iteration: (a) Gibbs sweep over all edge coefficient blocks in canonical
order, then all diagonal precisions, then the full local-scale block;
(b) a multiplicative random-walk MH step for each shrinkage shape lambda_s,
then a conjugate Gamma update for gamma^-2.  After burn-in, thinned partial
correlations are recorded at the requested covariate levels.

The edge sweep is sequential (each edge's cross-terms read the other edges'
current coefficients); the diagonal and local-scale blocks are conditionally
independent given the coefficients.  One chain owns one random stream, so a
fixed seed reproduces the draws bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .distributions import NumericalError, sample_gig_block, _gig_draw
from .inference import PosteriorDraws
from .model import (
    Dataset,
    DiagPrecision,
    EdgeCoefficients,
    EdgeId,
    LocalScales,
    ShrinkageHyper,
    edge_pairs,
    n_edges,
)

__all__ = [
    "ChainConfig",
    "SamplerState",
    "ChainResult",
    "ChainAbort",
    "initial_state",
    "compute_m_s",
    "purity_selectors",
    "compute_s1_s2",
    "cross_terms",
    "update_beta_edge",
    "update_omega_diag",
    "update_psi",
    "update_lambda_mh",
    "update_gamma",
    "lambda_log_conditional",
    "run_chain",
]


@dataclass(frozen=True)
class ChainConfig:
    """Run-length, seeding, and recording options for one chain."""

    total_iterations: int = 20_000
    burn_in: int = 10_000
    thin: int = 10
    seed: int = 0
    target_covariate_levels: tuple = ()
    store_subject_level: bool = False
    adapt_sigma_lambda: bool = True
    mh_target_accept: float = 0.25
    sigma_lambda_init: float = 1.0

    def __post_init__(self):
        if not (0 <= self.burn_in < self.total_iterations):
            raise ValueError("need 0 <= burn_in < total_iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if len(self.target_covariate_levels) == 0 and not self.store_subject_level:
            raise ValueError("need at least one target level or store_subject_level")

    @property
    def n_stored(self) -> int:
        return (self.total_iterations - self.burn_in) // self.thin


class ChainAbort(RuntimeError):
    """Numerical failure inside a chain; carries a state snapshot."""

    def __init__(self, message, state=None, iteration=None):
        super().__init__(message)
        self.state = state
        self.iteration = iteration


@dataclass
class SamplerState:
    """Mutable state of one chain (raw arrays; value-type views as properties)."""

    p: int
    beta: np.ndarray        # q x E edge coefficients
    omega_diag: np.ndarray  # p diagonal precisions
    psi: np.ndarray         # q x E local scales
    lam: np.ndarray         # q shrinkage shapes
    gamma_sq: float         # common squared scale
    m_s: np.ndarray         # q scale targets
    sigma_lambda: np.ndarray
    iteration: int = 0
    mh_accept: np.ndarray = field(default=None)  # type: ignore[assignment]
    mh_steps: np.ndarray = field(default=None)   # type: ignore[assignment]

    def __post_init__(self):
        q = self.beta.shape[0]
        if self.mh_accept is None:
            self.mh_accept = np.zeros(q, dtype=np.int64)
        if self.mh_steps is None:
            self.mh_steps = np.zeros(q, dtype=np.int64)

    @property
    def coeffs(self) -> EdgeCoefficients:
        return EdgeCoefficients(self.beta.copy(), self.p)

    @property
    def diag(self) -> DiagPrecision:
        return DiagPrecision(self.omega_diag.copy())

    @property
    def scales(self) -> LocalScales:
        return LocalScales(self.psi.copy())

    @property
    def hyper(self) -> ShrinkageHyper:
        return ShrinkageHyper(self.lam.copy(), self.gamma_sq, self.m_s.copy(),
                              self.sigma_lambda.copy())

    def snapshot(self) -> dict:
        return {
            "beta": self.beta.copy(),
            "omega_diag": self.omega_diag.copy(),
            "psi": self.psi.copy(),
            "lam": self.lam.copy(),
            "gamma_sq": self.gamma_sq,
            "m_s": self.m_s.copy(),
            "sigma_lambda": self.sigma_lambda.copy(),
            "iteration": self.iteration,
        }


@dataclass
class ChainResult:
    draws: PosteriorDraws
    state: SamplerState
    diagnostics: list


# ---------------------------------------------------------------------------
# Hyperparameter initialization
# ---------------------------------------------------------------------------


def compute_m_s(data: Dataset, selectors) -> np.ndarray:
    """Scale target per covariate: mean square of the off-diagonal entries of
    the inverse sample covariance of that covariate's subsample.

    ``selectors`` holds one boolean mask (or index array) per covariate.
    Subsamples shorter than p+1 rows, or with singular covariance, fall back
    to a diagonally loaded inverse (+1e-3 on the covariance diagonal).
    """
    p = data.n_nodes
    e = n_edges(p)
    if len(selectors) != data.n_covariates:
        raise ValueError("need one selector per covariate")
    iu = np.triu_indices(p, k=1)
    out = np.empty(data.n_covariates)
    for s, sel in enumerate(selectors):
        ys = data.y[sel]
        n_s = ys.shape[0]
        if n_s < 2:
            raise ValueError(f"covariate {s}: subsample too small (n={n_s})")
        yc = ys - ys.mean(axis=0)
        cov = yc.T @ yc / n_s
        load = n_s < p + 1
        prec = None
        if not load:
            try:
                prec = np.linalg.inv(cov)
            except np.linalg.LinAlgError:
                load = True
        if load:
            try:
                prec = np.linalg.inv(cov + 1e-3 * np.eye(p))
            except np.linalg.LinAlgError as err:
                raise NumericalError(f"covariate {s}: singular covariance") from err
        out[s] = float(np.sum(prec[iu] ** 2)) / e
    return out


def purity_selectors(data: Dataset) -> list:
    """Subsample masks for the purity encoding x = (1-pi, pi): the first
    covariate is anchored by samples with pi < 0.5, the second by pi >= 0.5."""
    if data.n_covariates != 2:
        raise ValueError("purity encoding has q = 2")
    pi = data.x[:, 1]
    return [pi < 0.5, pi >= 0.5]


def initial_state(data: Dataset, m_s: np.ndarray | None = None,
                  sigma_lambda: float = 1.0) -> SamplerState:
    """Neutral start on standardized data: zero coefficients, unit diagonal
    precisions and local scales, lambda_s = 1, gamma^2 matched to the scale
    targets so that lambda * gamma^2 equals m_s on average."""
    p, q, e = data.n_nodes, data.n_covariates, data.n_edges
    if m_s is None:
        m_s = compute_m_s(data, [np.ones(data.n_samples, bool)] * q)
    m_s = np.asarray(m_s, dtype=np.float64)
    if m_s.shape != (q,) or np.any(m_s <= 0):
        raise ValueError("m_s must be a positive vector of length q")
    lam = np.ones(q)
    gamma_sq = float(m_s.mean() / lam.mean())
    return SamplerState(
        p=p,
        beta=np.zeros((q, e)),
        omega_diag=np.ones(p),
        psi=np.ones((q, e)),
        lam=lam,
        gamma_sq=gamma_sq,
        m_s=m_s,
        sigma_lambda=np.full(q, float(sigma_lambda)),
    )


# ---------------------------------------------------------------------------
# Kernels
#
# The sweep kernel below is the single implementation of the coefficient
# update; the per-edge wrapper calls it with a one-element edge list.  W and
# C are caches of the per-sample edge predictors and node cross-terms:
#   W[n, e]  = x_n . beta[:, e]
#   C[n, i]  = sum_{k != i} W[n, edge(i,k)] * y[n, k]
# maintained incrementally as coefficients change.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _beta_sweep(y, x, omega_diag, psi, beta, W, C, pairs, edge_sel, rng):
    n, _ = y.shape
    q = x.shape[1]
    A = np.empty((q, q))
    L = np.empty((q, q))
    rhs = np.empty(q)
    work = np.empty(q)
    bnew = np.empty(q)
    for idx in range(edge_sel.size):
        e = edge_sel[idx]
        i = pairs[e, 0]
        j = pairs[e, 1]
        oi = omega_diag[i]
        oj = omega_diag[j]
        for r in range(q):
            rhs[r] = 0.0
            for c in range(q):
                A[r, c] = 0.0
        for nn in range(n):
            yi = y[nn, i]
            yj = y[nn, j]
            w_e = W[nn, e]
            ai = C[nn, i] - w_e * yj
            aj = C[nn, j] - w_e * yi
            s1 = yj * yj / oi + yi * yi / oj
            s2 = 2.0 * yi * yj + ai * yj / oi + aj * yi / oj
            for r in range(q):
                xr = x[nn, r]
                rhs[r] += xr * s2
                for c in range(r + 1):
                    A[r, c] += s1 * xr * x[nn, c]
        for r in range(q):
            A[r, r] += 1.0 / psi[r, e]
        # Cholesky A = L L^T (A is SPD: PSD Gram plus positive diagonal)
        for c in range(q):
            acc = A[c, c]
            for k in range(c):
                acc -= L[c, k] * L[c, k]
            if acc <= 0.0:
                raise ValueError("coefficient precision matrix not positive definite")
            L[c, c] = math.sqrt(acc)
            for r in range(c + 1, q):
                acc = A[r, c]
                for k in range(c):
                    acc -= L[r, k] * L[c, k]
                L[r, c] = acc / L[c, c]
        # mean = -A^{-1} rhs via forward/back substitution
        for r in range(q):
            acc = -rhs[r]
            for k in range(r):
                acc -= L[r, k] * work[k]
            work[r] = acc / L[r, r]
        for r in range(q - 1, -1, -1):
            acc = work[r]
            for k in range(r + 1, q):
                acc -= L[k, r] * bnew[k]
            bnew[r] = acc / L[r, r]
        # draw: mean + L^{-T} z has covariance A^{-1}
        for r in range(q):
            work[r] = rng.standard_normal()
        for r in range(q - 1, -1, -1):
            acc = work[r]
            for k in range(r + 1, q):
                acc -= L[k, r] * work[k]
            work[r] = acc / L[r, r]
            bnew[r] += work[r]
        for nn in range(n):
            dw = 0.0
            for r in range(q):
                dw += x[nn, r] * (bnew[r] - beta[r, e])
            W[nn, e] += dw
            C[nn, i] += dw * y[nn, j]
            C[nn, j] += dw * y[nn, i]
        for r in range(q):
            beta[r, e] = bnew[r]


@njit(cache=True)
def _omega_sweep(y, C, omega_diag, nodes, rng):
    n = y.shape[0]
    half_n = n / 2.0
    for t in range(nodes.size):
        i = nodes[t]
        a = 0.0
        b = 0.0
        for nn in range(n):
            a += y[nn, i] * y[nn, i]
            b += C[nn, i] * C[nn, i]
        if a <= 0.0:
            raise ValueError("data column identically zero")
        omega_diag[i] = _gig_draw(half_n + 1.0, a, b, rng)


def cross_terms(beta: np.ndarray, x: np.ndarray, y: np.ndarray,
                pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Materialize the (W, C) caches from scratch (definitional form)."""
    W = x @ beta
    C = np.zeros_like(y)
    for e in range(pairs.shape[0]):
        i, j = pairs[e]
        C[:, i] += W[:, e] * y[:, j]
        C[:, j] += W[:, e] * y[:, i]
    return W, C


def _psi_gig_params(lam, gamma_sq, beta):
    m = np.broadcast_to((lam - 0.5)[:, None], beta.shape)
    a = np.full(beta.shape, 1.0 / gamma_sq)
    b = beta * beta
    return np.ascontiguousarray(m), a, b


def lambda_log_conditional(lam: float, gamma_sq: float, sum_log_psi: float,
                           n_edge: int) -> float:
    """Log of the unnormalized full conditional of one shrinkage shape:
    unit-rate exponential prior times the Gamma(lam, 1/(2 gamma^2)) likelihood
    over the n_edge local scales of that covariate."""
    if lam <= 0:
        return -math.inf
    return (
        -lam
        - n_edge * lam * math.log(2.0 * gamma_sq)
        - n_edge * math.lgamma(lam)
        + lam * sum_log_psi
    )


# ---------------------------------------------------------------------------
# Per-operation wrappers (unit-testable entry points over the same kernels)
# ---------------------------------------------------------------------------


def compute_s1_s2(state: SamplerState, data: Dataset, edge: EdgeId):
    """Per-sample weight and cross statistics for one edge's update, computed
    directly from the definitions (no incremental caches)."""
    p = state.p
    y, x = data.y, data.x
    pairs = edge_pairs(p)
    e = edge.index(p)
    i, j = edge.i, edge.j
    W, C = cross_terms(state.beta, x, y, pairs)
    oi, oj = state.omega_diag[i], state.omega_diag[j]
    ai = C[:, i] - W[:, e] * y[:, j]
    aj = C[:, j] - W[:, e] * y[:, i]
    s1 = y[:, j] ** 2 / oi + y[:, i] ** 2 / oj
    s2 = 2.0 * y[:, i] * y[:, j] + ai * y[:, j] / oi + aj * y[:, i] / oj
    return s1, s2


def update_beta_edge(state: SamplerState, data: Dataset, edge: EdgeId,
                     rng: np.random.Generator) -> np.ndarray:
    """Gibbs draw of one edge's coefficient column; writes into the state."""
    pairs = edge_pairs(state.p)
    W, C = cross_terms(state.beta, data.x, data.y, pairs)
    sel = np.array([edge.index(state.p)], dtype=np.int64)
    _beta_sweep(data.y, data.x, state.omega_diag, state.psi, state.beta,
                W, C, pairs, sel, rng)
    return state.beta[:, sel[0]].copy()


def update_omega_diag(state: SamplerState, data: Dataset, node: int,
                      rng: np.random.Generator) -> float:
    """Gibbs draw of one diagonal precision; writes into the state."""
    pairs = edge_pairs(state.p)
    _, C = cross_terms(state.beta, data.x, data.y, pairs)
    _omega_sweep(data.y, C, state.omega_diag, np.array([node], dtype=np.int64), rng)
    return float(state.omega_diag[node])


def update_psi(state: SamplerState, edge: EdgeId, s: int,
               rng: np.random.Generator) -> float:
    """Gibbs draw of one local scale; writes into the state."""
    e = edge.index(state.p)
    m, a, b = _psi_gig_params(state.lam, state.gamma_sq, state.beta)
    draw = sample_gig_block(m[s:s + 1, e:e + 1], a[s:s + 1, e:e + 1],
                            b[s:s + 1, e:e + 1], rng)
    state.psi[s, e] = draw[0, 0]
    return float(draw[0, 0])


def update_lambda_mh(state: SamplerState, s: int,
                     rng: np.random.Generator) -> bool:
    """Multiplicative random-walk MH step on lambda_s, in log space."""
    e = state.beta.shape[1]
    sum_log_psi = float(np.log(state.psi[s]).sum())
    lam = float(state.lam[s])
    lam_star = lam * math.exp(state.sigma_lambda[s] * rng.standard_normal())
    log_ratio = (
        lambda_log_conditional(lam_star, state.gamma_sq, sum_log_psi, e)
        - lambda_log_conditional(lam, state.gamma_sq, sum_log_psi, e)
        + math.log(lam_star)
        - math.log(lam)
    )
    u = rng.random()
    accept = log_ratio >= 0.0 or (u > 0.0 and math.log(u) < log_ratio)
    if accept:
        state.lam[s] = lam_star
    state.mh_steps[s] += 1
    state.mh_accept[s] += accept
    return accept


def update_gamma(state: SamplerState, rng: np.random.Generator) -> float:
    """Conjugate Gamma update of gamma^-2; stores and returns gamma^2.

    Shape 2 + E * sum(lambda); rate sum(m_s)/(2 sum(lambda)) plus half the
    total of all local scales (each unordered edge counted once).
    """
    e = state.beta.shape[1]
    lam_tot = float(state.lam.sum())
    shape = 2.0 + e * lam_tot
    rate = float(state.m_s.sum()) / (2.0 * lam_tot) + 0.5 * float(state.psi.sum())
    tau = rng.gamma(shape, 1.0 / rate)
    state.gamma_sq = 1.0 / tau
    return state.gamma_sq


# ---------------------------------------------------------------------------
# Full chain
# ---------------------------------------------------------------------------


def _check_state(state: SamplerState):
    if not np.all(np.isfinite(state.beta)):
        raise NumericalError("non-finite coefficients")
    if np.any(state.omega_diag <= 0) or np.any(state.psi <= 0):
        raise NumericalError("non-positive precision or scale")
    if state.gamma_sq <= 0 or np.any(state.lam <= 0):
        raise NumericalError("non-positive hyperparameter")


def run_chain(data: Dataset, config: ChainConfig,
              m_s: np.ndarray | None = None) -> ChainResult:
    """Run one chain; returns thinned draws, the final state, and the
    per-iteration diagnostics records.

    Deterministic given ``config.seed``.  Any numerical failure raises
    ChainAbort carrying a state snapshot for post-mortem.
    """
    if not data.standardized:
        raise ValueError("run_chain expects standardized data")
    p, q = data.n_nodes, data.n_covariates
    e = data.n_edges
    n = data.n_samples
    levels = np.asarray([np.asarray(l, dtype=np.float64)
                         for l in config.target_covariate_levels], dtype=np.float64)
    levels = levels.reshape(-1, q) if levels.size else np.empty((0, q))
    n_levels = levels.shape[0]

    rng = np.random.default_rng(config.seed)
    state = initial_state(data, m_s=m_s, sigma_lambda=config.sigma_lambda_init)
    pairs = edge_pairs(p)
    all_edges = np.arange(e, dtype=np.int64)
    all_nodes = np.arange(p, dtype=np.int64)
    W, C = cross_terms(state.beta, data.x, data.y, pairs)

    n_stored = config.n_stored
    rho = np.empty((n_stored, n_levels, e))
    beta_draws = np.empty((n_stored, q, e))
    omega_draws = np.empty((n_stored, p))
    rho_subject = np.empty((n_stored, n, e)) if config.store_subject_level else None
    draw_iterations = np.empty(n_stored, dtype=np.int64)

    log_sigma = np.log(state.sigma_lambda)
    diagnostics: list[dict] = []
    stored = 0
    try:
        for it in range(1, config.total_iterations + 1):
            state.iteration = it
            _beta_sweep(data.y, data.x, state.omega_diag, state.psi, state.beta,
                        W, C, pairs, all_edges, rng)
            _omega_sweep(data.y, C, state.omega_diag, all_nodes, rng)
            m_arr, a_arr, b_arr = _psi_gig_params(state.lam, state.gamma_sq, state.beta)
            state.psi = sample_gig_block(m_arr, a_arr, b_arr, rng)
            accepted = np.zeros(q, dtype=np.int64)
            for s in range(q):
                acc = update_lambda_mh(state, s, rng)
                accepted[s] = acc
                if config.adapt_sigma_lambda and it <= config.burn_in:
                    # diminishing Robbins-Monro step toward the target rate,
                    # frozen after burn-in to keep the chain Markov
                    step = (it + 10.0) ** -0.7
                    log_sigma[s] += step * (float(acc) - config.mh_target_accept)
                    log_sigma[s] = min(max(log_sigma[s], -7.0), 3.0)
                    state.sigma_lambda[s] = math.exp(log_sigma[s])
            update_gamma(state, rng)
            if it == config.burn_in:
                # acceptance statistics restart at the frozen step size
                state.mh_accept[:] = 0
                state.mh_steps[:] = 0
            rate_denom = np.maximum(state.mh_steps, 1)
            diagnostics.append({
                "iteration": it,
                "lambda": state.lam.tolist(),
                "gamma_sq": state.gamma_sq,
                "sigma_lambda": state.sigma_lambda.tolist(),
                "accepted": accepted.tolist(),
                "accept_rate": (state.mh_accept / rate_denom).tolist(),
            })
            if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
                denom = np.sqrt(state.omega_diag[pairs[:, 0]] *
                                state.omega_diag[pairs[:, 1]])
                for lv in range(n_levels):
                    rho[stored, lv] = -(levels[lv] @ state.beta) / denom
                if rho_subject is not None:
                    rho_subject[stored] = -W / denom
                beta_draws[stored] = state.beta
                omega_draws[stored] = state.omega_diag
                draw_iterations[stored] = it
                stored += 1
            if it % 500 == 0:
                _check_state(state)
        _check_state(state)
    except (NumericalError, ValueError, FloatingPointError) as err:
        raise ChainAbort(f"chain aborted at iteration {state.iteration}: {err}",
                         state=state, iteration=state.iteration) from err

    draws = PosteriorDraws(
        levels=levels,
        rho=rho,
        beta=beta_draws,
        omega=omega_draws,
        draw_iterations=draw_iterations,
        rho_subject=rho_subject,
    )
    return ChainResult(draws=draws, state=state, diagnostics=diagnostics)
