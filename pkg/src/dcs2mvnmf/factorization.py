"""Discriminatively constrained semi-supervised multi-view NMF solver.

Each view is factorized as ``X^v ~ W^v (A Z^v)^T`` where ``A`` is the label
constraint matrix. The objective for one view, with ``q`` the column norms
of ``W^v`` and ``H = A Z^v``::

    ||X - W H^T||^2 + alpha ||I_disc * Z diag(q)||^2
        + beta tr(diag(q) H^T L H diag(q)) + gamma ||Z diag(q) - Z_c||^2

summed over views. ``W`` and ``Z`` are updated with multiplicative rules,
after every ``W`` step the column norms of ``W`` are moved into ``Z``, and
``Z_c`` is the mean of the view coefficients.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from .constraints import LabelConstraint
from .dataset import MultiViewDataset
from .graph import ViewGraph

log = logging.getLogger(__name__)

VARIANTS = ("full", "baseline", "baseline_alpha", "baseline_beta", "no_normalization")
TERM_NAMES = ("recon", "disc", "graph", "consensus")


class DivergenceError(FloatingPointError):
    def __init__(self, iteration: int, what: str = "objective"):
        super().__init__(f"non-finite {what} at iteration {iteration}")
        self.iteration = iteration


class DegenerateBasisError(ArithmeticError):
    def __init__(self, view: int, column: int):
        super().__init__(f"basis column {column} of view {view} has zero norm")
        self.view = view
        self.column = column


@dataclass
class SolverConfig:
    alpha: float = 100.0
    beta: float = 1.0
    gamma: float = 0.1
    m_s: int = 1
    max_iters: int = 300
    tol: float = 1e-6
    epsilon_guard: float = 1e-12
    seed: int = 0
    variant: str = "full"

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "tol"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.m_s < 1 or self.max_iters < 1:
            raise ValueError("m_s and max_iters must be positive")
        if not self.epsilon_guard > 0:
            raise ValueError("epsilon_guard must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")

    def weights(self):
        """(alpha, beta, gamma) with the variant's switched-off terms at 0."""
        a, b, g = self.alpha, self.beta, self.gamma
        if self.variant == "baseline":
            a = b = 0.0
        elif self.variant == "baseline_alpha":
            b = 0.0
        elif self.variant == "baseline_beta":
            a = 0.0
        return a, b, g

    @property
    def normalizes(self) -> bool:
        return self.variant != "no_normalization"


@dataclass
class TraceEntry:
    iteration: int
    total: float
    # weighted per-view terms, shape (n_views, 4) in TERM_NAMES order
    terms: np.ndarray


@dataclass
class FactorizationState:
    W: List[np.ndarray]
    Z: List[np.ndarray]
    # diagonals of the normalizers (column norms of W when fresh)
    Q: List[np.ndarray]
    Z_c: np.ndarray
    trace: List[TraceEntry] = field(default_factory=list)
    initial: Optional[TraceEntry] = None
    converged: bool = False

    @property
    def n_views(self) -> int:
        return len(self.W)

    def copy(self) -> "FactorizationState":
        return FactorizationState(
            W=[w.copy() for w in self.W], Z=[z.copy() for z in self.Z],
            Q=[q.copy() for q in self.Q], Z_c=self.Z_c.copy(),
            trace=list(self.trace), initial=self.initial, converged=self.converged,
        )


@dataclass
class DiagonalTerms:
    """Diagonals of the d x d matrices used by the basis update."""

    Y1: np.ndarray
    Y2_plus: np.ndarray
    Y2_minus: np.ndarray
    Y3: np.ndarray
    Y4: np.ndarray


def column_norms(W: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(W * W, axis=0))


def consensus_mean(Z: Sequence[np.ndarray]) -> np.ndarray:
    # fixed view order keeps the sum bit-identical between runs
    total = np.zeros_like(Z[0])
    for z in Z:
        total = total + z
    return total / len(Z)


def initialize(dataset: MultiViewDataset, constraint: LabelConstraint,
               config: SolverConfig) -> FactorizationState:
    if constraint.n != dataset.n:
        raise ValueError("constraint and dataset disagree on sample count")
    if constraint.m_s != config.m_s:
        raise ValueError("constraint m_s differs from solver m_s")
    d = constraint.d
    rng = np.random.default_rng(config.seed)
    W, Z = [], []
    for X in dataset.views:
        W.append(rng.uniform(0.01, 1.01, size=(X.shape[0], d)))
        Z.append(rng.uniform(0.01, 1.01, size=(constraint.n_rows, d)))
    if config.normalizes:
        Q = [column_norms(w) for w in W]
    else:
        Q = [np.ones(d) for _ in W]
    return FactorizationState(W=W, Z=Z, Q=Q, Z_c=consensus_mean(Z))


def view_terms(X, W, Z, Z_c, constraint: LabelConstraint, graph: ViewGraph,
               weights, use_q: bool = True) -> np.ndarray:
    """Weighted (recon, disc, graph, consensus) for one view.

    Q is taken fresh from W, or fixed at the identity when ``use_q`` is off.
    """
    alpha, beta, gamma = weights
    q = column_norms(W) if use_q else np.ones(W.shape[1])
    H = constraint.A @ Z
    R = X - W @ H.T
    recon = float(np.sum(R * R))
    Zq = Z * q
    masked = constraint.I_disc * Zq
    disc = alpha * float(np.sum(masked * masked))
    Hq = H * q
    graph_term = beta * float(np.sum(Hq * (graph.L @ Hq)))
    E = Zq - Z_c
    cons = gamma * float(np.sum(E * E))
    return np.array([recon, disc, graph_term, cons])


def objective(state: FactorizationState, dataset: MultiViewDataset,
              constraint: LabelConstraint, graphs: Sequence[ViewGraph],
              config: SolverConfig):
    """Total objective and its (n_views, 4) weighted breakdown."""
    weights = config.weights()
    terms = np.array([
        view_terms(X, state.W[v], state.Z[v], state.Z_c, constraint, graphs[v], weights,
                   use_q=config.normalizes)
        for v, X in enumerate(dataset.views)
    ])
    total = float(terms.sum())
    if not math.isfinite(total):
        raise DivergenceError(len(state.trace), "objective")
    return total, terms


def gradients(state: FactorizationState, dataset: MultiViewDataset,
              constraint: LabelConstraint, graphs: Sequence[ViewGraph],
              config: SolverConfig):
    """Analytic gradient of the objective w.r.t. each W^v and Z^v.

    The normalizer depends on W (q_j = ||W_j||), and that dependence is
    included, so these match finite differences of ``objective``.
    """
    alpha, beta, gamma = config.weights()
    A, M = constraint.A, constraint.I_disc
    out = []
    for v, X in enumerate(dataset.views):
        W, Z, g = state.W[v], state.Z[v], graphs[v]
        if config.normalizes:
            q = column_norms(W)
            wa, wb, wg = alpha, beta, gamma
        else:
            # Q fixed at I: the regularizers no longer depend on W
            q = np.ones(W.shape[1])
            wa = wb = wg = 0.0
        H = A @ Z
        LH = g.L @ H
        y1 = np.sum((M * Z) ** 2, axis=0)
        y2 = np.sum(H * LH, axis=0)
        y3 = np.sum(Z * Z, axis=0)
        y4 = np.sum(state.Z_c * Z, axis=0)
        dW = 2.0 * (W @ (H.T @ H) - X @ H
                    + W * (wa * y1 + wb * y2 + wg * y3 - wg * y4 / q))
        dZ = 2.0 * (A.T @ (H @ (W.T @ W)) - A.T @ (X.T @ W)
                    + alpha * (M * Z) * q**2
                    + beta * (A.T @ LH) * q**2
                    + gamma * (Z * q - state.Z_c) * q)
        out.append((dW, dZ))
    return out


def compute_diagonal_terms(state: FactorizationState, v: int,
                           constraint: LabelConstraint, graph: ViewGraph) -> DiagonalTerms:
    Z = state.Z[v]
    if Z.shape != state.Z_c.shape or Z.shape[0] != constraint.n_rows:
        raise ValueError(f"coefficient shape {Z.shape} does not conform")
    H = constraint.A @ Z
    masked = constraint.I_disc * Z
    return DiagonalTerms(
        Y1=np.sum(masked * masked, axis=0),
        Y2_plus=np.sum(H * (graph.degree[:, None] * H), axis=0),
        Y2_minus=np.sum(H * (graph.S @ H), axis=0),
        Y3=np.sum(Z * Z, axis=0),
        Y4=np.sum(state.Z_c * Z, axis=0),
    )


def basis_step_parts(state: FactorizationState, v: int, terms: DiagonalTerms,
                     dataset: MultiViewDataset, constraint: LabelConstraint,
                     config: SolverConfig):
    """Numerator and denominator of the multiplicative basis step.

    Their difference (denominator - numerator) is half the gradient of the
    objective w.r.t. W^v. The alpha, beta and gamma contributions reach W
    only through Q, so the unnormalized variant (Q fixed at I) drops them.
    """
    alpha, beta, gamma = config.weights() if config.normalizes else (0.0, 0.0, 0.0)
    X, W, Z = dataset.views[v], state.W[v], state.Z[v]
    H = constraint.A @ Z
    q_inv = 1.0 / np.maximum(column_norms(W), config.epsilon_guard)
    numer = X @ H + W * (beta * terms.Y2_minus + gamma * q_inv * terms.Y4)
    denom = W @ (H.T @ H) + W * (alpha * terms.Y1 + beta * terms.Y2_plus + gamma * terms.Y3)
    return numer, denom


def update_W(state: FactorizationState, v: int, terms: DiagonalTerms,
             dataset: MultiViewDataset, constraint: LabelConstraint,
             config: SolverConfig) -> np.ndarray:
    numer, denom = basis_step_parts(state, v, terms, dataset, constraint, config)
    W_new = state.W[v] * numer / np.maximum(denom, config.epsilon_guard)
    if not np.all(np.isfinite(W_new)):
        raise DivergenceError(len(state.trace) + 1, f"basis of view {v}")
    return W_new


def normalize(state: FactorizationState, v: int):
    """Move the column norms of W^v into Z^v. Returns (W, Z, Q) with Q = 1."""
    W, Z = state.W[v], state.Z[v]
    q = column_norms(W)
    zero = np.flatnonzero(q == 0)
    if zero.size:
        raise DegenerateBasisError(v, int(zero[0]))
    return W / q, Z * q, np.ones_like(q)


def coefficient_step_parts(state: FactorizationState, v: int, dataset: MultiViewDataset,
                           constraint: LabelConstraint, graph: ViewGraph,
                           config: SolverConfig):
    """Numerator and denominator of the coefficient step, assuming Q = I."""
    alpha, beta, gamma = config.weights()
    A = constraint.A
    X, W, Z = dataset.views[v], state.W[v], state.Z[v]
    H = A @ Z
    numer = A.T @ (X.T @ W) + beta * (A.T @ (graph.S @ H)) + gamma * state.Z_c
    denom = (A.T @ (H @ (W.T @ W)) + alpha * (constraint.I_disc * Z)
             + beta * (A.T @ (graph.degree[:, None] * H)) + gamma * Z)
    return numer, denom


def update_Z(state: FactorizationState, v: int, dataset: MultiViewDataset,
             constraint: LabelConstraint, graph: ViewGraph,
             config: SolverConfig) -> np.ndarray:
    """Multiplicative coefficient step; the basis must be column-normalized
    (or, in the unnormalized variant, Q is fixed at I)."""
    numer, denom = coefficient_step_parts(state, v, dataset, constraint, graph, config)
    Z_new = state.Z[v] * numer / np.maximum(denom, config.epsilon_guard)
    if not np.all(np.isfinite(Z_new)):
        raise DivergenceError(len(state.trace) + 1, f"coefficients of view {v}")
    return Z_new


def update_consensus(state: FactorizationState) -> np.ndarray:
    """Closed-form minimizer of the consensus term: mean of Z^v Q^v.

    Called after normalization, where every Q^v is the identity.
    """
    return consensus_mean([z * q for z, q in zip(state.Z, state.Q)])


def iterate(state: FactorizationState, dataset: MultiViewDataset,
            constraint: LabelConstraint, graphs: Sequence[ViewGraph],
            config: SolverConfig) -> None:
    """One sweep over all views followed by the consensus step, in place."""
    for v in range(state.n_views):
        terms = compute_diagonal_terms(state, v, constraint, graphs[v])
        state.W[v] = update_W(state, v, terms, dataset, constraint, config)
        if config.normalizes:
            state.W[v], state.Z[v], state.Q[v] = normalize(state, v)
        state.Z[v] = update_Z(state, v, dataset, constraint, graphs[v], config)
    state.Z_c = update_consensus(state)


def fit(dataset: MultiViewDataset, constraint: LabelConstraint,
        graphs: Sequence[ViewGraph], config: SolverConfig,
        state: Optional[FactorizationState] = None,
        callback: Optional[Callable[[FactorizationState], None]] = None) -> FactorizationState:
    if len(graphs) != dataset.n_views:
        raise ValueError("need one graph per view")
    if state is None:
        state = initialize(dataset, constraint, config)
    total, terms = objective(state, dataset, constraint, graphs, config)
    state.initial = TraceEntry(0, total, terms)
    prev = total
    for it in range(1, config.max_iters + 1):
        iterate(state, dataset, constraint, graphs, config)
        try:
            total, terms = objective(state, dataset, constraint, graphs, config)
        except DivergenceError as exc:
            raise DivergenceError(it) from exc
        state.trace.append(TraceEntry(it, total, terms))
        if callback is not None:
            callback(state)
        change = abs(prev - total) / max(abs(prev), np.finfo(float).tiny)
        prev = total
        if change < config.tol:
            state.converged = True
            break
    log.debug("fit stopped after %d iterations, objective %.6g", len(state.trace), prev)
    return state


def write_trace_csv(state: FactorizationState, path: str) -> None:
    n_views = state.n_views
    header = ["iteration", "total"] + [
        f"{name}_{v}" for v in range(n_views) for name in TERM_NAMES
    ]
    rows = ([state.initial] if state.initial is not None else []) + state.trace
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for e in rows:
            terms = [repr(float(x)) for x in e.terms.ravel()]
            writer.writerow([e.iteration, repr(e.total)] + terms)


def with_variant(config: SolverConfig, variant: str) -> SolverConfig:
    return replace(config, variant=variant)
