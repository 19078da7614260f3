"""Per-slice learning: BIC hill climbing over DAGs and least-squares fitting."""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError, ValidationError
from .gbn import VARIANCE_FLOOR, GaussianBayesianNetwork
from .graph import Dag

_LOG_2PI = math.log(2.0 * math.pi)
# score deltas closer than this are treated as ties
SCORE_TOL = 1e-9

ADD, DELETE, REVERSE = 0, 1, 2


@dataclass(frozen=True)
class HillClimbConfig:
    max_parents: Optional[int] = None
    max_iterations: int = 10_000
    restarts: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be at least 1")
        if self.restarts < 0:
            raise ValidationError("restarts must be non-negative")
        if self.max_parents is not None and self.max_parents < 0:
            raise ValidationError("max_parents must be non-negative")


@dataclass(frozen=True)
class NodeFamilyScore:
    node: int
    parent_set: frozenset
    score: float


@dataclass(frozen=True)
class CoefficientEstimate:
    node: int
    parent: int
    value: float
    variance: float

    def __post_init__(self):
        if not self.variance >= VARIANCE_FLOOR:
            object.__setattr__(self, "variance", VARIANCE_FLOOR)

    @property
    def arc(self):
        return (self.parent, self.node)


def _design(data, pa):
    return np.column_stack([np.ones(data.n)] + [data.rows[:, j] for j in pa])


def node_family_bic(data, i, pa):
    """BIC of node ``i`` regressed on ``pa`` (with intercept).

    Maximised Gaussian log-likelihood with the ML residual variance
    (denominator n), minus ``(|pa| + 2) / 2 * log(n)``. Collinear
    regressors give ``-inf``.
    """
    pa = sorted(pa)
    if i in pa:
        raise ValidationError("a node cannot be its own parent")
    n = data.n
    y = data.rows[:, i]
    X = _design(data, pa)
    if X.shape[1] > n:
        return -math.inf
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        return -math.inf
    r = y - X @ beta
    sigma2 = max(float(r @ r) / n, VARIANCE_FLOOR)
    loglik = -0.5 * n * (_LOG_2PI + math.log(sigma2) + 1.0)
    return loglik - 0.5 * (len(pa) + 2) * math.log(n)


class _FamilyScorer:
    """Family scores for one search, optionally memoised."""

    def __init__(self, data, use_cache=True):
        self.data = data
        self.use_cache = use_cache
        self.cache = {}
        self.evaluations = 0

    def __call__(self, i, pa):
        key = (i, frozenset(pa))
        if self.use_cache and key in self.cache:
            return self.cache[key].score
        self.evaluations += 1
        s = node_family_bic(self.data, i, pa)
        if self.use_cache:
            self.cache[key] = NodeFamilyScore(i, key[1], s)
        return s


def bic_total(dag, data, scorer=None):
    if tuple(dag.variables) != tuple(data.variables):
        raise ValidationError("DAG and dataset have different variables")
    score = scorer or (lambda i, pa: node_family_bic(data, i, pa))
    return sum(score(i, dag.parents(i)) for i in range(dag.p))


def _reverse_is_acyclic(dag, frm, to):
    # reversing frm->to is legal unless another path frm ~> to exists
    return not any(c != to and dag.is_reachable(c, to) for c in dag.children(frm))


def _best_move(dag, score, max_parents):
    p = dag.p
    cap = math.inf if max_parents is None else max_parents
    best = None
    best_delta = SCORE_TOL
    current = [score(i, dag.parents(i)) for i in range(p)]

    def consider(delta, move):
        nonlocal best, best_delta
        # candidates arrive in (type, from, to) order; later ones must win clearly
        if delta > best_delta + (SCORE_TOL if best is not None else 0.0):
            best, best_delta = move, delta

    for frm in range(p):
        for to in range(p):
            if frm == to or dag.adjacent(frm, to):
                continue
            pa = dag.parents(to)
            if len(pa) >= cap or dag.causes_cycle(frm, to):
                continue
            consider(score(to, pa | {frm}) - current[to], (ADD, frm, to))
    for frm, to in dag.sorted_arcs():
        consider(score(to, dag.parents(to) - {frm}) - current[to], (DELETE, frm, to))
    for frm, to in dag.sorted_arcs():
        if len(dag.parents(frm)) >= cap or not _reverse_is_acyclic(dag, frm, to):
            continue
        delta = (
            score(to, dag.parents(to) - {frm}) - current[to]
            + score(frm, dag.parents(frm) | {to}) - current[frm]
        )
        consider(delta, (REVERSE, frm, to))
    return best, best_delta


def _apply(dag, move):
    kind, frm, to = move
    if kind == ADD:
        return dag.add_arc(frm, to)
    if kind == DELETE:
        return dag.remove_arc(frm, to)
    return dag.reverse_arc(frm, to)


def _climb(start, score, cfg):
    dag = start
    for _ in range(cfg.max_iterations):
        move, delta = _best_move(dag, score, cfg.max_parents)
        if move is None:
            break
        dag = _apply(dag, move)
    return dag


def _random_dag(variables, rng, max_parents):
    p = len(variables)
    order = rng.permutation(p)
    arcs = []
    indegree = [0] * p
    cap = p if max_parents is None else max_parents
    for a in range(p):
        for b in range(a + 1, p):
            u, v = int(order[a]), int(order[b])
            if indegree[v] < cap and rng.random() < 0.5:
                arcs.append((u, v))
                indegree[v] += 1
    return Dag(variables, arcs)


def hill_climb(data, cfg=None, use_cache=True):
    """Steepest-ascent BIC search starting from the empty DAG.

    Moves are single-arc additions, deletions and reversals. Equal score
    deltas (within ``SCORE_TOL``) are resolved in favour of the first move
    in (add < delete < reverse, from, to) order. With ``cfg.restarts > 0``
    the search is repeated from seeded random DAGs and the best-scoring
    result is kept.
    """
    cfg = cfg or HillClimbConfig()
    if data.n <= data.p:
        warnings.warn(
            f"{data.provenance or 'dataset'}: n={data.n} is not larger than p={data.p}",
            stacklevel=2,
        )
    score = _FamilyScorer(data, use_cache)
    best = _climb(Dag.empty(data.variables), score, cfg)
    best_score = bic_total(best, data, score)
    if cfg.restarts:
        rng = np.random.default_rng(cfg.seed)
        for _ in range(cfg.restarts):
            start = _random_dag(data.variables, rng, cfg.max_parents)
            if bic_total(start, data, score) == -math.inf:
                continue
            candidate = _climb(start, score, cfg)
            s = bic_total(candidate, data, score)
            if s > best_score + SCORE_TOL:
                best, best_score = candidate, s
    return best


def _ols(data, i, pa):
    X = _design(data, pa)
    y = data.rows[:, i]
    df = data.n - X.shape[1]
    if df < 1:
        raise NumericalError(
            f"node {data.variables[i]}: {len(pa)} parents leave no residual degrees of freedom"
        )
    gram = X.T @ X
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise NumericalError(f"node {data.variables[i]}: collinear parents {list(pa)}")
    gram_inv = np.linalg.inv(gram)
    beta = gram_inv @ (X.T @ y)
    r = y - X @ beta
    return beta, float(r @ r), df, gram_inv


def fit_mle(dag, data, unbiased=True):
    """Least-squares parameters of ``dag`` on ``data``.

    Returns the fitted network and one ``CoefficientEstimate`` per arc.
    Conditional variances use the residual degrees of freedom
    ``n - |pa| - 1``; pass ``unbiased=False`` for the ML denominator ``n``.
    """
    if tuple(dag.variables) != tuple(data.variables):
        raise ValidationError("DAG and dataset have different variables")
    means = data.rows.mean(axis=0)
    variances = np.empty(dag.p)
    coefs = {}
    estimates = []
    for i in range(dag.p):
        pa = sorted(dag.parents(i))
        beta, rss, df, gram_inv = _ols(data, i, pa)
        resid_var = rss / (df if unbiased else data.n)
        variances[i] = max(resid_var, VARIANCE_FLOOR)
        for k, j in enumerate(pa, start=1):
            coefs[(j, i)] = float(beta[k])
            se2 = (rss / df) * gram_inv[k, k]
            estimates.append(CoefficientEstimate(i, j, float(beta[k]), max(se2, VARIANCE_FLOOR)))
    return GaussianBayesianNetwork(dag, means, variances, coefs), estimates


def residual_dof(dag, data):
    """Residual degrees of freedom of each node's regression."""
    return [data.n - len(dag.parents(i)) - 1 for i in range(dag.p)]
