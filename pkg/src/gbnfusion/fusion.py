"""Structure and parameter fusion of networks learned on separate data slices.

Structures are combined by counting how many slice networks contain each
arc and admitting the arcs whose count reaches a threshold, skipping any
that would break acyclicity. Parameters are then re-estimated on every
slice under the fused structure and combined by inverse-variance weights.
"""

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import GbnFusionError, ValidationError, with_slice
from .gbn import VARIANCE_FLOOR, GaussianBayesianNetwork, standardize
from .graph import Dag
from .learning import HillClimbConfig, fit_mle, hill_climb, residual_dof


class ArcOrder(str, enum.Enum):
    PAPER_ROW_MAJOR = "paper_row_major"
    VOTES_DESCENDING = "votes_descending"

    @classmethod
    def parse(cls, value):
        aliases = {"paper": cls.PAPER_ROW_MAJOR, "votes": cls.VOTES_DESCENDING}
        if isinstance(value, cls):
            return value
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ValidationError(f"unknown arc order {value!r}") from None


@dataclass(frozen=True, eq=False)
class ArcVoteMatrix:
    """``counts[i, j]``: number of slice networks that contain ``i -> j``."""

    variables: tuple
    counts: np.ndarray
    k: int

    def __post_init__(self):
        counts = np.array(self.counts, dtype=int)
        p = len(self.variables)
        if counts.shape != (p, p):
            raise ValidationError(f"vote matrix must be {p}x{p}")
        if self.k < 1:
            raise ValidationError("vote matrix needs at least one slice")
        if np.any(counts < 0) or np.any(counts > self.k):
            raise ValidationError(f"votes must lie in [0, {self.k}]")
        if np.any(np.diag(counts) != 0):
            raise ValidationError("vote matrix diagonal must be zero")
        if np.any(counts + counts.T > self.k):
            raise ValidationError("a pair has more votes in both directions than slices")
        counts.setflags(write=False)
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "counts", counts)

    def __getitem__(self, arc):
        return int(self.counts[arc])


@dataclass(frozen=True)
class FusionConfig:
    threshold: int
    arc_order: ArcOrder = ArcOrder.PAPER_ROW_MAJOR

    def __post_init__(self):
        if int(self.threshold) != self.threshold or self.threshold < 1:
            raise ValidationError(f"threshold must be a positive integer, got {self.threshold}")
        object.__setattr__(self, "arc_order", ArcOrder.parse(self.arc_order))

    def check(self, k):
        if not 1 <= self.threshold <= k:
            raise ValidationError(f"threshold {self.threshold} outside [1, {k}] for {k} slices")


@dataclass(frozen=True)
class DiscardedArc:
    frm: int
    to: int
    votes: int
    reason: str  # "antiparallel" or "cycle"


@dataclass(eq=False)
class FusedGbn:
    structure: Dag
    gbn: GaussianBayesianNetwork
    per_arc_weights: dict
    discarded_arcs: list
    slice_dags: list = field(default_factory=list)
    votes: ArcVoteMatrix = None
    threshold: int = None
    arc_order: ArcOrder = ArcOrder.PAPER_ROW_MAJOR


def get_votes(dag_list):
    dag_list = list(dag_list)
    if not dag_list:
        raise ValidationError("no networks to count votes over")
    variables = dag_list[0].variables
    p = len(variables)
    counts = np.zeros((p, p), dtype=int)
    for dag in dag_list:
        if dag.variables != variables:
            raise ValidationError("networks are over different variable lists")
        for frm, to in dag.arcs:
            counts[frm, to] += 1
    return ArcVoteMatrix(variables, counts, len(dag_list))


def candidate_arcs(votes, threshold, order=ArcOrder.PAPER_ROW_MAJOR):
    """Arcs with at least ``threshold`` votes, in admission order."""
    order = ArcOrder.parse(order)
    p = len(votes.variables)
    arcs = [(i, j) for i in range(p) for j in range(p) if votes.counts[i, j] >= threshold]
    if order is ArcOrder.VOTES_DESCENDING:
        arcs.sort(key=lambda a: (-votes.counts[a], a[0], a[1]))
    return arcs


def aggregate_structure(votes, cfg):
    """Admit arcs reaching ``cfg.threshold`` votes into an initially empty DAG.

    Arcs are visited in the configured order; one whose reverse is already
    admitted, or which would close a cycle, is skipped and logged.
    """
    cfg.check(votes.k)
    dag = Dag.empty(votes.variables)
    discarded = []
    for frm, to in candidate_arcs(votes, cfg.threshold, cfg.arc_order):
        if dag.has_arc(to, frm):
            discarded.append(DiscardedArc(frm, to, votes[frm, to], "antiparallel"))
        elif dag.causes_cycle(frm, to):
            discarded.append(DiscardedArc(frm, to, votes[frm, to], "cycle"))
        else:
            dag = dag.add_arc(frm, to)
    return dag, discarded


def fuse_coefficients(per_slice):
    """Inverse-variance weighted combination of per-slice coefficient estimates.

    ``per_slice`` is a sequence of ``(slice_id, estimates)``. Returns
    ``(fused, weights)`` where ``fused[arc]`` is the combined coefficient
    and ``weights[(slice_id, arc)]`` the normalised weight of that slice.
    """
    per_slice = list(per_slice)
    if not per_slice:
        raise ValidationError("no slices to fuse")
    tables = []
    for slice_id, estimates in per_slice:
        tables.append((slice_id, {e.arc: e for e in estimates}))
    arcs = set().union(*(t.keys() for _, t in tables))
    for slice_id, table in tables:
        missing = arcs - table.keys()
        if missing:
            raise ValidationError(f"slice {slice_id}: no estimate for arcs {sorted(missing)}")

    fused = {}
    weights = {}
    for arc in sorted(arcs):
        precision = np.array([1.0 / max(t[arc].variance, VARIANCE_FLOOR) for _, t in tables])
        w = precision / precision.sum()
        values = np.array([t[arc].value for _, t in tables])
        fused[arc] = float(w @ values)
        for (slice_id, _), wj in zip(tables, w):
            weights[(slice_id, arc)] = float(wj)
    return fused, weights


def _learn_slice(args):
    data, hc = args
    return hill_climb(data, hc)


def learn_slices(datasets, hc=None, jobs=1):
    """Standardize each dataset and learn its structure.

    Returns ``(standardized, dags)``, both in input order.
    """
    hc = hc or HillClimbConfig()
    standardized = []
    for sid, data in enumerate(datasets):
        try:
            standardized.append(standardize(data)[0])
        except GbnFusionError as exc:
            raise with_slice(exc, sid) from exc
    tasks = [(d, hc) for d in standardized]
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_learn_slice, t) for t in tasks]
            dags = []
            for sid, fut in enumerate(futures):
                try:
                    dags.append(fut.result())
                except GbnFusionError as exc:
                    raise with_slice(exc, sid) from exc
    else:
        dags = []
        for sid, t in enumerate(tasks):
            try:
                dags.append(_learn_slice(t))
            except GbnFusionError as exc:
                raise with_slice(exc, sid) from exc
    return standardized, dags


def fuse_parameters(structure, standardized):
    """Refit every slice on ``structure`` and combine the estimates.

    Means are zero (standardized space); each conditional variance is the
    residual variance pooled over slices by residual degrees of freedom.
    Returns ``(gbn, weights)``.
    """
    per_slice = []
    rss = np.zeros(structure.p)
    dof = np.zeros(structure.p)
    for sid, data in enumerate(standardized):
        try:
            fitted, estimates = fit_mle(structure, data)
        except GbnFusionError as exc:
            raise with_slice(exc, sid) from exc
        df = np.array(residual_dof(structure, data), dtype=float)
        rss += fitted.cond_variances * df
        dof += df
        per_slice.append((sid, estimates))
    coefs, weights = fuse_coefficients(per_slice)
    variances = np.maximum(rss / dof, VARIANCE_FLOOR)
    gbn = GaussianBayesianNetwork(structure, np.zeros(structure.p), variances, coefs)
    return gbn, weights


def fuse(datasets, cfg, hc=None, jobs=1):
    """Learn one network per dataset, fuse structures, then fuse parameters."""
    datasets = list(datasets)
    if not datasets:
        raise ValidationError("need at least one dataset")
    variables = datasets[0].variables
    for sid, d in enumerate(datasets):
        if d.variables != variables:
            raise ValidationError(f"slice {sid}: variables {list(d.variables)} differ from slice 0")
    cfg.check(len(datasets))
    standardized, dags = learn_slices(datasets, hc, jobs)
    return fuse_learned(standardized, dags, cfg)


def fuse_learned(standardized, dags, cfg):
    """Fusion stages after per-slice structure learning."""
    votes = get_votes(dags)
    structure, discarded = aggregate_structure(votes, cfg)
    gbn, weights = fuse_parameters(structure, standardized)
    return FusedGbn(
        structure=structure,
        gbn=gbn,
        per_arc_weights=weights,
        discarded_arcs=discarded,
        slice_dags=list(dags),
        votes=votes,
        threshold=cfg.threshold,
        arc_order=cfg.arc_order,
    )
