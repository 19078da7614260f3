"""Synthetic threshold-sweep experiment: simulate slices, learn, fuse, score."""

import string
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError
from .fusion import (
    ArcOrder,
    FusionConfig,
    aggregate_structure,
    fuse_parameters,
    get_votes,
    learn_slices,
)
from .gbn import GaussianBayesianNetwork
from .graph import Dag
from .learning import HillClimbConfig
from .metrics import threshold_sweep_report


def default_labels(p):
    if p <= 26:
        return tuple(string.ascii_uppercase[:p])
    return tuple(f"X{i + 1}" for i in range(p))


def random_ground_truth(p=7, n_arcs=7, coef_range=(0.3, 1.5), seed=0):
    """Random linear-Gaussian network with standard-normal noise.

    Arcs always point from a lower to a higher label index, so the label
    order is a topological order. Coefficient magnitudes are uniform on
    ``coef_range`` with a random sign.
    """
    lo, hi = coef_range
    if not 0 < lo <= hi:
        raise ValidationError(f"coefficient range {coef_range} must satisfy 0 < low <= high")
    pairs = [(a, b) for a in range(p) for b in range(a + 1, p)]
    if not 0 <= n_arcs <= len(pairs):
        raise ValidationError(f"cannot place {n_arcs} arcs on {p} variables")
    rng = np.random.default_rng(seed)
    chosen = sorted(pairs[i] for i in rng.choice(len(pairs), size=n_arcs, replace=False))
    magnitudes = rng.uniform(lo, hi, size=n_arcs)
    signs = rng.choice([-1.0, 1.0], size=n_arcs)
    dag = Dag(default_labels(p), chosen)
    coefs = {arc: float(m * s) for arc, m, s in zip(chosen, magnitudes, signs)}
    return GaussianBayesianNetwork(dag, np.zeros(p), np.ones(p), coefs)


@dataclass(frozen=True)
class ExperimentSpec:
    slices: int = 8
    rows_per_slice: int = 50
    seed: int = 0
    p: int = 7
    n_arcs: int = 7
    coef_range: tuple = (0.3, 1.5)
    ground_truth: Optional[GaussianBayesianNetwork] = None

    def __post_init__(self):
        if self.slices < 1 or self.rows_per_slice < 1:
            raise ValidationError("need at least one slice and one row per slice")
        lo, hi = self.coef_range
        if lo < 0.3:
            raise ValidationError("generator coefficients must stay at least 0.3 away from zero")


def simulate(spec):
    """Ground truth and ``spec.slices`` sampled datasets, reproducible from the seed."""
    truth_seq, *slice_seqs = np.random.SeedSequence(spec.seed).spawn(spec.slices + 1)
    truth = spec.ground_truth
    if truth is None:
        truth_seed = int(truth_seq.generate_state(1)[0])
        truth = random_ground_truth(spec.p, spec.n_arcs, spec.coef_range, truth_seed)
    datasets = []
    for sid, seq in enumerate(slice_seqs):
        data = truth.sample(spec.rows_per_slice, seq)
        datasets.append(type(data)(data.variables, data.rows, f"slice{sid + 1}"))
    return truth, datasets


@dataclass
class SeedResult:
    seed: int
    truth: GaussianBayesianNetwork
    slice_dags: list
    report: object  # SweepReport
    # threshold -> |fused coefficient| of every fused arc absent from the truth
    false_arc_coefs: dict = field(default_factory=dict)

    def mean_false_coef(self, t):
        vals = self.false_arc_coefs.get(t, [])
        return float(np.mean(vals)) if vals else None


def run_seed(spec, hc=None, order=ArcOrder.PAPER_ROW_MAJOR, jobs=1):
    truth, datasets = simulate(spec)
    standardized, dags = learn_slices(datasets, hc or HillClimbConfig(seed=spec.seed), jobs)
    votes = get_votes(dags)
    report = threshold_sweep_report(dags, truth.dag, votes, order)
    false_coefs = {}
    for t in range(1, votes.k + 1):
        structure, _ = aggregate_structure(votes, FusionConfig(t, order))
        gbn, _ = fuse_parameters(structure, standardized)
        false_coefs[t] = [
            abs(b) for arc, b in sorted(gbn.coefficients.items()) if arc not in truth.dag.arcs
        ]
    return SeedResult(spec.seed, truth, dags, report, false_coefs)


@dataclass
class ReplicationSummary:
    results: list

    @property
    def k(self):
        return len(self.results[0].slice_dags)

    def thresholds(self):
        return list(range(1, self.k + 1))

    def fused_shd(self, r, t):
        return r.report.aggregated[t - 1][1].shd

    def fraction_at_most_best(self, t):
        hits = [
            self.fused_shd(r, t) <= min(m.shd for m in r.report.individual) for r in self.results
        ]
        return float(np.mean(hits))

    def fraction_at_most_median(self, t):
        hits = [
            self.fused_shd(r, t) <= np.median([m.shd for m in r.report.individual])
            for r in self.results
        ]
        return float(np.mean(hits))

    def pooled_false_coef(self, t):
        vals = [v for r in self.results for v in r.false_arc_coefs.get(t, [])]
        return (float(np.mean(vals)) if vals else None), len(vals)

    def mean_metrics(self, t):
        rows = np.array([r.report.aggregated[t - 1][1].as_row() for r in self.results], float)
        return rows.mean(axis=0)

    def mean_individual(self):
        rows = np.array([m.as_row() for r in self.results for m in r.report.individual], float)
        return rows.mean(axis=0)

    def to_text(self):
        lines = [f"seeds: {len(self.results)}  slices: {self.k}", ""]
        ind = self.mean_individual()
        lines.append("mean individual  SHD {:.2f}  TP {:.2f}  FP {:.2f}  FN {:.2f}".format(*ind))
        lines.append("")
        header = "Threshold  SHD    TP     FP     FN     <=best  <=median  mean|b| false arcs (n)"
        lines.append(header)
        for t in self.thresholds():
            m = self.mean_metrics(t)
            coef, count = self.pooled_false_coef(t)
            coef_s = f"{coef:.4f}" if coef is not None else "-"
            lines.append(
                f"{t:>9}  {m[0]:<5.2f}  {m[1]:<5.2f}  {m[2]:<5.2f}  {m[3]:<5.2f}  "
                f"{self.fraction_at_most_best(t):<6.2f}  {self.fraction_at_most_median(t):<8.2f}  "
                f"{coef_s} ({count})"
            )
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "seeds": [r.seed for r in self.results],
            "mean_individual": dict(zip(("shd", "tp", "fp", "fn"), self.mean_individual().tolist())),
            "thresholds": [
                {
                    "threshold": t,
                    **dict(zip(("shd", "tp", "fp", "fn"), self.mean_metrics(t).tolist())),
                    "frac_shd_le_best_individual": self.fraction_at_most_best(t),
                    "frac_shd_le_median_individual": self.fraction_at_most_median(t),
                    "mean_abs_false_arc_coef": self.pooled_false_coef(t)[0],
                    "false_arc_count": self.pooled_false_coef(t)[1],
                }
                for t in self.thresholds()
            ],
            "per_seed": [
                {
                    "seed": r.seed,
                    **r.report.to_dict(),
                    "mean_abs_false_arc_coef": {
                        str(t): r.mean_false_coef(t) for t in range(1, self.k + 1)
                    },
                }
                for r in self.results
            ],
        }


def replicate(spec, seeds, hc=None, order=ArcOrder.PAPER_ROW_MAJOR, jobs=1):
    results = []
    for s in seeds:
        seed_spec = ExperimentSpec(
            slices=spec.slices,
            rows_per_slice=spec.rows_per_slice,
            seed=s,
            p=spec.p,
            n_arcs=spec.n_arcs,
            coef_range=spec.coef_range,
            ground_truth=spec.ground_truth,
        )
        results.append(run_seed(seed_spec, hc, order, jobs))
    return ReplicationSummary(results)
