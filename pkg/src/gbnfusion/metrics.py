"""Structure recovery metrics and threshold-sweep tables."""

import csv
import io
import json
from dataclasses import asdict, dataclass

from .errors import ValidationError
from .fusion import ArcOrder, FusionConfig, aggregate_structure
from .graph import dag_to_cpdag

COLUMNS = ("SHD", "TP", "FP", "FN")


@dataclass(frozen=True)
class StructureMetrics:
    shd: int
    tp: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.shd, self.tp, self.fp, self.fn) < 0:
            raise ValidationError("metric counts must be non-negative")

    def as_row(self):
        return (self.shd, self.tp, self.fp, self.fn)


def _check_same(a, b):
    if a.variables != b.variables:
        raise ValidationError("graphs are over different variable lists")


def shd(a, b):
    """Structural Hamming distance between the equivalence classes of two DAGs.

    Each unordered pair costs 1 when the two completed PDAGs connect it
    differently (missing vs present, undirected vs directed, or opposite
    directions) and 0 otherwise.
    """
    _check_same(a, b)
    ca, cb = dag_to_cpdag(a), dag_to_cpdag(b)
    p = a.p
    return sum(
        ca.pair_state(i, j) != cb.pair_state(i, j)
        for i in range(p)
        for j in range(i + 1, p)
    )


def confusion(learned, reference):
    """Directed-arc TP/FP/FN counts (a reversed arc is one FP and one FN)."""
    _check_same(learned, reference)
    la, ra = learned.arcs, reference.arcs
    return len(la & ra), len(la - ra), len(ra - la)


def structure_metrics(learned, reference):
    tp, fp, fn = confusion(learned, reference)
    return StructureMetrics(shd(learned, reference), tp, fp, fn)


@dataclass
class SweepReport:
    """Metrics of each slice network and of the fused network per threshold."""

    individual: list  # StructureMetrics per slice, in slice order
    aggregated: list  # (threshold, StructureMetrics) for thresholds 1..k
    arc_order: ArcOrder = ArcOrder.PAPER_ROW_MAJOR

    def rows(self):
        left = [(str(i), *m.as_row()) for i, m in enumerate(self.individual, start=1)]
        right = [(str(t), *m.as_row()) for t, m in self.aggregated]
        return left, right

    def to_text(self):
        left, right = self.rows()
        out = []
        for title, rows in (("Network", left), ("Threshold", right)):
            header = (title,) + COLUMNS
            widths = [max(len(str(r[c])) for r in [header] + rows) for c in range(len(header))]
            out.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
            out += ["  ".join(str(v).rjust(w) for v, w in zip(r, widths)) for r in rows]
            out.append("")
        return "\n".join(out)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("panel", "index") + COLUMNS)
        left, right = self.rows()
        for r in left:
            writer.writerow(("network",) + r)
        for r in right:
            writer.writerow(("threshold",) + r)
        return buf.getvalue()

    def to_dict(self):
        return {
            "arc_order": self.arc_order.value,
            "individual": [asdict(m) for m in self.individual],
            "aggregated": [dict(threshold=t, **asdict(m)) for t, m in self.aggregated],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def render(self, fmt):
        if fmt == "text":
            return self.to_text()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValidationError(f"unknown report format {fmt!r}")


def threshold_sweep_report(dag_list, reference, votes, order=ArcOrder.PAPER_ROW_MAJOR):
    dag_list = list(dag_list)
    if votes.k != len(dag_list):
        raise ValidationError(f"vote matrix counts {votes.k} slices, got {len(dag_list)} networks")
    order = ArcOrder.parse(order)
    individual = [structure_metrics(d, reference) for d in dag_list]
    aggregated = []
    for t in range(1, votes.k + 1):
        fused, _ = aggregate_structure(votes, FusionConfig(t, order))
        aggregated.append((t, structure_metrics(fused, reference)))
    return SweepReport(individual, aggregated, order)
