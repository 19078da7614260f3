"""Command-line front end: simulate, learn, fuse, eval, replicate.

Every failure prints one line ``error[<tag>]: <message>`` on stderr and
exits with 2 (validation), 3 (data or I/O) or 4 (numerical).
"""

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .errors import DataError, GbnFusionError, ValidationError
from .experiment import ExperimentSpec, replicate, simulate
from .fusion import ArcOrder, FusionConfig, aggregate_structure, fuse
from .gbn import Dataset, GaussianBayesianNetwork, standardize
from .graph import Dag
from .learning import HillClimbConfig, hill_climb
from .metrics import COLUMNS, SweepReport, structure_metrics

REPORT_NAME = "fusion_report.json"


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from exc


def _out_dir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {out}: {exc.strerror}") from exc
    return out


def _load_csv(path):
    try:
        return Dataset.from_csv(_read(path), provenance=str(path))
    except ValidationError as exc:
        # e.g. non-finite values or unusable labels in an otherwise well-formed file
        raise DataError(f"{path}: {exc}") from exc


def _load_reference(path):
    """A ground-truth file in either GBN or arc-list format."""
    text = _read(path)
    if text.lstrip().startswith("vars:") and not any(
        line.split(" ", 1)[0] in ("mean", "var", "coef") for line in text.splitlines()
    ):
        return Dag.from_text(text)
    return GaussianBayesianNetwork.from_text(text).dag


def _hc_config(args):
    return HillClimbConfig(max_parents=args.max_parents, restarts=args.restarts, seed=args.seed)


def _positive(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _non_negative(value):
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {n}")
    return n


# ---------------------------------------------------------------- simulate


def cmd_simulate(args):
    truth = None
    if args.truth:
        truth = GaussianBayesianNetwork.from_text(_read(args.truth))
    spec = ExperimentSpec(
        slices=args.slices,
        rows_per_slice=args.rows,
        seed=args.seed,
        p=args.variables,
        n_arcs=args.arcs,
        ground_truth=truth,
    )
    truth, datasets = simulate(spec)
    out = _out_dir(args.out_dir)
    _write(out / "truth.gbn", truth.to_text())
    width = len(str(len(datasets)))
    for sid, data in enumerate(datasets, start=1):
        _write(out / f"slice{sid:0{width}d}.csv", data.to_csv())
    print(f"wrote truth.gbn and {len(datasets)} slice file(s) to {out}")
    return 0


# ------------------------------------------------------------------- learn


def cmd_learn(args):
    data = _load_csv(args.data)
    std, _ = standardize(data)
    dag = hill_climb(std, _hc_config(args))
    text = dag.to_text()
    if args.out_dir:
        target = _out_dir(args.out_dir) / (Path(args.data).stem + ".dag")
        _write(target, text)
    else:
        sys.stdout.write(text)
    return 0


# -------------------------------------------------------------------- fuse


def _check_headers(paths, datasets):
    first = datasets[0].variables
    offending = [str(p) for p, d in zip(paths, datasets) if d.variables != first]
    if offending:
        raise ValidationError(
            f"header mismatch with {paths[0]}: {', '.join(offending)}"
        )


def _arc_list(dag):
    return [[a, b] for a, b in dag.labelled_arcs()]


def fusion_report(paths, fused):
    """Machine-readable summary of a fusion run, consumed by ``eval``."""
    labels = fused.structure.variables
    k = fused.votes.k
    thresholds = []
    for t in range(1, k + 1):
        dag, discarded = aggregate_structure(fused.votes, FusionConfig(t, fused.arc_order))
        thresholds.append(
            {
                "threshold": t,
                "arcs": _arc_list(dag),
                "discarded": [
                    {"from": labels[d.frm], "to": labels[d.to], "votes": d.votes, "reason": d.reason}
                    for d in discarded
                ],
            }
        )
    gbn = fused.gbn
    return {
        "version": __version__,
        "variables": list(labels),
        "arc_order": fused.arc_order.value,
        "threshold": fused.threshold,
        "slices": [
            {"file": str(p), "arcs": _arc_list(d)} for p, d in zip(paths, fused.slice_dags)
        ],
        "votes": fused.votes.counts.tolist(),
        "fused_arcs": _arc_list(fused.structure),
        "discarded": thresholds[fused.threshold - 1]["discarded"],
        "coefficients": [
            {"from": labels[a], "to": labels[b], "value": gbn.coefficients[(a, b)]}
            for a, b in fused.structure.sorted_arcs()
        ],
        "cond_variances": dict(zip(labels, gbn.cond_variances.tolist())),
        "weights": [
            {"slice": sid, "from": labels[a], "to": labels[b], "weight": w}
            for (sid, (a, b)), w in sorted(fused.per_arc_weights.items())
        ],
        "thresholds": thresholds,
    }


def _discard_log(report):
    lines = [
        f"{d['from']} -> {d['to']} votes={d['votes']} reason={d['reason']}"
        for d in report["discarded"]
    ]
    return "".join(line + "\n" for line in lines)


def cmd_fuse(args):
    paths = list(args.data)
    datasets = [_load_csv(p) for p in paths]
    _check_headers(paths, datasets)
    cfg = FusionConfig(args.threshold, args.order)
    cfg.check(len(datasets))
    fused = fuse(datasets, cfg, _hc_config(args), jobs=args.jobs)
    report = fusion_report(paths, fused)
    out = _out_dir(args.out_dir)
    _write(out / "fused.gbn", fused.gbn.to_text())
    _write(out / "fused.dag", fused.structure.to_text())
    _write(out / "discarded.txt", _discard_log(report))
    _write(out / REPORT_NAME, json.dumps(report, indent=2) + "\n")
    for sid, dag in enumerate(fused.slice_dags, start=1):
        _write(out / f"slice{sid:0{len(str(len(paths)))}d}.dag", dag.to_text())
    print(
        f"fused {len(paths)} slice(s) at threshold {cfg.threshold} ({cfg.arc_order.value}): "
        f"{len(fused.structure.arcs)} arc(s), {len(fused.discarded_arcs)} discarded; wrote {out}"
    )
    return 0


# -------------------------------------------------------------------- eval


def _dag_from_report(variables, arcs):
    try:
        return Dag.from_labels(variables, [tuple(a) for a in arcs])
    except (ValidationError, TypeError, ValueError) as exc:
        raise DataError(f"bad arc list in fusion report: {exc}") from exc


def sweep_from_report(report, reference):
    try:
        variables = tuple(report["variables"])
        slices = report["slices"]
        thresholds = report["thresholds"]
        order = ArcOrder.parse(report.get("arc_order", "paper_row_major"))
    except (KeyError, TypeError) as exc:
        raise DataError(f"fusion report is missing field {exc}") from exc
    if variables != reference.variables:
        raise ValidationError(
            f"reference variables {list(reference.variables)} differ from report {list(variables)}"
        )
    individual = [structure_metrics(_dag_from_report(variables, s["arcs"]), reference) for s in slices]
    aggregated = [
        (int(t["threshold"]), structure_metrics(_dag_from_report(variables, t["arcs"]), reference))
        for t in thresholds
    ]
    return SweepReport(individual, aggregated, order)


def cmd_eval(args):
    try:
        report = json.loads(_read(args.report))
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.report}: not valid JSON ({exc.msg})") from exc
    reference = _load_reference(args.reference)
    sys.stdout.write(sweep_from_report(report, reference).render(args.format))
    return 0


# --------------------------------------------------------------- replicate


def _summary_csv(summary):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ("threshold",) + COLUMNS + ("frac_le_best", "frac_le_median", "mean_abs_false_coef", "false_arcs")
    )
    for t in summary.thresholds():
        coef, count = summary.pooled_false_coef(t)
        writer.writerow(
            (t, *(repr(float(x)) for x in summary.mean_metrics(t)),
             repr(summary.fraction_at_most_best(t)), repr(summary.fraction_at_most_median(t)),
             "" if coef is None else repr(coef), count)
        )
    return buf.getvalue()


def cmd_replicate(args):
    truth = GaussianBayesianNetwork.from_text(_read(args.truth)) if args.truth else None
    spec = ExperimentSpec(
        slices=args.slices,
        rows_per_slice=args.rows,
        seed=args.seed,
        p=args.variables,
        n_arcs=args.arcs,
        ground_truth=truth,
    )
    hc = None
    if args.restarts or args.max_parents is not None:
        hc = _hc_config(args)
    seeds = range(args.seed, args.seed + args.seeds)
    summary = replicate(spec, seeds, hc, ArcOrder.parse(args.order), jobs=args.jobs)
    if args.format == "json":
        text = json.dumps(summary.to_dict(), indent=2) + "\n"
    elif args.format == "csv":
        text = _summary_csv(summary)
    else:
        text = summary.to_text()
        if len(summary.results) == 1:
            text = summary.results[0].report.to_text() + "\n" + text
    if args.out_dir:
        _write(_out_dir(args.out_dir) / f"replicate.{args.format if args.format != 'text' else 'txt'}", text)
    else:
        sys.stdout.write(text)
    return 0


# ------------------------------------------------------------------ parser


def _add_search_flags(p):
    p.add_argument("--seed", type=int, default=0, help="seed for random restarts (default 0)")
    p.add_argument("--restarts", type=_non_negative, default=0, help="random restarts of the search")
    p.add_argument("--max-parents", type=_non_negative, default=None, help="cap on parents per node")


def _add_experiment_flags(p):
    p.add_argument("--slices", type=_positive, default=8, help="number of datasets k (default 8)")
    p.add_argument("--rows", type=_positive, default=50, help="rows per dataset n (default 50)")
    p.add_argument("--variables", type=_positive, default=7, help="variables in the generated truth")
    p.add_argument("--arcs", type=_non_negative, default=7, help="arcs in the generated truth")
    p.add_argument("--truth", help="use this GBN file instead of the built-in generator")


class _Parser(argparse.ArgumentParser):
    # usage errors follow the same one-line convention as runtime errors
    def error(self, message):
        print(f"error[usage]: {self.prog}: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser():
    parser = _Parser(
        prog="gbnfusion",
        description="Learn Gaussian Bayesian networks per data slice and fuse them by arc voting.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a ground-truth GBN and sampled CSV slices")
    _add_experiment_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", help="learn one DAG from a CSV file")
    p.add_argument("data")
    _add_search_flags(p)
    p.add_argument("--out-dir", help="write <stem>.dag here instead of stdout")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("fuse", help="learn each CSV slice and fuse structures and parameters")
    p.add_argument("data", nargs="+")
    p.add_argument("--threshold", type=int, required=True, help="minimum votes for an arc")
    p.add_argument("--order", choices=["paper", "votes"], default="paper",
                   help="arc admission order: row-major (paper, default) or by vote count")
    _add_search_flags(p)
    p.add_argument("--jobs", type=_positive, default=1, help="parallel slice learners")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="score a fusion report against a reference network")
    p.add_argument("report", help=f"{REPORT_NAME} written by fuse")
    p.add_argument("reference", help="ground truth as a GBN or arc-list file")
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replicate", help="simulate, learn, sweep all thresholds over many seeds")
    _add_experiment_flags(p)
    p.add_argument("--seeds", type=_positive, default=20, help="number of consecutive seeds (default 20)")
    p.add_argument("--seed", type=int, default=0, help="first seed (default 0)")
    p.add_argument("--restarts", type=_non_negative, default=0)
    p.add_argument("--max-parents", type=_non_negative, default=None)
    p.add_argument("--order", choices=["paper", "votes"], default="paper")
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")
    p.add_argument("--jobs", type=_positive, default=1)
    p.add_argument("--out-dir", help="write replicate.<ext> here instead of stdout")
    p.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args)
    except GbnFusionError as exc:
        message = " ".join(str(exc).split())
        print(f"error[{exc.tag}]: {message}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
