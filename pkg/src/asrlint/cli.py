"""Command-line entry point.

Exit status: 0 clean, 1 confusable pairs found, 2 usage or input error.
Reports go to standard output; everything else goes to standard error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import fixtures
from .callflow import CYCLE, DANGLING_TRANSITION, UNKNOWN_WORD, CallFlowError, load_callflow, validate
from .confusability import DEFAULT_MARGIN, CalibrationError, Threshold, analyze, calibrate_threshold
from .distance import CostModelError, MatrixFormatError, UniformCost, distance_matrix, load_cost_table, read_matrix
from .lexicon import LexiconError, UnknownWordError, load_lexicon
from .simulator import NO_REJECTION, ConfusionChannel, SimulationError, simulate_node, simulate_transactions

EXIT_CLEAN, EXIT_FINDINGS, EXIT_ERROR = 0, 1, 2
DEFAULT_SEED = 0
DEFAULT_TRIALS = 1000
BUNDLED = "<bundled railway example>"


class UsageError(Exception):
    pass


def _add_inputs(p, callflow=True):
    p.add_argument("--lexicon", help="pronunciation lexicon file (default: bundled railway example)")
    if callflow:
        p.add_argument("--callflow", help="call-flow JSON file (default: bundled railway example)")
    p.add_argument("--cost-table", help="substitution/indel cost table (default: unit costs)")


def _add_threshold(p):
    p.add_argument("--threshold", type=float, help="confusability threshold T")
    p.add_argument("--reference", nargs=2, metavar=("WORD_A", "WORD_B"),
                   help="calibrate T as the distance between two well-separated words")
    p.add_argument("--margin", type=float, default=DEFAULT_MARGIN,
                   help="flag pairs with distance <= T*(1+margin) (default: %(default)s)")


def _add_format(p, choices, default):
    p.add_argument("--format", choices=choices, default=default,
                   help="output format (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asrlint", description="Predict which active words a menu speech recognizer will confuse."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matrix", help="pairwise distance matrix as CSV")
    _add_inputs(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--node", help="use the active words of this call-flow node (default: entry)")
    group.add_argument("--words", nargs="+", help="explicit word list")
    _add_format(p, ["csv", "json"], "csv")

    for name, text in (("analyze", "flag confusable active words at every node"),
                       ("suggest", "propose active words to remove")):
        p = sub.add_parser(name, help=text)
        _add_inputs(p)
        _add_threshold(p)
        p.add_argument("--matrix", help="precomputed distance CSV for one node; skips distance computation")
        p.add_argument("--node", help="node the --matrix belongs to (default: entry)")
        _add_format(p, ["text", "json"], "text")

    p = sub.add_parser("calibrate", help="compute T from a reference word pair")
    _add_inputs(p, callflow=False)
    p.add_argument("--reference", nargs=2, metavar=("WORD_A", "WORD_B"), required=True)
    p.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
    _add_format(p, ["text", "json"], "text")

    p = sub.add_parser("simulate", help="Monte Carlo recognition and transaction simulation")
    _add_inputs(p)
    _add_threshold(p)
    p.add_argument("--sub-prob", type=float, default=0.1, help="per-phoneme substitution probability")
    p.add_argument("--ins-prob", type=float, default=0.0, help="per-position insertion probability")
    p.add_argument("--del-prob", type=float, default=0.0, help="per-phoneme deletion probability")
    p.add_argument("--lattice-width", type=int, default=3, help="substitution candidates per phoneme")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS,
                   help="trials per word and number of transactions (default: %(default)s)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default: %(default)s)")
    p.add_argument("--reject-above", type=float,
                   help="reject decodes farther than this (default: T if given, else never reject)")
    p.add_argument("--random-pronunciation", action="store_true",
                   help="speak a random pronunciation instead of the first listed one")
    p.add_argument("--node", help="simulate only this node (required for --format csv)")
    _add_format(p, ["text", "json", "csv"], "text")
    return parser


def _load_inputs(args, need_callflow=True, need_lexicon=True):
    lexicon = flow = None
    if args.lexicon:
        lexicon = load_lexicon(args.lexicon)
    elif need_lexicon:
        lexicon = fixtures.railway_lexicon()
    if need_callflow:
        flow = load_callflow(args.callflow) if args.callflow else fixtures.railway_callflow()
    cost = load_cost_table(args.cost_table) if args.cost_table else UniformCost()
    return lexicon, flow, cost


def _threshold(args, lexicon, cost, required=True):
    if args.threshold is not None and args.reference:
        raise UsageError("give either --threshold or --reference, not both")
    if args.threshold is not None:
        return Threshold(args.threshold, args.margin)
    if args.reference:
        return calibrate_threshold(lexicon, *args.reference, cost=cost, margin=args.margin)
    if required:
        raise UsageError("one of --threshold or --reference is required")
    return None


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items())}
    for key in ("lexicon", "callflow"):
        if key in cfg and cfg[key] is None:
            cfg[key] = BUNDLED
    return cfg


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _warn(diags):
    for d in diags:
        print(f"asrlint: warning: {d}", file=sys.stderr)


def cmd_matrix(args, out) -> int:
    lexicon, flow, cost = _load_inputs(args, need_callflow=args.words is None)
    if args.words:
        words = args.words
    else:
        node_id = args.node or flow.entry
        if node_id not in flow.nodes:
            raise UsageError(f"no node {node_id!r} in call flow")
        words = flow.nodes[node_id].active_words
    matrix = distance_matrix(words, lexicon, cost)
    if args.format == "json":
        out.write(_dump({"config": _config(args), "labels": list(matrix.labels),
                         "distances": matrix.values.tolist()}))
    else:
        out.write(matrix.to_csv())
    return EXIT_CLEAN


def _run_analysis(args):
    lexicon, flow, cost = _load_inputs(args, need_lexicon=not args.matrix)
    if args.matrix and args.reference and lexicon is None:
        lexicon = fixtures.railway_lexicon()
    threshold = _threshold(args, lexicon, cost)
    if lexicon is not None:
        diags = validate(flow, lexicon)
        if args.matrix:
            diags = [d for d in diags if d.code != UNKNOWN_WORD]
        _warn(diags)
    matrices, only = {}, None
    if args.matrix:
        node_id = args.node or flow.entry
        if node_id not in flow.nodes:
            raise UsageError(f"no node {node_id!r} in call flow")
        matrices = {node_id: read_matrix(args.matrix)}
        only = [node_id]
    elif args.node:
        raise UsageError("--node only applies together with --matrix")
    return analyze(flow, lexicon, cost, threshold, matrices, only), threshold


def cmd_analyze(args, out) -> int:
    report, _ = _run_analysis(args)
    if args.format == "json":
        out.write(_dump({"config": _config(args), "report": report.to_dict()}))
    else:
        out.write(report.to_text())
    return EXIT_FINDINGS if report.flagged else EXIT_CLEAN


def cmd_suggest(args, out) -> int:
    report, _ = _run_analysis(args)
    plan = report.plan
    if args.format == "json":
        out.write(_dump({"config": _config(args), "plan": plan.to_dict()}))
    else:
        for node, word in sorted(plan.removals):
            out.write(f"remove {word} from {node}\n")
        for p in plan.unresolved:
            out.write(f"unresolved {p.word_a} ~ {p.word_b} at {p.node} (distance {p.distance:g})\n")
        if not plan.removals and not plan.unresolved:
            out.write("nothing to change\n")
    return EXIT_FINDINGS if report.flagged else EXIT_CLEAN


def cmd_calibrate(args, out) -> int:
    lexicon, _, cost = _load_inputs(args, need_callflow=False)
    t = calibrate_threshold(lexicon, *args.reference, cost=cost, margin=args.margin)
    if args.format == "json":
        out.write(_dump({"config": _config(args), "threshold": t.value, "margin": t.margin,
                         "limit": t.limit}))
    else:
        out.write(f"{t.value:g}\n")
    return EXIT_CLEAN


def cmd_simulate(args, out) -> int:
    lexicon, flow, cost = _load_inputs(args)
    channel = ConfusionChannel(args.sub_prob, args.ins_prob, args.del_prob, args.lattice_width, args.seed)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    diags = validate(flow, lexicon)
    fatal = [d for d in diags if d.code in (UNKNOWN_WORD, CYCLE, DANGLING_TRANSITION)]
    if fatal:
        raise UsageError("call flow is not valid: " + "; ".join(str(d) for d in fatal))
    _warn(diags)
    threshold = _threshold(args, lexicon, cost, required=False)
    if args.reject_above is not None:
        reject = args.reject_above
    elif threshold is not None:
        reject = threshold.value
    else:
        reject = NO_REJECTION
    if args.node and args.node not in flow.nodes:
        raise UsageError(f"no node {args.node!r} in call flow")
    if args.format == "csv" and not args.node:
        raise UsageError("--format csv needs --node")
    alphabet = lexicon.inventory()
    node_ids = [args.node] if args.node else sorted(flow.reachable())
    stats = [
        simulate_node(flow.nodes[n], lexicon, cost, channel, args.trials, reject, alphabet,
                      args.random_pronunciation)
        for n in node_ids if flow.nodes[n].services
    ]
    if args.format == "csv":
        out.write(stats[0].to_csv())
        return EXIT_CLEAN
    tx = simulate_transactions(flow, lexicon, cost, channel, args.trials, reject, alphabet,
                               args.random_pronunciation)
    if args.format == "json":
        config = _config(args)
        config["reject_above"] = None if math.isinf(reject) else reject
        out.write(_dump({
            "config": config,
            "channel": channel.to_dict(),
            "nodes": [s.to_dict() for s in stats],
            "transactions": tx.to_dict(),
        }))
    else:
        for s in stats:
            out.write(f"node {s.node}: accuracy {s.accuracy:.4f} over {s.trials_per_word} trials/word\n")
            for w, acc in s.word_accuracy.items():
                out.write(f"  {w}: {acc:.4f}\n")
        lo, hi = tx.ci
        out.write(f"transactions: completion rate {tx.completion_rate:.4f} "
                  f"(95% CI {lo:.4f}-{hi:.4f}, {tx.trials} trials)\n")
        for d, acc in enumerate(tx.depth_accuracy, 1):
            out.write(f"  depth {d}: accuracy {acc:.4f}\n")
    return EXIT_CLEAN


COMMANDS = {
    "matrix": cmd_matrix,
    "analyze": cmd_analyze,
    "suggest": cmd_suggest,
    "calibrate": cmd_calibrate,
    "simulate": cmd_simulate,
}

INPUT_ERRORS = (
    OSError, LexiconError, UnknownWordError, CallFlowError, CostModelError, MatrixFormatError,
    CalibrationError, SimulationError, UsageError, ValueError,
)


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except INPUT_ERRORS as exc:
        print(f"asrlint {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
