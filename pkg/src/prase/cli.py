"""Command-line entry point: ``prase {align,paris,eval,synth}``.

Exit status is 0 on success, 1 on data or run errors and 2 on usage or
configuration errors.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import build_config, set_option
from .evaluation import score
from .ingest import (
    ConfigError,
    DataError,
    PerturbationSpec,
    dump_openea,
    generate_kg,
    load_openea,
    read_links,
    read_mappings,
    synthesize_pair,
    write_mappings,
)
from .orchestrator import PhaseError, run

log = logging.getLogger("prase")


def _workers(flag):
    value = flag if flag is not None else os.environ.get("PRASE_WORKERS")
    return None if value is None else max(1, int(value))


def _add_run_args(p):
    p.add_argument("--data", required=True, help="OpenEA-style dataset directory")
    p.add_argument("--out", required=True, help="output mapping TSV")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="config override, repeatable (e.g. --set K=3 --set reasoner.beta=0.8)")
    p.add_argument("--report", help="key=value run report (default: <out>.report)")
    p.add_argument("--workers", type=int, help="reasoner worker threads (fallback: $PRASE_WORKERS)")
    p.add_argument("--dump-subrelations", metavar="PATH", help="write final sub-relation probabilities")
    p.add_argument("--dump-vectors", metavar="PATH", help="write final entity vectors")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prase", description="Unsupervised knowledge graph entity alignment.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="run the full reasoning/embedding loop")
    _add_run_args(p)
    p = sub.add_parser("paris", help="reasoner only (shorthand for K=0)")
    _add_run_args(p)

    p = sub.add_parser("eval", help="score a mapping file against gold links")
    p.add_argument("--pred", required=True, help="mapping TSV (label1, label2, prob)")
    p.add_argument("--gold", required=True, help="gold links TSV (label1, label2)")
    p.add_argument("--out", help="write metrics as key=value lines")
    p.add_argument("--name", default="model", help="row label in the printed table")

    p = sub.add_parser("synth", help="write a synthetic perturbed-copy dataset pair")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--source", help="take KG1 from this OpenEA directory instead of generating one")
    p.add_argument("--entities", type=int, default=1000)
    p.add_argument("--relations", type=int, default=12)
    p.add_argument("--degree", type=float, default=5.0, help="mean relation-triple degree of generated entities")
    p.add_argument("--kg-seed", type=int, default=0)
    p.add_argument("--triple-drop", type=float, default=0.0)
    p.add_argument("--attribute-drop", type=float, default=0.0)
    p.add_argument("--literal-corruption", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0, help="perturbation and renaming seed")
    return parser


def _cmd_run(args, paris: bool) -> int:
    cfg = build_config(args.config, args.overrides)
    if paris:
        set_option(cfg, "K", "0")
    workers = _workers(args.workers)
    if workers is not None:
        cfg.reasoner.workers = workers
    cfg.validate()
    pair = load_openea(args.data)
    report_path = args.report or f"{args.out}.report"
    state = {}
    try:
        mappings, report = run(pair, cfg, state_out=state)
    except PhaseError as exc:
        exc.report.write(report_path)
        log.error("run aborted in %s: %s (partial report in %s)", exc.phase, exc.cause, report_path)
        return 1
    write_mappings(mappings, args.out)
    report.mapping_path = str(args.out)
    report.write(report_path)
    st = state["state"]
    if args.dump_subrelations:
        st.subrel.dump(args.dump_subrelations, st.problem.view1, st.problem.view2)
    if args.dump_vectors and st.embeddings is not None:
        st.embeddings.dump(args.dump_vectors, pair.kg1, pair.kg2)
    print(report.summary())
    for k, v in report.config.items():
        print(f"  {k} = {v}")
    if report.metrics:
        m = report.metrics
        print(f"P={m['precision']:.3f} R={m['recall']:.3f} F1={m['f1']:.3f}")
    print(f"{len(mappings)} mappings written to {args.out}; report in {report_path}")
    return 0


def _cmd_eval(args) -> int:
    pred = read_mappings(args.pred)
    gold = read_links(args.gold)
    metrics = score(pred, gold)
    print(metrics.table(args.name))
    if args.out:
        Path(args.out).write_text(metrics.to_kv(), encoding="utf-8")
    return 0


def _cmd_synth(args) -> int:
    spec = PerturbationSpec(args.triple_drop, args.attribute_drop, args.literal_corruption, args.seed).validate()
    if args.source:
        kg = load_openea(args.source).kg1
    else:
        kg = generate_kg(args.entities, args.relations, args.degree, seed=args.kg_seed)
    pair = synthesize_pair(kg, spec)
    dump_openea(pair, args.out)
    print(f"wrote {args.out}: kg1 {pair.kg1.stats()}, kg2 {pair.kg2.stats()}, {len(pair.gold)} gold links")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("align", "paris"):
            return _cmd_run(args, paris=args.command == "paris")
        if args.command == "eval":
            return _cmd_eval(args)
        return _cmd_synth(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
