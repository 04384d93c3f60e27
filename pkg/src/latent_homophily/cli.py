"""Command-line drivers.

Exit codes: 0 success, 1 a test stage failed, 2 bad input or configuration.
Reports are JSON on stdout (or ``--out``); a short table goes to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .network import (ConfigurationError, DirectedInfluenceGraph, IngestError, NodeStateSeries,
                      build_coauthor_graph, dump_records, ingest_records, parse_scheme, window_slices)
from .pipeline import (UNKNOWN, AnalysisConfig, RunReport, analyze_series, analyze_windows, digest,
                       verify_report)
from .relaxation import RelaxationLevelError, Tolerances, build_moment_feasibility
from .sdp import SolverOptions, solve
from .sdp.sdpa import SdpaFormatError, read_sdpa, write_sdpa
from .simulator import SimulationConfig, preferential_attachment_influence, run, run_latent
from .statistics import EmpiricalDistribution, pair_sequence_counts
from .synthetic import SyntheticCorpusConfig, synthetic_records

EXIT_OK, EXIT_STAGE, EXIT_INPUT = 0, 1, 2

logger = logging.getLogger("latent_homophily")


class InputError(Exception):
    """Reported to the user with exit code 2."""


# ---------------------------------------------------------------------------
# helpers

def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _read_json(path: str):
    data = _read_bytes(path)
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _write(path: Optional[str], text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _note(obj):
    sys.stderr.write(json.dumps(obj, sort_keys=True) + "\n")


def _year_range(text: Optional[str]):
    if text is None:
        return None
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise InputError(f"year range must look like START:END, got {text!r}") from None
    if hi <= lo:
        raise InputError(f"empty year range {text!r}")
    return lo, hi


def _fmt_of(path: str, given: Optional[str]) -> str:
    if given:
        return given
    return "jsonl" if path.endswith((".jsonl", ".json")) else "csv"


def _load_graph(path: str) -> DirectedInfluenceGraph:
    data = _read_json(path)
    try:
        return DirectedInfluenceGraph.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path} is not a graph file: {exc}") from None


def _load_series(path: str) -> NodeStateSeries:
    try:
        return NodeStateSeries.from_json(_read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path} is not a state-series file: {exc}") from None


def _config(args) -> AnalysisConfig:
    return AnalysisConfig(
        level=args.level, epsilon=args.epsilon, min_samples=args.min_samples,
        tolerances=Tolerances(psd=args.tol_psd, identity=args.tol_id, margin=args.tol_margin),
        solver=SolverOptions(max_iterations=args.max_iterations, tol_gap=args.tol_gap, tol_feas=args.tol_feas),
    )


def _table(reports: Sequence[RunReport]):
    err = sys.stderr
    err.write(f"{'window':<12} {'samples':>9} {'verdict':<8} detail\n")
    for r in reports:
        label = r.window.label() if r.window is not None else "-"
        if r.check is not None and r.verdict != UNKNOWN:
            detail = f"margin={r.check.margin:.3g} identity={r.check.identity_residual:.1e}"
        else:
            detail = r.reason or ""
        err.write(f"{label:<12} {r.sample_total:>9} {r.verdict:<8} {detail}\n")


# ---------------------------------------------------------------------------
# subcommands

def cmd_ingest(args) -> int:
    records = ingest_records(_read_bytes(args.input), format=_fmt_of(args.input, args.format),
                             year_range=_year_range(args.year_range))
    if args.out:
        Path(args.out).write_bytes(dump_records(records, format=_fmt_of(args.out, args.out_format)))
    if args.graph_out:
        years = [r.year for r in records]
        window = _year_range(args.edge_window) or ((min(years), max(years) + 1) if years else (0, 1))
        Path(args.graph_out).write_text(_dump(build_coauthor_graph(records, window).to_json()), encoding="utf-8")
    authors = {a for r in records for a in r.authors}
    summary = {"records": len(records), "authors": len(authors),
               "years": [min(r.year for r in records), max(r.year for r in records)] if records else None,
               "digest": digest(_read_bytes(args.input))}
    _note(summary)
    return EXIT_OK


def cmd_gen_synthetic(args) -> int:
    years = _year_range(args.years)
    cfg = SyntheticCorpusConfig(n_authors=args.authors, years=years, papers_per_year=args.papers_per_year,
                                reference_pool=args.reference_pool, coauthor_density=args.density,
                                refs_per_paper=args.refs_per_paper, topics=args.topics, seed=args.seed)
    data = dump_records(synthetic_records(cfg), format=_fmt_of(args.out, args.format))
    Path(args.out).write_bytes(data)
    _note({"config": cfg.to_json(), "digest": digest(data)})
    return EXIT_OK


def _simulation_graph(args) -> DirectedInfluenceGraph:
    if args.graph:
        return _load_graph(args.graph)
    if args.pa_nodes:
        return preferential_attachment_influence(args.pa_nodes, args.pa_m, args.seed)
    raise InputError("simulate needs --graph FILE or --pa-nodes N")


def cmd_simulate(args) -> int:
    graph = _simulation_graph(args)
    cfg = SimulationConfig(seed=args.seed, T=args.T, picks_per_step=args.picks, references=args.references)
    series = run_latent(graph, cfg, types=args.latent) if args.latent else run(graph, cfg)
    if args.graph_out:
        Path(args.graph_out).write_text(_dump(graph.to_json()), encoding="utf-8")
    _write(args.out, _dump(series.to_json()))
    return EXIT_OK


def _distribution(args) -> EmpiricalDistribution:
    if args.stats:
        try:
            return EmpiricalDistribution.from_json(_read_json(args.stats))
        except (KeyError, ValueError) as exc:
            raise InputError(f"{args.stats} is not a statistics file: {exc}") from None
    if args.series and args.graph:
        return pair_sequence_counts(_load_series(args.series), _load_graph(args.graph))
    raise InputError("need --stats FILE or --series FILE --graph FILE")


def cmd_stats(args) -> int:
    dist = _distribution(args)
    _write(args.out, _dump(dist.to_json()))
    return EXIT_OK


def _records_provenance(args, digest_value):
    return {"command": "test", "version": __version__, "records": str(args.records), "format": args.format,
            "records_digest": digest_value, "scheme": args.scheme, "corpus_range": args.corpus_range, "T": args.T}


def _test_records(args, config) -> List[RunReport]:
    raw = _read_bytes(args.records)
    records = ingest_records(raw, format=_fmt_of(args.records, args.format))
    if not records:
        raise InputError(f"{args.records} holds no records")
    corpus = _year_range(args.corpus_range) or (min(r.year for r in records), max(r.year for r in records) + 1)
    windows = window_slices(corpus, parse_scheme(args.scheme), T=args.T)
    if args.window:
        windows = [w for w in windows if w.label() in set(args.window)]
    prov = _records_provenance(args, digest(raw))
    return analyze_windows(records, windows, config, jobs=args.jobs, provenance=prov)


def _test_series(args, config) -> List[RunReport]:
    series_raw, graph_raw = _read_bytes(args.series), _read_bytes(args.graph)
    series, graph = _load_series(args.series), _load_graph(args.graph)
    prov = {"command": "test", "version": __version__, "series": str(args.series), "graph": str(args.graph),
            "series_digest": digest(series_raw), "graph_digest": digest(graph_raw)}
    return [analyze_series(series, graph, config, provenance=prov)]


def _replay(args) -> int:
    data = _read_json(args.replay)
    reports = [RunReport.from_json(d) for d in (data if isinstance(data, list) else [data])]
    mismatches = 0
    for rep in reports:
        prov = rep.provenance
        config = AnalysisConfig.from_json(prov["config"])
        if "records" in prov:
            raw = _read_bytes(prov["records"])
            if digest(raw) != prov["records_digest"]:
                raise InputError(f"{prov['records']} changed since the report was made")
            records = ingest_records(raw, format=_fmt_of(prov["records"], prov.get("format")))
            new = analyze_windows(records, [rep.window], config)[0]
        else:
            for key in ("series", "graph"):
                if digest(_read_bytes(prov[key])) != prov[f"{key}_digest"]:
                    raise InputError(f"{prov[key]} changed since the report was made")
            new = analyze_series(_load_series(prov["series"]), _load_graph(prov["graph"]), config, provenance=prov)
        label = rep.window.label() if rep.window else "-"
        same = new.verdict == rep.verdict
        mismatches += not same
        sys.stderr.write(f"{label}: recorded {rep.verdict}, replayed {new.verdict}{'' if same else '  MISMATCH'}\n")
        if rep.certificate is not None:
            check = verify_report(rep)
            sys.stderr.write(f"{label}: embedded certificate {'valid' if check.valid else 'INVALID: ' + check.reason}\n")
            mismatches += not check.valid
    return EXIT_OK if mismatches == 0 else EXIT_STAGE


def cmd_test(args) -> int:
    if args.replay:
        return _replay(args)
    config = _config(args)
    if args.records:
        reports = _test_records(args, config)
    elif args.series and args.graph:
        reports = _test_series(args, config)
    else:
        raise InputError("test needs --records FILE, --series FILE --graph FILE, or --replay REPORT")
    _write(args.out, _dump([r.to_json() for r in reports]))
    _table(reports)
    failed = [r for r in reports if r.reason and r.reason.startswith("error:")]
    return EXIT_STAGE if failed else EXIT_OK


def cmd_export_sdpa(args) -> int:
    dist = _distribution(args)
    try:
        relax = build_moment_feasibility(dist.y_hat, level=args.level, epsilon=args.epsilon)
    except RelaxationLevelError as exc:
        raise InputError(str(exc)) from None
    write_sdpa(relax.problem, args.out)
    _note({"blocks": relax.problem.block_structure, "equalities": relax.problem.n_equalities,
           "variables": relax.problem.n_vars, "out": args.out})
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        problem = read_sdpa(args.problem)
    except OSError as exc:
        raise InputError(f"cannot read {args.problem}: {exc}") from None
    options = SolverOptions(max_iterations=args.max_iterations, tol_gap=args.tol_gap, tol_feas=args.tol_feas)
    if args.external:
        from .sdp.external import ExternalSolverError, solve_via_export

        try:
            out = solve_via_export(problem, args.external.split() if args.external != "reference" else None, options)
        except ExternalSolverError as exc:
            sys.stderr.write(f"error: {exc}\n")
            return EXIT_STAGE
    else:
        out = solve(problem, options)
    summary = {"status": out.status, "iterations": out.iterations, "t_star": out.t_star,
               "residuals": out.residuals, "solver_status": out.solver_status, "seconds": round(out.seconds, 3)}
    if out.ray is not None:
        summary["ray"] = {"margin": out.ray.margin, "residual": out.ray.residual,
                          "min_eigenvalue": out.ray.min_eigenvalue}
    if args.witness and out.y is not None:
        summary["y"] = np.asarray(out.y).tolist()
    _write(args.out, _dump(summary))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _global_options(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies use SUPPRESS so they do not overwrite flags given before the subcommand
    def d(value):
        return argparse.SUPPRESS if suppress else value

    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    g.add_argument("--level", type=int, default=d(3), help="relaxation level (default 3)")
    g.add_argument("--T", type=int, default=d(3), help="time slices per window (default 3)")
    g.add_argument("--jobs", type=int, default=d(1), help="windows processed in parallel")
    g.add_argument("--epsilon", type=float, default=d(0.0), help="interval half-width on observed frequencies")
    g.add_argument("--min-samples", type=int, default=d(1000), help="refuse to test below this many samples")
    g.add_argument("--tol-psd", type=float, default=d(1e-8))
    g.add_argument("--tol-id", type=float, default=d(1e-8))
    g.add_argument("--tol-margin", type=float, default=d(1e-6))
    g.add_argument("--tol-feas", type=float, default=d(1e-7))
    g.add_argument("--tol-gap", type=float, default=d(1e-8))
    g.add_argument("--max-iterations", type=int, default=d(60))
    g.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_options(suppress=True)
    ap = argparse.ArgumentParser(prog="latent-homophily", parents=[_global_options(suppress=False)],
                                 description="Test citation-network correlations against static latent homophily.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="parse and normalize citation records")
    p.add_argument("input")
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--year-range", help="keep records with START <= year < END")
    p.add_argument("--out", help="write normalized records")
    p.add_argument("--out-format", choices=("csv", "jsonl"))
    p.add_argument("--graph-out", help="write the coauthor graph as JSON")
    p.add_argument("--edge-window", help="years whose papers define coauthor edges, START:END")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("gen-synthetic", parents=[common], help="generate a synthetic citation corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--years", default="1945:2014")
    p.add_argument("--authors", type=int, default=400)
    p.add_argument("--papers-per-year", type=int, default=30)
    p.add_argument("--reference-pool", type=int, default=120)
    p.add_argument("--refs-per-paper", type=int, default=6)
    p.add_argument("--density", type=float, default=0.5, help="probability of each extra coauthor")
    p.add_argument("--topics", type=int, default=6)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("simulate", parents=[common], help="run copy dynamics on an influence graph")
    p.add_argument("--graph", help="coauthor or influence graph JSON")
    p.add_argument("--pa-nodes", type=int, help="use a preferential-attachment graph of N nodes instead")
    p.add_argument("--pa-m", type=int, default=5, help="edges per new node in that graph")
    p.add_argument("--picks", type=int, help="picks per step (default: number of arcs)")
    p.add_argument("--references", type=int, default=1, help="independent reference channels per author")
    p.add_argument("--latent", type=int, default=0, metavar="K",
                   help="hidden-variable control with K latent classes instead of copying")
    p.add_argument("--graph-out", help="also write the influence graph used")
    p.add_argument("--out", help="series JSON (default stdout)")
    p.set_defaults(func=cmd_simulate)

    def dist_inputs(p):
        p.add_argument("--stats", help="statistics JSON")
        p.add_argument("--series", help="state-series JSON")
        p.add_argument("--graph", help="graph JSON")

    p = sub.add_parser("stats", parents=[common], help="pooled outcome counts of a series")
    dist_inputs(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("test", parents=[common], help="run the latent-homophily test")
    p.add_argument("--records", help="citation records (csv or jsonl)")
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--scheme", default="three_period", help="three_period or span:YEARS:START:STRIDE")
    p.add_argument("--corpus-range", help="START:END, default from the records")
    p.add_argument("--window", action="append", help="only windows with this label (repeatable)")
    p.add_argument("--series")
    p.add_argument("--graph")
    p.add_argument("--replay", help="re-run the provenance of a report file and compare verdicts")
    p.add_argument("--out", help="report JSON (default stdout)")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("export-sdpa", parents=[common], help="write the relaxation as SDPA sparse format")
    dist_inputs(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_sdpa)

    p = sub.add_parser("solve", parents=[common], help="solve an SDPA feasibility problem")
    p.add_argument("problem")
    p.add_argument("--external", help="'reference' or a solver command taking INPUT OUTPUT")
    p.add_argument("--witness", action="store_true", help="include the solution vector")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, IngestError, ConfigurationError, SdpaFormatError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
