"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import HateDiffusionError, UsageError

log = logging.getLogger("hatediffusion")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _print_json(obj) -> None:
    from .reports import _clean

    print(json.dumps(_clean(obj), indent=2, sort_keys=True))


# --- subcommand handlers -----------------------------------------------------

def cmd_ingest(args):
    from .ingest import ingest_to_cache

    corpus = ingest_to_cache(args.posts, args.users, args.out, args.strict)
    stats = corpus.stats.to_dict()
    stats.update(skipped_posts=corpus.skipped_posts, skipped_users=corpus.skipped_users)
    _print_json(stats)


def cmd_graph_build(args):
    from .graph import build_repost_graph, save_graph
    from .ingest import load_cache

    corpus = load_cache(args.cache)
    g = build_repost_graph(corpus.posts, (u.id for u in corpus.users), args.self_loop)
    save_graph(g, Path(args.cache) / "graph.bin")
    _print_json({"nodes": g.n, "edges": g.n_edges, "unresolved_reposts": g.unresolved})


def cmd_score_lexicon(args):
    from .ingest import load_cache
    from .scoring import load_lexicon, score_lexicon, write_scores

    lex = load_lexicon(args.lexicon, plurals=not args.no_plurals)
    scores = score_lexicon(load_cache(args.cache).posts, lex)
    write_scores(args.out, scores)
    _print_json({"scored": len(scores), "matched": sum(1 for v in scores.values() if v == 1.0)})


def _load_graph(cache):
    from .graph import load_graph

    return load_graph(Path(cache) / "graph.bin")


def cmd_diffuse(args):
    from .diffusion import DiffusionConfig, diffuse, select_seeds
    from .graph import to_belief_network
    from .ingest import load_cache
    from .reports import write_beliefs
    from .scoring import load_scores

    corpus = load_cache(args.cache)
    scores = load_scores(args.scores)
    seeds, unknown = select_seeds(scores, corpus.posts, args.tau, args.min_posts)
    net = to_belief_network(_load_graph(args.cache))
    bv = diffuse(net, seeds, DiffusionConfig(args.iterations, args.mode), threads=args.threads)
    write_beliefs(args.out, bv)
    _print_json({"nodes": net.n, "seeds": int(bv.is_seed.sum()), "unknown_score_ids": unknown})


def cmd_segment(args):
    from .ingest import load_cache
    from .reports import read_beliefs
    from .segmentation import assign_groups, build_profiles, filter_active, group_counts, write_groups

    beliefs, _ = read_beliefs(args.beliefs)
    corpus = load_cache(args.cache)
    profiles = build_profiles(corpus.posts, corpus.users, args.reference_time)
    active, _ = filter_active(profiles, args.min_items, args.min_age_days)
    groups = assign_groups(beliefs, active, args.theta_low, args.theta_high, args.mode)
    write_groups(args.out, groups)
    _print_json(group_counts(groups))


def _analysis_inputs(args):
    from .ingest import load_cache
    from .segmentation import read_groups

    return load_cache(args.cache), read_groups(args.groups)


def cmd_analyze(args):
    from . import analytics
    from .reports import write_csv, write_json
    from .segmentation import build_profiles

    corpus, groups = _analysis_inputs(args)
    what = args.what
    if what in ("profile", "share"):
        profiles = build_profiles(corpus.posts, corpus.users, args.reference_time)
        if what == "profile":
            result = analytics.group_profile_stats(groups, profiles, corpus.users)
        else:
            result = analytics.content_share(groups, profiles)
    elif what == "centrality":
        cfg = analytics.CentralityConfig(
            exact_threshold=args.exact_threshold,
            pivots=args.pivots,
            seed=args.seed,
            weighted_pagerank=not args.unweighted_pagerank,
            threads=args.threads,
        )
        rep = analytics.centrality_suite(_load_graph(args.cache), groups, cfg)
        result = rep.to_dict()
        if args.csv:
            cols = analytics.CENTRALITY_COLUMNS
            write_csv(args.csv, ["user_id", *cols], ([u] + [rep.per_node[c][i] for c in cols] for i, u in enumerate(rep.ids)))
    elif what == "degree-dist":
        dd = analytics.degree_distribution(_load_graph(args.cache), groups, args.direction, args.weighted)
        result = {
            g: {"pk": rows, "log_binned": analytics.log_binned(rows, args.log_base)} for g, rows in dd.items()
        }
        if args.csv:
            write_csv(args.csv, ["group", "k", "p"], ([g, k, p] for g, rows in dd.items() for k, p in rows))
    elif what == "prevalence":
        from .scoring import load_scores

        if not args.scores:
            raise UsageError("analyze prevalence needs --scores")
        result = analytics.prevalence_stats(corpus.posts, load_scores(args.scores), args.tau, corpus.stats.n_users)
    elif what == "affect":
        if not args.affect:
            raise UsageError("analyze affect needs --affect")
        result = analytics.affect_aggregation(groups, analytics.read_affect(args.affect), corpus.posts)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(what)
    if args.out:
        write_json(args.out, result)
    _print_json(result)


def cmd_eval_pr(args):
    from .evaluation import pr_curve, read_binary_labels
    from .reports import write_csv
    from .scoring import load_scores

    points = pr_curve(load_scores(args.scores), read_binary_labels(args.labels, "post_id"))
    if args.out:
        write_csv(args.out, ["threshold", "precision", "recall"], ([p.threshold, p.precision, p.recall] for p in points))
    _print_json([p.__dict__ for p in points])


def cmd_eval_users(args):
    from .evaluation import read_binary_labels, user_level_eval
    from .reports import write_json
    from .segmentation import read_groups

    res = user_level_eval(read_groups(args.groups), read_binary_labels(args.labels)).to_dict()
    if args.out:
        write_json(args.out, res)
    _print_json(res)


def cmd_annotate(args):
    from . import annotations as ann

    if args.action == "aggregate":
        labels, counts = ann.aggregate_annotations(ann.read_annotations(args.annotations))
        if args.out:
            ann.write_labels(args.out, labels)
        _print_json(counts)
    elif args.action == "kappa":
        agreement, kappa = ann.pairwise_kappa(ann.read_annotations(args.annotations))
        _print_json({"agreement": agreement, "kappa": kappa})
    else:
        from .ingest import load_cache
        from .scoring import load_scores

        if not (args.cache and args.scores and args.per_stratum):
            raise UsageError("annotate sample needs --cache, --scores and --per-stratum")
        edges = [float(x) for x in args.strata.split(",")]
        per = [int(x) for x in args.per_stratum.split(",")]
        if len(per) == 1:
            per = per[0]
        try:
            ids = ann.stratified_sample(load_cache(args.cache).posts, load_scores(args.scores), edges, per, args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if args.out:
            Path(args.out).write_text("".join(f"{i}\n" for i in ids))
        _print_json({"sampled": len(ids)})


def cmd_synth(args):
    from .testkit import SynthConfig, synth_network, write_synth

    try:
        cfg = SynthConfig.from_keyfile(args.config) if args.config else SynthConfig()
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad synth config: {exc}") from exc
    corpus = synth_network(cfg)
    paths = write_synth(corpus, args.out)
    _print_json({"users": len(corpus.users), "posts": len(corpus.posts), "files": {k: str(v) for k, v in paths.items()}})


RUN_FLAGS = (
    "posts", "users", "scores", "affect", "user_labels", "out_dir", "self_loop", "tau", "min_posts",
    "iterations", "mode", "theta_low", "theta_high", "segmentation_mode", "min_items", "min_age_days",
    "reference_time", "exact_betweenness_threshold", "betweenness_pivots", "betweenness_seed", "threads",
)


def cmd_run(args):
    from .pipeline import PipelineConfig, run_pipeline

    overrides = {k: getattr(args, k) for k in RUN_FLAGS}
    if args.strict:
        overrides["strict"] = True
    cfg = PipelineConfig.from_keyfile(args.config, overrides)
    manifest = run_pipeline(cfg, force=args.force)
    _print_json({"out_dir": cfg.out_dir, "stages": manifest["stages"], "reports": sorted(manifest["reports"])})


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hatediffusion", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="parse post/user dumps into a cache directory")
    s.add_argument("--posts", required=True)
    s.add_argument("--users")
    s.add_argument("--strict", action="store_true")
    s.add_argument("--out", required=True, help="cache directory")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("graph", help="repost graph operations")
    gsub = s.add_subparsers(dest="action", required=True, parser_class=_Parser)
    b = gsub.add_parser("build")
    b.add_argument("--cache", required=True)
    b.add_argument("--self-loop", default="originals+replies", choices=["originals", "originals+replies", "all"])
    b.set_defaults(func=cmd_graph_build)

    s = sub.add_parser("score", help="post scoring baselines")
    ssub = s.add_subparsers(dest="action", required=True, parser_class=_Parser)
    lx = ssub.add_parser("lexicon")
    lx.add_argument("--lexicon", help="term file; defaults to the bundled placeholder list")
    lx.add_argument("--cache", required=True)
    lx.add_argument("--out", required=True)
    lx.add_argument("--no-plurals", action="store_true")
    lx.set_defaults(func=cmd_score_lexicon)

    s = sub.add_parser("diffuse", help="seed selection and belief diffusion")
    s.add_argument("--cache", required=True)
    s.add_argument("--scores", required=True)
    s.add_argument("--tau", type=float, default=0.95)
    s.add_argument("--min-posts", type=int, default=10)
    s.add_argument("--mode", choices=["standard", "clamped"], default="clamped")
    s.add_argument("--iterations", type=int, default=3)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_diffuse)

    s = sub.add_parser("segment", help="activity filter and HM / HM_TILDE / N assignment")
    s.add_argument("--beliefs", required=True)
    s.add_argument("--cache", required=True)
    s.add_argument("--theta-low", type=float, default=0.25)
    s.add_argument("--theta-high", type=float, default=0.75)
    s.add_argument("--mode", choices=["score_range", "population_quantile"], default="score_range")
    s.add_argument("--min-items", type=int, default=5)
    s.add_argument("--min-age-days", type=float, default=60.0)
    s.add_argument("--reference-time", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("analyze", help="group-level analytics")
    s.add_argument("what", choices=["profile", "share", "centrality", "degree-dist", "prevalence", "affect"])
    s.add_argument("--cache", required=True)
    s.add_argument("--groups", required=True)
    s.add_argument("--scores")
    s.add_argument("--affect")
    s.add_argument("--tau", type=float, default=0.95)
    s.add_argument("--reference-time", type=int)
    s.add_argument("--direction", choices=["in", "out"], default="in")
    s.add_argument("--weighted", action="store_true")
    s.add_argument("--log-base", type=float, default=2.0)
    s.add_argument("--exact-threshold", type=int, default=100_000)
    s.add_argument("--pivots", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--unweighted-pagerank", action="store_true")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--csv", help="also write a per-row CSV table")
    s.add_argument("--out", help="JSON report path")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("eval", help="post-level PR curves and user-level metrics")
    esub = s.add_subparsers(dest="action", required=True, parser_class=_Parser)
    pr = esub.add_parser("pr")
    pr.add_argument("--scores", required=True)
    pr.add_argument("--labels", required=True, help="CSV post_id,label")
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_eval_pr)
    us = esub.add_parser("users")
    us.add_argument("--groups", required=True)
    us.add_argument("--labels", required=True, help="CSV user_id,label")
    us.add_argument("--out")
    us.set_defaults(func=cmd_eval_users)

    s = sub.add_parser("annotate", help="annotation aggregation, agreement and sampling")
    s.add_argument("action", choices=["aggregate", "kappa", "sample"])
    s.add_argument("--annotations", help="CSV post_id,score1,score2,score3")
    s.add_argument("--cache")
    s.add_argument("--scores")
    s.add_argument("--strata", default="0,0.25,0.5,0.75,1.0")
    s.add_argument("--per-stratum", help="one count, or one per stratum (comma separated)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_annotate)

    s = sub.add_parser("synth", help="generate a synthetic corpus")
    s.add_argument("--config", help="key = value file of SynthConfig fields")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("run", help="full pipeline from a key = value config file")
    s.add_argument("--config")
    s.add_argument("--force", action="store_true", help="re-run cached stages")
    s.add_argument("--strict", action="store_true")
    for flag in RUN_FLAGS:
        s.add_argument("--" + flag.replace("_", "-"), dest=flag)
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "annotate" and args.action in ("aggregate", "kappa") and not args.annotations:
        try:
            parser.error("annotate aggregate/kappa needs --annotations")
        except SystemExit as exc:
            return exc.code
    try:
        args.func(args)
    except HateDiffusionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
