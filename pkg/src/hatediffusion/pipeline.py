"""End-to-end pipeline: ingest, graph, seeds, diffusion, segmentation,
analytics and evaluation, with digest-keyed stage caching and a manifest."""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analytics import (
    CENTRALITY_COLUMNS,
    CentralityConfig,
    affect_aggregation,
    centrality_suite,
    content_share,
    degree_distribution,
    group_profile_stats,
    log_binned,
    prevalence_stats,
    profile_samples,
    read_affect,
    trimmed,
)
from .diffusion import CLAMPED, MODES, STANDARD, DiffusionConfig, diffuse, select_seeds
from .errors import DataError, HateDiffusionError, UsageError
from .evaluation import read_binary_labels, user_level_eval
from .graph import SELF_LOOP_POLICIES, build_repost_graph, load_graph, save_graph, to_belief_network
from .ingest import ingest_to_cache, load_cache
from .keyfile import read_keyfile
from .reports import sha256_file, write_beliefs, write_csv, write_json
from .scoring import load_scores
from .segmentation import (
    ALL_GROUPS,
    GROUPS,
    POPULATION_QUANTILE,
    SCORE_RANGE,
    assign_groups,
    build_profiles,
    filter_active,
    group_counts,
    write_groups,
)

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    posts: str = ""
    users: str = ""
    scores: str = ""
    affect: str = ""
    user_labels: str = ""
    out_dir: str = "run_out"
    strict: bool = False
    self_loop: str = "originals+replies"
    tau: float = 0.95
    min_posts: int = 10
    iterations: int = 3
    mode: str = CLAMPED
    theta_low: float = 0.25
    theta_high: float = 0.75
    segmentation_mode: str = SCORE_RANGE
    min_items: int = 5
    min_age_days: float = 60.0
    reference_time: Optional[int] = None
    exact_betweenness_threshold: int = 100_000
    betweenness_pivots: int = 1000
    betweenness_seed: int = 0
    weighted_pagerank: bool = True
    degree_direction: str = "in"
    log_base: float = 2.0
    threads: int = 1

    def validate(self) -> None:
        for name in ("posts", "scores"):
            if not getattr(self, name):
                raise UsageError(f"config is missing required path {name!r}")
        for name in ("posts", "users", "scores", "affect", "user_labels"):
            p = getattr(self, name)
            if p and not Path(p).exists():
                raise UsageError(f"{name} path does not exist: {p}")
        if self.self_loop not in SELF_LOOP_POLICIES:
            raise UsageError(f"self_loop must be one of {sorted(SELF_LOOP_POLICIES)}")
        if self.mode not in MODES:
            raise UsageError(f"mode must be one of {MODES}")
        if self.segmentation_mode not in (SCORE_RANGE, POPULATION_QUANTILE):
            raise UsageError("segmentation_mode must be score_range or population_quantile")
        if not 0.0 <= self.theta_low < self.theta_high <= 1.0:
            raise UsageError("need 0 <= theta_low < theta_high <= 1")
        if not 0.0 <= self.tau <= 1.0:
            raise UsageError("tau must lie in [0, 1]")
        if self.iterations < 1 or self.min_posts < 1 or self.threads < 1:
            raise UsageError("iterations, min_posts and threads must be positive")
        if self.degree_direction not in ("in", "out"):
            raise UsageError("degree_direction must be 'in' or 'out'")
        if self.log_base <= 1.0:
            raise UsageError("log_base must exceed 1")

    @classmethod
    def from_mapping(cls, raw: dict) -> "PipelineConfig":
        cfg = cls()
        types = {f.name: f.type for f in fields(cls)}
        for key, value in raw.items():
            key = key.replace("-", "_")
            if key not in types:
                raise UsageError(f"unknown config key {key!r}")
            if value is None:
                continue
            setattr(cfg, key, _coerce(key, types[key], value))
        return cfg

    @classmethod
    def from_keyfile(cls, path, overrides: Optional[dict] = None) -> "PipelineConfig":
        raw = read_keyfile(path) if path else {}
        raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_mapping(raw)


def _coerce(key, typ, value):
    if not isinstance(value, str):
        return value
    try:
        if typ in ("bool", bool):
            low = value.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(value)
            return low in ("1", "true", "yes", "on")
        if typ in ("int", int):
            return int(value)
        if typ in ("float", float):
            return float(value)
        if "int" in str(typ):
            return int(value) if value.strip() else None
    except ValueError:
        raise UsageError(f"bad value for {key}: {value!r}") from None
    return value


def _digest_obj(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


class StageRunner:
    """Skips a stage when its key (parameters + input digests) matches the cache
    record and all of its outputs still exist."""

    def __init__(self, cache_dir: Path, force: bool = False):
        self.cache_dir = cache_dir
        self.force = force
        self.record_path = cache_dir / "stages.json"
        self.records = {}
        if self.record_path.exists():
            try:
                self.records = json.loads(self.record_path.read_text())
            except ValueError:
                self.records = {}
        self.executed: list[str] = []
        self.skipped: list[str] = []

    def run(self, name: str, key: dict, outputs: list[Path], fn):
        digest = _digest_obj(key)
        if not self.force and self.records.get(name) == digest and all(p.exists() for p in outputs):
            self.skipped.append(name)
            return False
        try:
            fn()
        except HateDiffusionError as exc:
            raise type(exc)(f"stage {name!r} failed: {exc}") from exc
        except (ValueError, OSError) as exc:
            raise DataError(f"stage {name!r} failed: {exc}") from exc
        self.records[name] = digest
        self.record_path.write_text(json.dumps(self.records, indent=2, sort_keys=True) + "\n")
        self.executed.append(name)
        return True


def _tables(out: Path, tag: str, report: dict, samples: dict) -> list[Path]:
    """Flatten the profile statistics into plot-ready CSVs."""
    paths = []
    rows = []
    for g, metrics in report.items():
        for metric, st in metrics.items():
            if isinstance(st, dict):
                rows.append([g, metric, st["n"], st["mean"], st["median"], st["std"], st["trim_low"], st["trim_high"]])
            else:
                rows.append([g, metric, "", st, "", "", "", ""])
    paths.append(write_csv(out / f"{tag}.csv", ["group", "metric", "n", "mean", "median", "std", "trim_low", "trim_high"], rows))
    trimmed_rows = []
    for g, metrics in samples.items():
        for metric in ("posts", "replies", "reposts", "age_days", "followers", "followees", "bio_length"):
            for v in trimmed(metrics.get(metric, [])):
                trimmed_rows.append([g, metric, float(v)])
    paths.append(write_csv(out / f"{tag}_trimmed.csv", ["group", "metric", "value"], trimmed_rows))
    return paths


def run_pipeline(config: PipelineConfig, force: bool = False) -> dict:
    """Execute every stage and write reports plus ``manifest.json``.

    Returns the manifest as a dict.
    """
    config.validate()
    out = Path(config.out_dir)
    cache = out / "cache"
    reports = out / "reports"
    cache.mkdir(parents=True, exist_ok=True)
    reports.mkdir(parents=True, exist_ok=True)
    inputs = {
        name: sha256_file(getattr(config, name))
        for name in ("posts", "users", "scores", "affect", "user_labels")
        if getattr(config, name)
    }
    params = asdict(config)
    runner = StageRunner(cache, force)

    runner.run(
        "ingest",
        {"posts": inputs["posts"], "users": inputs.get("users"), "strict": config.strict},
        [cache / "posts.jsonl", cache / "corpus_stats.json"],
        lambda: ingest_to_cache(config.posts, config.users or None, cache, config.strict),
    )
    graph_path = cache / "graph.bin"

    def _graph():
        corpus = load_cache(cache)
        g = build_repost_graph(corpus.posts, (u.id for u in corpus.users), config.self_loop)
        save_graph(g, graph_path)

    runner.run(
        "graph",
        {"ingest": runner.records.get("ingest"), "self_loop": config.self_loop},
        [graph_path],
        _graph,
    )

    corpus = load_cache(cache)
    graph = load_graph(graph_path)
    scores = load_scores(config.scores)
    net = to_belief_network(graph)
    seeds, unknown = select_seeds(scores, corpus.posts, config.tau, config.min_posts)

    written: list[Path] = []
    beliefs = {}
    for mode in (CLAMPED, STANDARD):
        bv = diffuse(net, seeds, DiffusionConfig(config.iterations, mode), threads=config.threads)
        beliefs[mode] = bv
        written.append(write_beliefs(reports / f"beliefs_{mode}.csv", bv))

    profiles = build_profiles(corpus.posts, corpus.users, config.reference_time)
    active, inactive = filter_active(profiles, config.min_items, config.min_age_days)
    groups = {}
    for mode, bv in beliefs.items():
        groups[mode] = assign_groups(
            bv.as_dict(), active, config.theta_low, config.theta_high, config.segmentation_mode
        )
    primary = groups[config.mode]
    written.append(_write_groups(reports / "groups.csv", primary))
    written.append(_write_groups(reports / f"groups_{STANDARD if config.mode == CLAMPED else CLAMPED}.csv",
                                 groups[STANDARD if config.mode == CLAMPED else CLAMPED]))

    counts = group_counts(primary)
    n_active = sum(counts[g] for g in GROUPS)
    summary: dict = {
        "corpus": json.loads((cache / "corpus_stats.json").read_text()),
        "graph": {"nodes": graph.n, "edges": graph.n_edges, "unresolved_reposts": graph.unresolved},
        "seeds": {"count": len(seeds), "unknown_score_ids": unknown},
        "groups": {
            "counts": counts,
            "active_share": {g: (counts[g] / n_active if n_active else 0.0) for g in GROUPS},
            "inactive_share": counts["INACTIVE"] / len(primary) if primary else 0.0,
        },
    }
    written.append(write_csv(
        reports / "group_shares.csv",
        ["group", "count", "share_of_active"],
        [[g, counts[g], summary["groups"]["active_share"][g]] for g in GROUPS],
    ))

    prof = group_profile_stats(primary, profiles, corpus.users)
    summary["profile"] = prof
    written += _tables(reports, "profile_stats", prof, profile_samples(primary, profiles, corpus.users))

    share = content_share(primary, profiles)
    summary["content_share"] = share
    written.append(write_csv(
        reports / "content_share.csv",
        ["kind"] + list(GROUPS),
        [[k] + [share[k][g] for g in GROUPS] for k in share],
    ))

    ccfg = CentralityConfig(
        exact_threshold=config.exact_betweenness_threshold,
        pivots=config.betweenness_pivots,
        seed=config.betweenness_seed,
        weighted_pagerank=config.weighted_pagerank,
        threads=config.threads,
    )
    cent = centrality_suite(graph, primary, ccfg)
    summary["centrality"] = cent.to_dict()
    written.append(write_csv(
        reports / "centrality.csv",
        ["group"] + list(CENTRALITY_COLUMNS),
        [[g] + [m[c] for c in CENTRALITY_COLUMNS] for g, m in cent.group_means.items()],
    ))

    dd = degree_distribution(graph, primary, config.degree_direction)
    written.append(write_csv(
        reports / "degree_distribution.csv", ["group", "k", "p"],
        [[g, k, p] for g, rows in dd.items() for k, p in rows],
    ))
    written.append(write_csv(
        reports / "degree_distribution_logbinned.csv", ["group", "lo", "hi", "mass", "density"],
        [[g, r["lo"], r["hi"], r["mass"], r["density"]] for g, rows in dd.items() for r in log_binned(rows, config.log_base)],
    ))

    summary["prevalence"] = prevalence_stats(corpus.posts, scores, config.tau, corpus.stats.n_users)

    if config.affect:
        aff = affect_aggregation(primary, read_affect(config.affect), corpus.posts)
        summary["affect"] = aff
        written.append(write_csv(
            reports / "affect.csv",
            ["group", "n_posts", "anger", "joy", "sadness", "fear", "love", "surprise", "median_sentiment"],
            [[g, a["n_posts"]] + [a["emotions"][e] for e in ("anger", "joy", "sadness", "fear", "love", "surprise")]
             + [a["median_sentiment"]] for g, a in aff.items()],
        ))

    if config.user_labels:
        labels = read_binary_labels(config.user_labels)
        summary["user_eval"] = {mode: user_level_eval(groups[mode], labels).to_dict() for mode in (CLAMPED, STANDARD)}

    written.append(write_json(reports / "summary.json", summary))

    manifest = {
        "version": __version__,
        "parameters": params,
        "inputs": inputs,
        "stages": {"executed": runner.executed, "skipped": runner.skipped},
        "reports": {p.relative_to(out).as_posix(): sha256_file(p) for p in sorted(written)},
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def _write_groups(path: Path, assignments) -> Path:
    write_groups(path, assignments)
    return path


def report_digests(out_dir) -> dict[str, str]:
    """Digest of every file under ``reports/``, for determinism checks."""
    base = Path(out_dir) / "reports"
    return {p.name: sha256_file(p) for p in sorted(base.iterdir()) if p.is_file()}
