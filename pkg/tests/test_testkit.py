import math

import numpy as np
import pytest

from hatediffusion.diffusion import DiffusionConfig, diffuse, select_seeds
from hatediffusion.graph import build_repost_graph, to_belief_network
from hatediffusion.ingest import load_cache, ingest_to_cache
from hatediffusion.testkit import CounterRNG, SynthConfig, splitmix64, synth_network, write_synth


def test_splitmix_reference_value():
    # first output of the reference SplitMix64 stream seeded with 0
    assert splitmix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF


def test_counter_rng_is_random_access():
    a, b = CounterRNG(7), CounterRNG(7)
    seq = [a.uniform() for _ in range(20)]
    assert seq == [b.at(k) for k in range(20)]
    assert all(0.0 <= u < 1.0 for u in seq)
    assert seq != [CounterRNG(8).uniform() for _ in range(20)]


def test_geometric_mean():
    rng = CounterRNG(1)
    draws = [rng.geometric(6.0) for _ in range(20000)]
    assert abs(np.mean(draws) - 6.0) < 0.3


def test_same_seed_same_bytes(tmp_path):
    cfg = SynthConfig(n_users=200, community_sizes=[30], rng_seed=4)
    pa = write_synth(synth_network(cfg), tmp_path / "a")
    pb = write_synth(synth_network(cfg), tmp_path / "b")
    for key in pa:
        assert pa[key].read_bytes() == pb[key].read_bytes()
    pc = write_synth(synth_network(SynthConfig(n_users=200, community_sizes=[30], rng_seed=5)), tmp_path / "c")
    assert pc["posts"].read_bytes() != pa["posts"].read_bytes()


def test_zero_rates_give_only_self_loops():
    corpus = synth_network(SynthConfig(n_users=100, intra_rate=0.0, cross_rate=0.0))
    g = build_repost_graph(corpus.posts, (u.id for u in corpus.users))
    assert g.n_edges == 0
    assert (g.self_loops > 0).all()


def test_round_trip_through_ingest(tmp_path):
    paths = write_synth(synth_network(SynthConfig(n_users=150, community_sizes=[20])), tmp_path)
    stats = ingest_to_cache(paths["posts"], paths["users"], tmp_path / "cache", strict=True)
    assert stats.skipped_posts == 0 and stats.skipped_users == 0
    corpus = load_cache(tmp_path / "cache")
    assert corpus.stats.n_users == 150


def test_edge_count_near_expectation():
    n, size = 2000, 200
    cfg = SynthConfig(n_users=n, community_sizes=[size], intra_rate=0.05, cross_rate=0.002, rng_seed=3)
    corpus = synth_network(cfg)
    g = build_repost_graph(corpus.posts, (u.id for u in corpus.users))
    pairs_in = size * (size - 1)
    pairs_out = n * (n - 1) - pairs_in
    mean = cfg.intra_rate * pairs_in + cfg.cross_rate * pairs_out
    var = cfg.intra_rate * (1 - cfg.intra_rate) * pairs_in + cfg.cross_rate * (1 - cfg.cross_rate) * pairs_out
    assert abs(g.n_edges - mean) <= 5 * math.sqrt(var)


def test_bad_config():
    with pytest.raises(ValueError):
        SynthConfig(intra_rate=1.5)
    with pytest.raises(ValueError):
        SynthConfig(n_users=10, community_sizes=[20])
    with pytest.raises(ValueError):
        SynthConfig(hate_communities=[3])


def test_keyfile(tmp_path):
    f = tmp_path / "s.cfg"
    f.write_text("# synthetic\nn_users = 50\ncommunity-sizes = 10, 5\nhate_communities = 1\nintra_rate = 0.2\n")
    cfg = SynthConfig.from_keyfile(f)
    assert cfg.n_users == 50 and cfg.community_sizes == [10, 5] and cfg.hate_communities == [1]
    f.write_text("bogus = 1\n")
    with pytest.raises(ValueError):
        SynthConfig.from_keyfile(f)


@pytest.mark.slow
def test_planted_community_believes_more():
    for seed in range(100):
        cfg = SynthConfig(n_users=300, community_sizes=[40], rng_seed=seed)
        corpus = synth_network(cfg)
        g = build_repost_graph(corpus.posts, (u.id for u in corpus.users))
        seeds, _ = select_seeds(corpus.scores, corpus.posts, 0.95, 3)
        b = diffuse(to_belief_network(g), seeds, DiffusionConfig(3, "clamped")).as_dict()
        inside = [v for u, v in b.items() if u in corpus.hateful_users]
        outside = [v for u, v in b.items() if u not in corpus.hateful_users]
        assert np.mean(inside) > np.mean(outside), seed
