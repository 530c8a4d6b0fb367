"""Synthetic topology generators."""
from __future__ import annotations

import numpy as np
import pytest

from ccobft.model import validate_instance
from ccobft.topology import clustered_instance, lognormal_instance, uniform_instance

_JITTER = 0.10


@pytest.mark.parametrize("maker", [uniform_instance, clustered_instance, lognormal_instance])
def test_generated_instances_validate_cleanly(maker):
    inst = maker(n=12, f=1, seed=0)
    assert validate_instance(inst) == []
    assert inst.delays.d.dtype == np.int64
    assert (np.diag(inst.delays.d) == 0).all()
    off = inst.delays.d[~np.eye(12, dtype=bool)]
    assert (off >= 1).all()


def test_uniform_delays_stay_inside_the_band():
    inst = uniform_instance(n=20, f=1, seed=3, low_ms=0.5, high_ms=20.0)
    off = inst.delays.d[~np.eye(20, dtype=bool)]
    assert off.min() >= 500
    assert off.max() <= 20_000
    assert inst.delays.to_v.min() >= 500
    assert inst.delays.from_v.max() <= 20_000


def test_clustered_structure_splits_evenly():
    inst = clustered_instance(n=240, f=1, seed=1)
    d = inst.delays.d
    cluster = np.array([i * 5 // 240 for i in range(240)])
    sizes = np.bincount(cluster)
    assert sizes.tolist() == [48] * 5

    intra_lo, intra_hi = 100 * (1 - _JITTER), 100 * (1 + _JITTER)
    inter_lo, inter_hi = 5000 * (1 - _JITTER), 5000 * (1 + _JITTER)
    same = cluster[:, None] == cluster[None, :]
    off_diag = ~np.eye(240, dtype=bool)
    intra = d[same & off_diag]
    inter = d[~same]
    assert intra.min() >= intra_lo and intra.max() <= intra_hi
    assert inter.min() >= inter_lo and inter.max() <= inter_hi


def test_verification_committee_lives_in_cluster_zero():
    inst = clustered_instance(n=40, f=1, seed=7)
    cluster = np.array([i * 5 // 40 for i in range(40)])
    in_zero = cluster == 0
    # Cluster 0 reaches the verification leader at intra speed, others do not.
    assert inst.delays.to_v[in_zero].max() <= 100 * (1 + _JITTER)
    assert inst.delays.to_v[~in_zero].min() >= 5000 * (1 - _JITTER)
    assert inst.verification.rtts.max() <= 100 * (1 + _JITTER)


def test_lognormal_delays_are_positive_and_heavy_tailed():
    inst = lognormal_instance(n=30, f=1, seed=5)
    off = inst.delays.d[~np.eye(30, dtype=bool)]
    assert (off >= 1).all()
    assert off.max() > np.median(off) * 2


@pytest.mark.parametrize("maker", [uniform_instance, clustered_instance, lognormal_instance])
def test_generators_are_deterministic_per_seed(maker):
    a = maker(n=16, f=1, seed=42)
    b = maker(n=16, f=1, seed=42)
    c = maker(n=16, f=1, seed=43)
    assert (a.delays.d == b.delays.d).all()
    assert (a.verification.rtts == b.verification.rtts).all()
    assert (a.delays.d != c.delays.d).any()


def test_too_few_nodes_for_the_fault_budget_is_rejected():
    with pytest.raises(ValueError, match="n < 3f\\+1"):
        uniform_instance(n=3, f=1, seed=0)
    with pytest.raises(ValueError, match="n < 3f\\+1"):
        clustered_instance(n=12, f=4, seed=0)


def test_generator_parameter_validation():
    with pytest.raises(ValueError, match="clusters"):
        clustered_instance(n=8, f=1, seed=0, clusters=9)
    with pytest.raises(ValueError, match="positive"):
        clustered_instance(n=8, f=1, seed=0, intra_ms=0.0)
    with pytest.raises(ValueError, match="sigma"):
        lognormal_instance(n=8, f=1, seed=0, sigma=0.0)
    with pytest.raises(ValueError, match="f must be"):
        uniform_instance(n=8, f=0, seed=0)
