"""Synthetic delay topologies standing in for real deployments.

Three families: uniform (fully heterogeneous), clustered (co-located groups
with fast intra-cluster links, the verification committee living in cluster
0), and lognormal (heavy-tailed WAN-like delays). All delays are drawn in
milliseconds and stored as whole microsecond ticks, at least one tick each.
"""
from __future__ import annotations

import numpy as np

from .model import (
    DelayMatrix,
    Instance,
    NodeProfile,
    SystemParams,
    VerificationCommittee,
    ms_to_us,
)

# Clustered delays get a +-10% jitter so different seeds give distinct
# topologies without disturbing the cluster structure.
_JITTER = 0.1


def _finish(
    n: int,
    f: int,
    d_us: np.ndarray,
    to_v_us: np.ndarray,
    from_v_us: np.ndarray,
    v_rtts_us: np.ndarray,
    v_leader: int,
    byzantine_cap: float,
    crash_cap: float,
) -> Instance:
    np.fill_diagonal(d_us, 0)
    np.fill_diagonal(v_rtts_us, 0)
    return Instance(
        nodes=tuple(NodeProfile(0.0, 0.0) for _ in range(n)),
        delays=DelayMatrix(d=d_us, to_v=to_v_us, from_v=from_v_us),
        verification=VerificationCommittee(
            member_count=v_rtts_us.shape[0], leader_index=v_leader, rtts=v_rtts_us
        ),
        params=SystemParams(f=f, byzantine_cap=byzantine_cap, crash_cap=crash_cap),
    )


def _us(values_ms: np.ndarray) -> np.ndarray:
    ticks = np.vectorize(ms_to_us)(values_ms)
    return np.maximum(ticks, 1).astype(np.int64)


def uniform_instance(
    n: int,
    f: int,
    seed: int,
    low_ms: float = 0.5,
    high_ms: float = 20.0,
    v_members: int = 4,
    byzantine_cap: float = 1.0,
    crash_cap: float = 1.0,
) -> Instance:
    _validate(n, f, v_members)
    rng = np.random.default_rng(seed)
    d = _us(rng.uniform(low_ms, high_ms, size=(n, n)))
    to_v = _us(rng.uniform(low_ms, high_ms, size=n))
    from_v = _us(rng.uniform(low_ms, high_ms, size=n))
    v = _us(rng.uniform(low_ms, high_ms, size=(v_members, v_members)))
    return _finish(n, f, d, to_v, from_v, v, 0, byzantine_cap, crash_cap)


def clustered_instance(
    n: int,
    f: int,
    seed: int,
    clusters: int = 5,
    intra_ms: float = 0.1,
    inter_ms: float = 5.0,
    v_members: int = 4,
    byzantine_cap: float = 1.0,
    crash_cap: float = 1.0,
) -> Instance:
    """Contiguous equal clusters; the verification committee sits in cluster 0."""
    _validate(n, f, v_members)
    if not 1 <= clusters <= n:
        raise ValueError(f"cannot split {n} nodes into {clusters} clusters")
    if intra_ms <= 0 or inter_ms <= 0:
        raise ValueError("cluster delays must be positive")
    rng = np.random.default_rng(seed)
    cluster_of = np.array([i * clusters // n for i in range(n)])

    def jittered(base_ms: np.ndarray) -> np.ndarray:
        return _us(base_ms * rng.uniform(1 - _JITTER, 1 + _JITTER, size=base_ms.shape))

    same = cluster_of[:, None] == cluster_of[None, :]
    d = jittered(np.where(same, intra_ms, inter_ms))
    in_zero = cluster_of == 0
    to_v = jittered(np.where(in_zero, intra_ms, inter_ms))
    from_v = jittered(np.where(in_zero, intra_ms, inter_ms))
    v = jittered(np.full((v_members, v_members), intra_ms))
    return _finish(n, f, d, to_v, from_v, v, 0, byzantine_cap, crash_cap)


def lognormal_instance(
    n: int,
    f: int,
    seed: int,
    mu: float = 0.5,
    sigma: float = 0.8,
    v_members: int = 4,
    byzantine_cap: float = 1.0,
    crash_cap: float = 1.0,
) -> Instance:
    """Heavy-tailed delays: exp(Normal(mu, sigma)) milliseconds."""
    _validate(n, f, v_members)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rng = np.random.default_rng(seed)
    d = _us(rng.lognormal(mu, sigma, size=(n, n)))
    to_v = _us(rng.lognormal(mu, sigma, size=n))
    from_v = _us(rng.lognormal(mu, sigma, size=n))
    v = _us(rng.lognormal(mu, sigma, size=(v_members, v_members)))
    return _finish(n, f, d, to_v, from_v, v, 0, byzantine_cap, crash_cap)


def _validate(n: int, f: int, v_members: int) -> None:
    if f < 1:
        raise ValueError("f must be at least 1")
    if n < 3 * f + 1:
        raise ValueError(f"n < 3f+1: {n} nodes cannot tolerate f={f}")
    if v_members < 2:
        raise ValueError("the verification committee needs at least two nodes")
