"""Shared builders for hand-sized instances with exact, controllable delays."""
from __future__ import annotations

import numpy as np
import pytest

from ccobft.model import (
    DelayMatrix,
    Instance,
    NodeProfile,
    SystemParams,
    VerificationCommittee,
)


def build_instance(
    d_us,
    to_v_us,
    from_v_us,
    f: int = 1,
    byzantine_cap: float = 1.0,
    crash_cap: float = 1.0,
    profiles=None,
    v_rtts_us=None,
    v_leader: int = 0,
) -> Instance:
    """Instance from explicit microsecond arrays; no rounding anywhere."""
    d = np.array(d_us, dtype=np.int64)
    n = d.shape[0]
    if profiles is None:
        profiles = tuple(NodeProfile(0.0, 0.0) for _ in range(n))
    if v_rtts_us is None:
        v_rtts_us = [[0 if a == b else 500 for b in range(3)] for a in range(3)]
    v = np.array(v_rtts_us, dtype=np.int64)
    return Instance(
        nodes=tuple(profiles),
        delays=DelayMatrix(
            d=d,
            to_v=np.array(to_v_us, dtype=np.int64),
            from_v=np.array(from_v_us, dtype=np.int64),
        ),
        verification=VerificationCommittee(
            member_count=v.shape[0], leader_index=v_leader, rtts=v
        ),
        params=SystemParams(f=f, byzantine_cap=byzantine_cap, crash_cap=crash_cap),
    )


def uniform_us_instance(n: int, d: int, d_v: int, v_leg: int, f: int = 1) -> Instance:
    """All consensus delays d, all verification legs d_v, V-internal legs v_leg."""
    mat = np.full((n, n), d, dtype=np.int64)
    np.fill_diagonal(mat, 0)
    v_rtts = [[0 if a == b else v_leg for b in range(3)] for a in range(3)]
    return build_instance(
        mat, [d_v] * n, [d_v] * n, f=f, v_rtts_us=v_rtts
    )


@pytest.fixture
def minimal_instance() -> Instance:
    return uniform_us_instance(4, 1000, 1000, 500)
