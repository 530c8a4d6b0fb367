"""Reference implementation of the optimizer's hot kernel.

The compiled twin in _speedups.pyx must produce bit-identical results; the
equivalence test in tests/test_kernels.py holds both to that.
"""
from __future__ import annotations

import numpy as np


def objective_components(rtt, to_v, from_v, tee, leaders, assign, f):
    """Planning objective pieces for a (leaders, membership) candidate.

    rtt is the full round-trip matrix, assign maps every node to a committee
    index (leaders map to their own committee). Active links are implied: the
    (2 + sigma) * f cheapest follower round trips per committee, with sigma
    derived from the committee's TEE flags.

    Returns (max_active_rtt, max_to_v, max_from_v) as Python ints, or raises
    ValueError when some committee cannot field enough active followers.
    """
    p = len(leaders)
    max_active = 0
    max_tv = 0
    max_fv = 0
    for c in range(p):
        leader = int(leaders[c])
        members = np.nonzero(assign == c)[0]
        sigma = int(tee[members].any())
        k = (2 + sigma) * f
        follower_rtts = rtt[leader, members[members != leader]]
        if follower_rtts.shape[0] < k:
            raise ValueError(
                f"committee {c} has {follower_rtts.shape[0]} followers, needs {k} active"
            )
        kth = int(np.partition(follower_rtts, k - 1)[k - 1])
        if kth > max_active:
            max_active = kth
        tv = int(to_v[leader])
        fv = int(from_v[leader])
        if tv > max_tv:
            max_tv = tv
        if fv > max_fv:
            max_fv = fv
    return max_active, max_tv, max_fv
