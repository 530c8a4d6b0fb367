"""Compiled twin of ccobft.kernels.pure. Keep results bit-identical."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def objective_components(
    const cnp.int64_t[:, ::1] rtt,
    const cnp.int64_t[::1] to_v,
    const cnp.int64_t[::1] from_v,
    const cnp.uint8_t[::1] tee,
    const cnp.int64_t[::1] leaders,
    const cnp.int64_t[::1] assign,
    int f,
):
    cdef Py_ssize_t n = assign.shape[0]
    cdef Py_ssize_t p = leaders.shape[0]
    cdef Py_ssize_t node, c, i, j, count
    cdef cnp.int64_t leader, max_active = 0, max_tv = 0, max_fv = 0, v, tmp, kth

    counts_arr = np.zeros(p, dtype=np.int64)
    offsets_arr = np.zeros(p + 1, dtype=np.int64)
    bucket_arr = np.empty(n, dtype=np.int64)
    sigma_arr = np.zeros(p, dtype=np.uint8)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef cnp.int64_t[::1] offsets = offsets_arr
    cdef cnp.int64_t[::1] bucket = bucket_arr
    cdef cnp.uint8_t[::1] sigma = sigma_arr

    # Bucket follower RTTs to their leader, committee by committee.
    for node in range(n):
        c = assign[node]
        if tee[node]:
            sigma[c] = 1
        if node != leaders[c]:
            counts[c] += 1
    for c in range(p):
        offsets[c + 1] = offsets[c] + counts[c]
        counts[c] = 0
    for node in range(n):
        c = assign[node]
        leader = leaders[c]
        if node != leader:
            bucket[offsets[c] + counts[c]] = rtt[leader, node]
            counts[c] += 1

    cdef int k
    for c in range(p):
        k = (2 + sigma[c]) * f
        count = counts[c]
        if count < k:
            raise ValueError(
                f"committee {c} has {count} followers, needs {k} active"
            )
        # Partial selection sort: after k passes the k-th smallest sits at
        # offset + k - 1. Committee fan-out is small, so this beats sorting.
        for i in range(k):
            for j in range(offsets[c] + i + 1, offsets[c] + count):
                if bucket[j] < bucket[offsets[c] + i]:
                    tmp = bucket[offsets[c] + i]
                    bucket[offsets[c] + i] = bucket[j]
                    bucket[j] = tmp
        kth = bucket[offsets[c] + k - 1]
        if kth > max_active:
            max_active = kth
        v = to_v[leaders[c]]
        if v > max_tv:
            max_tv = v
        v = from_v[leaders[c]]
        if v > max_fv:
            max_fv = v
    return int(max_active), int(max_tv), int(max_fv)
