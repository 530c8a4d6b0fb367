"""Small deterministic max-flow (Dinic) used by the exact solver's
degree-constrained assignment feasibility checks."""
from __future__ import annotations

from collections import deque


class MaxFlow:
    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        # Edges stored flat as [to, capacity]; edge i and i^1 are a pair.
        self.edges: list[list[int]] = []

    def add_edge(self, u: int, v: int, cap: int) -> int:
        """Add a directed edge, returning its id (for flow readback)."""
        eid = len(self.edges)
        self.edges.append([v, cap])
        self.edges.append([u, 0])
        self.adj[u].append(eid)
        self.adj[v].append(eid + 1)
        return eid

    def flow_on(self, eid: int) -> int:
        return self.edges[eid ^ 1][1]

    def max_flow(self, s: int, t: int) -> int:
        total = 0
        while True:
            level = self._bfs(s, t)
            if level is None:
                return total
            it = [0] * self.n
            while True:
                pushed = self._dfs(s, t, 1 << 60, level, it)
                if not pushed:
                    break
                total += pushed

    def _bfs(self, s: int, t: int):
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for eid in self.adj[u]:
                v, cap = self.edges[eid]
                if cap > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    q.append(v)
        return level if level[t] >= 0 else None

    def _dfs(self, u: int, t: int, limit: int, level, it) -> int:
        if u == t:
            return limit
        while it[u] < len(self.adj[u]):
            eid = self.adj[u][it[u]]
            v, cap = self.edges[eid]
            if cap > 0 and level[v] == level[u] + 1:
                pushed = self._dfs(v, t, min(limit, cap), level, it)
                if pushed:
                    self.edges[eid][1] -= pushed
                    self.edges[eid ^ 1][1] += pushed
                    return pushed
            it[u] += 1
        return 0


class BoundedFlow:
    """Feasibility for flows with per-edge lower bounds (circulation form)."""

    def __init__(self, n: int):
        # Two extra nodes handle lower-bound excesses.
        self.inner = n
        self.mf = MaxFlow(n + 2)
        self.excess = [0] * n
        self.required = 0
        self._edge_ids: list[tuple[int, int]] = []

    def add_edge(self, u: int, v: int, low: int, cap: int) -> int:
        eid = self.mf.add_edge(u, v, cap - low)
        if low:
            self.excess[v] += low
            self.excess[u] -= low
        self._edge_ids.append((eid, low))
        return len(self._edge_ids) - 1

    def feasible(self) -> bool:
        ss, tt = self.inner, self.inner + 1
        need = 0
        for node, ex in enumerate(self.excess):
            if ex > 0:
                self.mf.add_edge(ss, node, ex)
                need += ex
            elif ex < 0:
                self.mf.add_edge(node, tt, -ex)
        return self.mf.max_flow(ss, tt) == need

    def flow_on(self, handle: int) -> int:
        eid, low = self._edge_ids[handle]
        return self.mf.flow_on(eid) + low
