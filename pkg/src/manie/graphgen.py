"""Ground-truth networks: random generators and edge-list fixtures.

Adjacency convention used everywhere in the package: ``adj[i, j]`` is the
weight of the edge ``j -> i`` (node ``j`` influences node ``i``).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

FIXTURES = ("zachary", "example5")


class ParameterError(ValueError):
    """Invalid generator or simulator parameter."""


class FormatError(ValueError):
    """Malformed edge-list text."""


@dataclass(frozen=True)
class Network:
    adj: np.ndarray
    directed: bool = False
    name: str = ""

    def __post_init__(self):
        adj = np.asarray(self.adj, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ParameterError(f"adjacency must be square, got {adj.shape}")
        if np.any(np.diag(adj) != 0):
            raise ParameterError("adjacency diagonal must be zero")
        if not np.all(np.isfinite(adj)):
            raise ParameterError("adjacency has non-finite entries")
        if not self.directed and not np.array_equal(adj, adj.T):
            raise ParameterError("undirected adjacency must be symmetric")
        object.__setattr__(self, "adj", adj)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        nnz = int(np.count_nonzero(self.adj))
        return nnz if self.directed else nnz // 2

    def neighbors(self, i: int) -> np.ndarray:
        """In-neighbours of ``i`` (all neighbours when undirected)."""
        return np.flatnonzero(self.adj[i])

    def to_edge_list(self) -> str:
        lines = ["directed"] if self.directed else []
        for i, j in zip(*np.nonzero(self.adj)):
            if not self.directed and j > i:
                continue
            lines.append(f"{j} {i} {self.adj[i, j]:.17g}")
        return "\n".join(lines) + "\n"


def _rng(seed):
    return np.random.default_rng(seed)


def _undirected(adj, name):
    adj = np.maximum(adj, adj.T)
    return Network(adj, directed=False, name=name)


def gen_er(n: int, p: float, directed: bool = False, seed: int = 0) -> Network:
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    draws = _rng(seed).random((n, n)) < p
    if directed:
        adj = draws.astype(float)
        np.fill_diagonal(adj, 0.0)
        return Network(adj, directed=True, name=f"ER({n},{p},directed)")
    adj = np.triu(draws, k=1).astype(float)
    return _undirected(adj, f"ER({n},{p})")


def gen_ba(n: int, m: int, seed: int = 0) -> Network:
    """Preferential attachment grown from a complete clique of ``m + 1`` nodes."""
    if m < 1 or m >= n:
        raise ParameterError(f"need 1 <= m < n, got m={m}, n={n}")
    if m + 1 > n - 1:
        raise ParameterError(f"seed clique of {m + 1} nodes leaves no node to attach (n={n})")
    rng = _rng(seed)
    adj = np.zeros((n, n))
    core = m + 1
    adj[:core, :core] = 1.0
    np.fill_diagonal(adj, 0.0)
    # one entry per edge endpoint, so uniform sampling is degree-proportional
    stubs = [i for i in range(core) for _ in range(m)]
    for new in range(core, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(stubs[rng.integers(len(stubs))])
        for t in sorted(targets):
            adj[new, t] = adj[t, new] = 1.0
            stubs.extend((new, t))
    return Network(adj, directed=False, name=f"BA({n},{m})")


def _ring_lattice(n, k):
    if k % 2:
        raise ParameterError(f"k must be even, got {k}")
    if not 0 <= k < n:
        raise ParameterError(f"need 0 <= k < n, got k={k}, n={n}")
    adj = np.zeros((n, n))
    for i in range(n):
        for d in range(1, k // 2 + 1):
            j = (i + d) % n
            adj[i, j] = adj[j, i] = 1.0
    return adj


def gen_nw(n: int, k: int, p: float, seed: int = 0) -> Network:
    """Newman-Watts: ring lattice plus random shortcuts, nothing removed."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    adj = _ring_lattice(n, k)
    rng = _rng(seed)
    for i in range(n):
        for d in range(1, k // 2 + 1):
            if rng.random() < p:
                w = int(rng.integers(n))
                if w != i and adj[i, w] == 0:
                    adj[i, w] = adj[w, i] = 1.0
    return Network(adj, directed=False, name=f"NW({n},{k},{p})")


def gen_ws(n: int, k: int, p: float, seed: int = 0) -> Network:
    """Watts-Strogatz: every lattice edge rewired with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    adj = _ring_lattice(n, k)
    rng = _rng(seed)
    for d in range(1, k // 2 + 1):
        for i in range(n):
            j = (i + d) % n
            if rng.random() >= p or adj[i, j] == 0:
                continue
            free = np.flatnonzero(adj[i] == 0)
            free = free[free != i]
            if free.size == 0:
                continue
            w = int(free[rng.integers(free.size)])
            adj[i, j] = adj[j, i] = 0.0
            adj[i, w] = adj[w, i] = 1.0
    return Network(adj, directed=False, name=f"WS({n},{k},{p})")


def load_edge_list(text: str, name: str = "") -> Network:
    """Parse ``u v [w]`` lines; a ``directed`` line makes ``u v`` mean ``u -> v``.

    Indices may be 0- or 1-based; a minimum index of 1 or more is taken as 1-based.
    Lines starting with ``#`` are comments.
    """
    directed = False
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower() == "directed":
            directed = True
            continue
        tok = line.split()
        if len(tok) not in (2, 3):
            raise FormatError(f"line {lineno}: expected 'u v [w]', got {raw!r}")
        try:
            u, v = int(tok[0]), int(tok[1])
            w = float(tok[2]) if len(tok) == 3 else 1.0
        except ValueError:
            raise FormatError(f"line {lineno}: non-numeric token in {raw!r}") from None
        if u == v:
            raise FormatError(f"line {lineno}: self-loop {u} {v}")
        if u < 0 or v < 0:
            raise FormatError(f"line {lineno}: negative node index")
        edges.append((u, v, w))
    if not edges:
        raise FormatError("edge list is empty")
    offset = 1 if min(min(u, v) for u, v, _ in edges) >= 1 else 0
    n = max(max(u, v) for u, v, _ in edges) + 1 - offset
    adj = np.zeros((n, n))
    for u, v, w in edges:
        adj[v - offset, u - offset] = w
        if not directed:
            adj[u - offset, v - offset] = w
    return Network(adj, directed=directed, name=name)


def load_fixture(name: str) -> Network:
    if name not in FIXTURES:
        raise ParameterError(f"unknown fixture {name!r}; bundled: {FIXTURES}")
    text = resources.files("manie.fixtures").joinpath(f"{name}.edges").read_text()
    return load_edge_list(text, name=name)


def load_network_file(path: str | Path) -> Network:
    path = Path(path)
    return load_edge_list(path.read_text(), name=path.stem)
