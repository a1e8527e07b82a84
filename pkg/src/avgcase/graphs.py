"""Graph data types, samplers for the graph hypotheses, and adversaries.

Simple undirected graphs on ``[n]`` are stored as a packed bitset over the
upper-triangular pair order ``(0,1), (0,2), ..., (n-2,n-1)``: symmetric, no
self loops, O(1) pair access, and ~n^2/16 bytes.

The samplers cover the ambient and planted hypotheses used by the reduction
pipelines, plus the target graph laws produced by the community-recovery
reduction and the two corruption adversaries (Huber / eps-corruption) for
sample sets.  `PlantedTrace` carries ground-truth latents next to an instance
for verification; the reductions never read it to make decisions, they only
translate its coordinates for the output trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AdversaryViolation, ParameterError
from .formats import dump_json, load_json
from .prob import RngStream

__all__ = [
    "Graph",
    "VertexPartition",
    "PlantedTrace",
    "write_graphv1",
    "read_graphv1",
    "sample_gnq",
    "sample_k_pds",
    "sample_planted_conditional",
    "sample_tg_h1",
    "sample_tg_h0",
    "semirandom_apply",
    "corrupt_samples",
]


def _n_pairs(n: int) -> int:
    return n * (n - 1) // 2


class Graph:
    """Simple undirected graph with packed upper-triangular adjacency bits."""

    __slots__ = ("n", "_bits")

    def __init__(self, n: int, packed_bits: np.ndarray):
        self.n = int(n)
        self._bits = packed_bits

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_triu(cls, n: int, triu: np.ndarray) -> "Graph":
        triu = np.asarray(triu, dtype=bool)
        if triu.shape != (_n_pairs(n),):
            raise ParameterError(f"triu vector must have length {_n_pairs(n)}")
        return cls(n, np.packbits(triu))

    @classmethod
    def from_dense(cls, adj: np.ndarray) -> "Graph":
        adj = np.asarray(adj, dtype=bool)
        n = adj.shape[0]
        if adj.shape != (n, n) or not np.array_equal(adj, adj.T) or adj.diagonal().any():
            raise ParameterError("adjacency must be square, symmetric, hollow")
        iu = np.triu_indices(n, k=1)
        return cls.from_triu(n, adj[iu])

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        vec = np.zeros(_n_pairs(n), dtype=bool)
        for u, v in edges:
            vec[cls._pair_index(n, u, v)] = True
        return cls.from_triu(n, vec)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls.from_triu(n, np.zeros(_n_pairs(n), dtype=bool))

    # -- access -----------------------------------------------------------

    @staticmethod
    def _pair_index(n: int, u: int, v: int) -> int:
        if u == v or not (0 <= u < n and 0 <= v < n):
            raise ParameterError(f"invalid pair ({u}, {v}) for n={n}")
        if u > v:
            u, v = v, u
        return u * n - u * (u + 1) // 2 + (v - u - 1)

    def has_edge(self, u: int, v: int) -> bool:
        idx = self._pair_index(self.n, u, v)
        return bool((self._bits[idx >> 3] >> (7 - (idx & 7))) & 1)

    def triu_vector(self) -> np.ndarray:
        return np.unpackbits(self._bits, count=_n_pairs(self.n)).astype(bool)

    def to_dense(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=bool)
        iu = np.triu_indices(self.n, k=1)
        vec = self.triu_vector()
        adj[iu] = vec
        adj[(iu[1], iu[0])] = vec
        return adj

    def edges(self) -> np.ndarray:
        """Edge list as an (m, 2) array with u < v, lexicographic order."""
        iu = np.triu_indices(self.n, k=1)
        mask = self.triu_vector()
        return np.column_stack((iu[0][mask], iu[1][mask]))

    @property
    def edge_count(self) -> int:
        return int(self.triu_vector().sum())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and np.array_equal(self.triu_vector(), other.triu_vector())
        )

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.edge_count})"


@dataclass(frozen=True)
class VertexPartition:
    """Partition of [n] into k parts of equal size n/k."""

    n: int
    k: int
    part_of: np.ndarray

    def __post_init__(self):
        if self.k <= 0 or self.n % self.k != 0:
            raise ParameterError(f"k={self.k} must divide n={self.n}")
        part_of = np.asarray(self.part_of, dtype=np.int64)
        if part_of.shape != (self.n,):
            raise ParameterError("part_of must map every vertex")
        counts = np.bincount(part_of, minlength=self.k)
        if counts.size != self.k or np.any(counts != self.n // self.k):
            raise ParameterError("every part must have exactly n/k vertices")
        object.__setattr__(self, "part_of", part_of)

    @classmethod
    def contiguous(cls, n: int, k: int) -> "VertexPartition":
        if k <= 0 or n % k != 0:
            raise ParameterError(f"k={k} must divide n={n}")
        return cls(n, k, np.repeat(np.arange(k), n // k))

    def parts(self):
        """List of index arrays, one per part, each sorted ascending."""
        order = np.argsort(self.part_of, kind="stable")
        return [np.sort(chunk) for chunk in np.split(order, self.k)]

    @property
    def part_size(self) -> int:
        return self.n // self.k


@dataclass
class PlantedTrace:
    """Ground-truth latents carried beside an instance, for verification only."""

    seed: int
    planted_set: Optional[np.ndarray] = None
    component_set: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def _aslist(x):
            return None if x is None else [int(v) for v in np.asarray(x).ravel()]

        return {
            "seed": int(self.seed),
            "planted_set": _aslist(self.planted_set),
            "component_set": _aslist(self.component_set),
            "params": self.params,
        }

    def write_json(self, path) -> None:
        dump_json(path, self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "PlantedTrace":
        def _asarr(x):
            return None if x is None else np.asarray(x, dtype=np.int64)

        return cls(
            seed=int(doc["seed"]),
            planted_set=_asarr(doc.get("planted_set")),
            component_set=_asarr(doc.get("component_set")),
            params=doc.get("params", {}),
        )

    @classmethod
    def read_json(cls, path) -> "PlantedTrace":
        return cls.from_dict(load_json(path))


# ---------------------------------------------------------------------------
# GRAPHv1 text format
# ---------------------------------------------------------------------------

def write_graphv1(graph: Graph, path) -> None:
    """Header ``n=<int> edges=<int>``, then one ``u v`` line per edge (u < v)."""
    edges = graph.edges()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n={graph.n} edges={edges.shape[0]}\n")
        for u, v in edges:
            fh.write(f"{u} {v}\n")


def read_graphv1(path) -> Graph:
    n = None
    declared = None
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if n is None:
                fields = dict(item.split("=", 1) for item in line.split())
                try:
                    n = int(fields["n"])
                    declared = int(fields["edges"])
                except (KeyError, ValueError) as exc:
                    raise ParameterError(f"{path}: malformed GRAPHv1 header {line!r}") from exc
                continue
            u, v = (int(tok) for tok in line.split())
            if not u < v:
                raise ParameterError(f"{path}: edge lines must have u < v, got {line!r}")
            edges.append((u, v))
    if n is None:
        raise ParameterError(f"{path}: missing GRAPHv1 header")
    if declared != len(edges):
        raise ParameterError(f"{path}: header declares {declared} edges, found {len(edges)}")
    return Graph.from_edges(n, edges)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def _check_prob(p, name):
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"{name} must lie in [0, 1], got {p}")


def sample_gnq(n: int, q: float, rng: RngStream) -> Graph:
    """Erdos-Renyi G(n, q): each unordered pair present independently w.p. q."""
    _check_prob(q, "q")
    g = rng.child("gnq").generator()
    return Graph.from_triu(n, g.random(_n_pairs(n)) < q)


def _plant_dense(graph_vec: np.ndarray, n: int, S: np.ndarray, p: float, gen) -> None:
    """Resample the induced subgraph on S from G(|S|, p), in place."""
    S = np.sort(np.asarray(S, dtype=np.int64))
    k = S.size
    if k < 2:
        return
    uu, vv = np.triu_indices(k, k=1)
    su, sv = S[uu], S[vv]
    idx = su * n - su * (su + 1) // 2 + (sv - su - 1)
    graph_vec[idx] = gen.random(idx.size) < p


def sample_planted_conditional(n: int, S, p: float, q: float, rng: RngStream) -> Graph:
    """G(n, S, p, q): ambient G(n, q) with the induced subgraph on S from G(|S|, p)."""
    _check_prob(p, "p")
    _check_prob(q, "q")
    S = np.asarray(S, dtype=np.int64)
    if S.size and (S.min() < 0 or S.max() >= n or np.unique(S).size != S.size):
        raise ParameterError(f"S must be a subset of [0, {n}), got {S}")
    g = rng.child("planted").generator()
    vec = g.random(_n_pairs(n)) < q
    _plant_dense(vec, n, S, p, g)
    return Graph.from_triu(n, vec)


def sample_k_pds(N: int, k: int, p: float, q: float, E: VertexPartition, rng: RngStream):
    """k-partite planted dense subgraph instance plus its ground-truth trace.

    One planted vertex is drawn uniformly from each part of ``E`` and the
    induced subgraph on the planted set is resampled from G(k, p).
    """
    _check_prob(p, "p")
    _check_prob(q, "q")
    if not (0 <= q < p <= 1):
        # q = 0 is allowed for the sampler (degenerate but well-defined);
        # the reductions themselves insist on q > 0.
        raise ParameterError(f"need 0 <= q < p <= 1, got p={p}, q={q}")
    if E.n != N or E.k != k:
        raise ParameterError(f"partition is over n={E.n}, k={E.k}; expected N={N}, k={k}")
    g = rng.child("kpds").generator()
    vec = g.random(_n_pairs(N)) < q
    S = np.array([part[g.integers(part.size)] for part in E.parts()], dtype=np.int64)
    _plant_dense(vec, N, S, p, g)
    trace = PlantedTrace(
        seed=rng.seed,
        planted_set=np.sort(S),
        params={"N": N, "k": k, "p": p, "q": q},
    )
    return Graph.from_triu(N, vec), trace


def _tg_probability_matrix(n, V, S, S2, mu1, mu2, mu3):
    prob = np.full((n, n), 0.5)
    inV = np.zeros(n, dtype=bool)
    inV[V] = True
    inS = np.zeros(n, dtype=bool)
    inS[S] = True
    inS2 = np.zeros(n, dtype=bool)
    inS2[S2] = True
    both_V = np.outer(inV, inV)
    prob[both_V] = 0.5 - mu1
    cross = np.outer(inS, inS2) | np.outer(inS2, inS)
    prob[cross] = 0.5 - mu2
    prob[np.outer(inS2, inS2)] = 0.5
    prob[np.outer(inS, inS)] = 0.5 + mu3
    return prob


def sample_tg_h1(n, k, k2, m, mu1, mu2, mu3, rng: RngStream):
    """Planted target-graph law: V of size m, disjoint S (k), S' (k2) inside V.

    Edge probabilities: 1/2 + mu3 on S^2, 1/2 - mu2 on S x S', 1/2 on S'^2 and
    outside V^2, 1/2 - mu1 on the rest of V^2.
    """
    if not (k + k2 <= m <= n):
        raise ParameterError(f"need k + k2 <= m <= n, got k={k}, k2={k2}, m={m}, n={n}")
    for name, mu in (("mu1", mu1), ("mu2", mu2), ("mu3", mu3)):
        if not (0 <= mu < 0.5):
            raise ParameterError(f"{name} must lie in [0, 1/2), got {mu}")
    g = rng.child("tg_h1").generator()
    V = np.sort(g.choice(n, size=m, replace=False))
    picks = g.choice(m, size=k + k2, replace=False)
    S = np.sort(V[picks[:k]])
    S2 = np.sort(V[picks[k:]])
    prob = _tg_probability_matrix(n, V, S, S2, mu1, mu2, mu3)
    iu = np.triu_indices(n, k=1)
    vec = g.random(iu[0].size) < prob[iu]
    trace = PlantedTrace(
        seed=rng.seed,
        planted_set=S,
        params={
            "V": [int(v) for v in V],
            "S_prime": [int(v) for v in S2],
            "mu1": mu1,
            "mu2": mu2,
            "mu3": mu3,
            "m": m,
        },
    )
    return Graph.from_triu(n, vec), trace


def sample_tg_h0(n, m, mu1, rng: RngStream):
    """Null target-graph law: edges inside a random V (|V| = m) at 1/2 - mu1, else 1/2."""
    if not (0 <= m <= n):
        raise ParameterError(f"need 0 <= m <= n, got m={m}, n={n}")
    if not (0 <= mu1 < 0.5):
        raise ParameterError(f"mu1 must lie in [0, 1/2), got {mu1}")
    g = rng.child("tg_h0").generator()
    V = np.sort(g.choice(n, size=m, replace=False))
    inV = np.zeros(n, dtype=bool)
    inV[V] = True
    prob = np.where(np.outer(inV, inV), 0.5 - mu1, 0.5)
    iu = np.triu_indices(n, k=1)
    vec = g.random(iu[0].size) < prob[iu]
    trace = PlantedTrace(seed=rng.seed, params={"V": [int(v) for v in V], "mu1": mu1, "m": m})
    return Graph.from_triu(n, vec), trace


def semirandom_apply(G: Graph, trace: PlantedTrace, removal_prob, rng: RngStream) -> Graph:
    """Monotone adversary: remove each present edge independently at its rate.

    ``removal_prob`` is an (n, n) array of rates or a callable ``f(i, j)``.
    Rates must be zero on pairs internal to ``trace.planted_set``; edges are
    never added.
    """
    n = G.n
    if callable(removal_prob):
        rates = np.fromfunction(
            np.vectorize(removal_prob, otypes=[float]), (n, n), dtype=int
        )
    else:
        rates = np.asarray(removal_prob, dtype=float)
    if rates.shape != (n, n):
        raise ParameterError(f"removal_prob must cover all pairs of [{n}]")
    if np.any(rates < 0) or np.any(rates > 1):
        raise ParameterError("removal rates must lie in [0, 1]")
    if trace is not None and trace.planted_set is not None and trace.planted_set.size >= 2:
        S = trace.planted_set
        sub = rates[np.ix_(S, S)]
        if np.any(sub[~np.eye(S.size, dtype=bool)] > 0):
            raise AdversaryViolation("nonzero removal rate on a planted-set-internal pair")
    g = rng.child("adversary").generator()
    iu = np.triu_indices(n, k=1)
    vec = G.triu_vector().copy()
    pair_rates = np.maximum(rates[iu], rates[(iu[1], iu[0])])
    vec &= ~(g.random(vec.size) < np.where(vec, pair_rates, 0.0))
    return Graph.from_triu(n, vec)


def corrupt_samples(X, eps: float, outlier, mode: str, rng: RngStream):
    """Corrupt rows of sample matrix X (one sample per row).

    Huber mode replaces each sample independently with probability eps by an
    outlier draw.  EpsCorruption replaces min{Binomial(n, eps), ceil(eps * n)}
    uniformly chosen samples, the bounded simulation of Huber's model by an
    eps-corruption adversary.  ``outlier(generator, count)`` must return a
    (count, d) array.
    """
    if not (0.0 <= eps < 1.0):
        raise ParameterError(f"eps must lie in [0, 1), got {eps}")
    if mode not in ("Huber", "EpsCorruption"):
        raise ParameterError(f"unknown corruption mode {mode!r}")
    X = np.array(X, dtype=float, copy=True)
    n = X.shape[0]
    g = rng.child("corrupt").generator()
    if mode == "Huber":
        idx = np.flatnonzero(g.random(n) < eps)
    else:
        count = min(int(g.binomial(n, eps)), int(np.ceil(eps * n)))
        idx = np.sort(g.choice(n, size=count, replace=False)) if count else np.empty(0, int)
    if idx.size:
        X[idx] = np.asarray(outlier(g, idx.size), dtype=float)
    return X
