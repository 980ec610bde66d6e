"""Seeded samplers: classic SBM, power-law degree SBM, and
Barabasi-Albert planted-partition benchmark networks.

All samplers are pure functions of a GenSpec. Reproducibility comes from
numpy SeedSequence spawning: each cluster / replicate gets its own
derived stream, so the same spec yields the same graph regardless of how
replicates are scheduled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .model import ValidationError, clamp_b

KINDS = ("sbm", "pld_sbm", "ba_planted")


@dataclass(frozen=True)
class GenSpec:
    """Declarative description of one random network.

    cluster_sizes fixes the block assignment deterministically; B is the
    K x K connectivity matrix. lam only applies to pld_sbm, ba_m /
    inter_pairs only to ba_planted.
    """

    kind: str
    cluster_sizes: tuple
    B: np.ndarray = None
    lam: float = None
    ba_m: int = 2
    inter_pairs: int = 5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cluster_sizes", tuple(int(c) for c in self.cluster_sizes))
        if self.B is not None:
            object.__setattr__(self, "B", np.asarray(self.B, dtype=np.float64))
        self.validate()

    @property
    def K(self):
        return len(self.cluster_sizes)

    @property
    def n_nodes(self):
        return sum(self.cluster_sizes)

    def validate(self):
        errs = []
        if self.kind not in KINDS:
            errs.append(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.cluster_sizes or any(c < 1 for c in self.cluster_sizes):
            errs.append("cluster_sizes must be non-empty with all sizes >= 1")
        if self.kind in ("sbm", "pld_sbm"):
            if self.B is None or self.B.shape != (self.K, self.K):
                errs.append(f"B must be a {self.K}x{self.K} matrix")
            elif np.any(self.B < 0) or np.any(self.B > 1):
                errs.append("B entries must lie in [0,1]")
        if self.kind == "pld_sbm" and not (self.lam is not None and self.lam > 0):
            errs.append("lam must be > 0 for pld_sbm")
        if self.kind == "ba_planted":
            if self.ba_m < 1:
                errs.append("ba_m must be >= 1")
            if any(c <= self.ba_m for c in self.cluster_sizes):
                errs.append(f"all cluster sizes must exceed ba_m={self.ba_m}")
            if self.inter_pairs < 0:
                errs.append("inter_pairs must be >= 0")
        if errs:
            raise ValidationError("; ".join(errs))

    @staticmethod
    def from_json(text):
        d = json.loads(text)
        return GenSpec(
            kind=d["kind"],
            cluster_sizes=d["cluster_sizes"],
            B=d.get("B"),
            lam=d.get("lambda", d.get("lam")),
            ba_m=int(d.get("ba_m", 2)),
            inter_pairs=int(d.get("inter_pairs", 5)),
            seed=int(d.get("seed", 0)),
        )

    def to_json(self):
        d = {
            "kind": self.kind,
            "cluster_sizes": list(self.cluster_sizes),
            "seed": int(self.seed),
        }
        if self.B is not None:
            d["B"] = self.B.tolist()
        if self.lam is not None:
            d["lambda"] = self.lam
        if self.kind == "ba_planted":
            d["ba_m"] = int(self.ba_m)
            d["inter_pairs"] = int(self.inter_pairs)
        return json.dumps(d, indent=2)


def block_assignment(cluster_sizes):
    """Deterministic block labels: cluster k gets the next sizes[k] ids."""
    return np.repeat(np.arange(len(cluster_sizes)), cluster_sizes).astype(np.int64)


def _sample_pair_edges(z, B, delta, rng):
    """Bernoulli-sample all unordered pairs with prob B[zi,zj]^(1+di+dj)."""
    n = z.shape[0]
    idx_i, idx_j = np.triu_indices(n, k=1)
    p = np.asarray(B, dtype=np.float64)[z[idx_i], z[idx_j]]
    if delta is not None:
        p = np.power(p, 1.0 + delta[idx_i] + delta[idx_j])
    keep = rng.random(idx_i.shape[0]) < p
    return np.column_stack([idx_i[keep], idx_j[keep]])


def sample_sbm(spec):
    """Classic SBM: edge prob depends only on the endpoint blocks.

    Returns (Graph, z_true).
    """
    if spec.kind != "sbm":
        raise ValidationError(f"expected kind='sbm', got {spec.kind!r}")
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    z = block_assignment(spec.cluster_sizes)
    edges = _sample_pair_edges(z, spec.B, None, rng)
    return Graph(n_nodes=spec.n_nodes, edge_array=edges), z


def sample_pld_sbm(spec):
    """Power-law degree SBM: delta_i ~ Exp(lam), edge prob
    B[zi,zj]^(1+di+dj).

    Returns (Graph, z_true, delta) — delta is exposed for test oracles.
    """
    if spec.kind != "pld_sbm":
        raise ValidationError(f"expected kind='pld_sbm', got {spec.kind!r}")
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    z = block_assignment(spec.cluster_sizes)
    delta = rng.exponential(scale=1.0 / spec.lam, size=spec.n_nodes)
    edges = _sample_pair_edges(z, spec.B, delta, rng)
    return Graph(n_nodes=spec.n_nodes, edge_array=edges), z, delta


def _ba_cluster_edges(size, m, rng):
    """Grow one Barabasi-Albert cluster (local node ids 0..size-1).

    Seed: m+1 fully connected nodes; each new node attaches to m distinct
    existing nodes picked proportionally to current degree.
    """
    edges = [(i, j) for i in range(m + 1) for j in range(i + 1, m + 1)]
    deg = np.zeros(size, dtype=np.float64)
    deg[: m + 1] = m
    for new in range(m + 1, size):
        targets = set()
        while len(targets) < m:
            w = deg[:new].copy()
            for t in targets:
                w[t] = 0.0
            pick = rng.choice(new, p=w / w.sum())
            targets.add(int(pick))
        for t in sorted(targets):
            edges.append((t, new))
            deg[t] += 1
        deg[new] = m
    return edges


def sample_ba_planted(spec):
    """Planted-partition benchmark: independent BA clusters plus a fixed
    number of random inter-cluster edges per cluster pair.

    Returns (Graph, z_true).
    """
    if spec.kind != "ba_planted":
        raise ValidationError(f"expected kind='ba_planted', got {spec.kind!r}")
    ss = np.random.SeedSequence(spec.seed)
    K = spec.K
    streams = ss.spawn(K + 1)
    z = block_assignment(spec.cluster_sizes)
    offsets = np.concatenate([[0], np.cumsum(spec.cluster_sizes)])
    edge_set = set()
    for k, size in enumerate(spec.cluster_sizes):
        rng_k = np.random.default_rng(streams[k])
        for i, j in _ba_cluster_edges(size, spec.ba_m, rng_k):
            edge_set.add((offsets[k] + i, offsets[k] + j))
    rng_x = np.random.default_rng(streams[K])
    for a in range(K):
        for b in range(a + 1, K):
            picked = 0
            attempts = 0
            max_attempts = 100 * spec.inter_pairs + 100
            while picked < spec.inter_pairs and attempts < max_attempts:
                attempts += 1
                i = int(rng_x.integers(offsets[a], offsets[a + 1]))
                j = int(rng_x.integers(offsets[b], offsets[b + 1]))
                if (i, j) not in edge_set:
                    edge_set.add((i, j))
                    picked += 1
    return Graph.from_edges(spec.n_nodes, edge_set), z


def sample(spec):
    """Dispatch on spec.kind; always returns (Graph, z_true, delta_or_None)."""
    if spec.kind == "sbm":
        g, z = sample_sbm(spec)
        return g, z, None
    if spec.kind == "pld_sbm":
        return sample_pld_sbm(spec)
    g, z = sample_ba_planted(spec)
    return g, z, None


def normalized_degree_limit(p0, lam, delta):
    """Almost-sure limit of the normalized degree in a single cluster:
    lam/(lam - ln p0) * p0^(1+delta)."""
    p0 = float(clamp_b(p0))
    return lam / (lam - np.log(p0)) * np.power(p0, 1.0 + np.asarray(delta))


def powerlaw_exponent(p0, lam):
    """Predicted degree-distribution shape parameter 1 + lam/ln(p0)."""
    return 1.0 + lam / np.log(float(p0))
