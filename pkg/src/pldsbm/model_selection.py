"""Integrated complete log-likelihood (ICL) scoring and K-sweep driver."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .inference import fit
from .model import ValidationError, joint_log_prob


def icl_penalty(K, n):
    """Complexity penalty: (K-1)/2 log N + K(K+1)/4 log(N(N-1)/2)."""
    return -0.5 * (K - 1) * np.log(n) - 0.25 * K * (K + 1) * np.log(
        n * (n - 1) / 2.0
    )


def icl_score(g, result):
    """ICL of a fitted model: joint log-probability at the hard
    assignment z* and fitted delta_bar, minus complexity penalties."""
    joint = joint_log_prob(
        g, result.z_star, result.state.delta_bar, result.params
    )
    return joint + float(icl_penalty(result.params.K, g.n_nodes))


@dataclass(frozen=True)
class IclSweep:
    ks: tuple
    scores: tuple
    fits: tuple

    @property
    def best_k(self):
        """Argmax of the ICL score; ties break toward smaller K."""
        best = int(np.argmax(self.scores))
        return self.ks[best]

    def best_fit(self):
        return self.fits[self.ks.index(self.best_k)]


def select_k(g, k_range, cfg, threads=1):
    """Fit every K in k_range (same seed schedule each) and score by ICL."""
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ValidationError("k_range must be non-empty")
    if ks[-1] > g.n_nodes:
        raise ValidationError(f"max K {ks[-1]} exceeds node count {g.n_nodes}")

    def run(k):
        return fit(g, replace(cfg, K=k))

    if threads > 1 and len(ks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            fits = list(ex.map(run, ks))
    else:
        fits = [run(k) for k in ks]
    scores = tuple(icl_score(g, f) for f in fits)
    return IclSweep(ks=tuple(ks), scores=scores, fits=tuple(fits))
