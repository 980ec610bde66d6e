from itertools import permutations

import numpy as np
import pytest

from pldsbm.evaluation import (
    clustering_error,
    confusion_matrix,
    degree_histogram,
    degree_histogram_from_degrees,
    nmi,
    powerlaw_slope,
)
from pldsbm.graph import Graph
from pldsbm.model import ValidationError


def labels_from_confusion(c):
    """Expand a confusion-count matrix into (truth, pred) label arrays."""
    truth, pred = [], []
    for t in range(c.shape[0]):
        for p in range(c.shape[1]):
            truth += [t] * int(c[t, p])
            pred += [p] * int(c[t, p])
    return np.array(truth), np.array(pred)


class TestConfusion:
    def test_small_hand_case(self):
        c = confusion_matrix([0, 0, 1, 1], [0, 1, 1, 1])
        assert c.tolist() == [[1, 1], [0, 2]]

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            confusion_matrix([0, 1], [0])


class TestClusteringError:
    def test_perfect_and_relabeled(self):
        z = np.array([0, 0, 1, 1, 2, 2])
        assert clustering_error(z, z).error_count == 0
        swapped = np.array([2, 2, 0, 0, 1, 1])
        assert clustering_error(z, swapped).error_count == 0

    def test_single_mistake(self):
        z = np.array([0, 0, 0, 1, 1, 1])
        pred = np.array([1, 1, 1, 0, 0, 1])
        m = clustering_error(z, pred)
        assert m.error_count == 1
        assert m.error_rate == pytest.approx(1 / 6)

    def test_matches_brute_force_over_permutations(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            k = int(rng.integers(1, 7))
            n = int(rng.integers(k, 30))
            truth = rng.integers(0, k, n)
            pred = rng.integers(0, k, n)
            got = clustering_error(truth, pred).error_count
            best = n
            for perm in permutations(range(k)):
                remap = np.array(perm)[pred]
                best = min(best, int((remap != truth).sum()))
            assert got == best

    def test_symmetric_in_arguments(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = rng.integers(0, 4, 40)
            b = rng.integers(0, 4, 40)
            assert (
                clustering_error(a, b).error_count
                == clustering_error(b, a).error_count
            )

    def test_rectangular_confusions(self):
        # more predicted clusters than true ones and vice versa
        m = clustering_error([0, 0, 0, 0], [0, 1, 2, 3])
        assert m.error_count == 3
        m = clustering_error([0, 1, 2, 3], [0, 0, 0, 0])
        assert m.error_count == 3

    def test_grade_network_confusions(self):
        # published 6-grade confusion tables: totals 69, errors 13 and 7
        sbm = np.array(
            [
                [13, 1, 0, 0, 0, 0],
                [0, 11, 1, 0, 0, 0],
                [0, 0, 14, 0, 0, 2],
                [0, 0, 0, 8, 0, 2],
                [0, 0, 0, 2, 7, 4],
                [0, 0, 0, 0, 1, 3],
            ]
        )
        pld = np.array(
            [
                [13, 1, 0, 0, 0, 0],
                [0, 11, 1, 0, 0, 0],
                [0, 0, 14, 0, 0, 2],
                [0, 0, 0, 10, 0, 0],
                [0, 0, 0, 0, 11, 2],
                [0, 0, 0, 0, 1, 3],
            ]
        )
        for c, want in ((sbm, 13), (pld, 7)):
            truth, pred = labels_from_confusion(c)
            assert truth.size == 69
            assert clustering_error(truth, pred).error_count == want


class TestNmi:
    def test_identity_and_relabel(self):
        z = np.array([0, 0, 1, 1, 2, 2])
        assert nmi(z, z) == pytest.approx(1.0)
        assert nmi(z, 2 - z) == pytest.approx(1.0)

    def test_constant_prediction_is_zero(self):
        z = np.array([0, 0, 1, 1])
        assert nmi(z, np.zeros(4, dtype=int)) == pytest.approx(0.0)

    def test_average_method_ordering(self):
        rng = np.random.default_rng(5)
        t = rng.integers(0, 3, 200)
        p = rng.integers(0, 5, 200)
        vmin = nmi(t, p, average_method="min")
        vmax = nmi(t, p, average_method="max")
        var = nmi(t, p, average_method="arithmetic")
        vgeo = nmi(t, p, average_method="geometric")
        assert vmax <= var <= vgeo <= vmin

    def test_symmetric(self):
        rng = np.random.default_rng(7)
        a = rng.integers(0, 3, 100)
        b = rng.integers(0, 4, 100)
        assert nmi(a, b) == pytest.approx(nmi(b, a))


class TestDegreeHistogram:
    def test_graph_histogram(self):
        g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
        assert degree_histogram(g) == {1: 3, 3: 1}

    def test_includes_zero_degree(self):
        g = Graph.from_edges(3, [(0, 1)])
        assert degree_histogram(g) == {0: 1, 1: 2}

    def test_from_degrees(self):
        assert degree_histogram_from_degrees([2, 2, 5]) == {2: 2, 5: 1}


class TestPowerlawSlope:
    def test_exact_power_law_raw(self):
        ks = np.arange(1, 40)
        hist = {int(k): float(k) ** -2.0 for k in ks}
        slope, intercept, r2 = powerlaw_slope(hist, binned=False)
        assert slope == pytest.approx(-2.0, abs=1e-9)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_exact_power_law_raw_with_tail_cut(self):
        # truncation keeps a subset of exact points: slope unchanged
        ks = np.arange(1, 40)
        hist = {int(k): 1000.0 * float(k) ** -1.5 for k in ks}
        slope, _, _ = powerlaw_slope(hist, binned=False, tail_quantile=0.9)
        assert slope == pytest.approx(-1.5, abs=1e-9)

    def test_binned_recovers_slope_approximately(self):
        rng = np.random.default_rng(11)
        # sample from p(k) ~ k^-2.5 on 1..1000
        ks = np.arange(1, 1001)
        p = ks**-2.5
        p /= p.sum()
        samples = rng.choice(ks, size=200_000, p=p)
        slope, _, _ = powerlaw_slope(samples, bins=20, binned=True)
        assert slope == pytest.approx(-2.5, abs=0.25)

    def test_degenerate_inputs_error(self):
        with pytest.raises(ValidationError):
            powerlaw_slope({3: 10}, binned=True)
        with pytest.raises(ValidationError):
            powerlaw_slope({1: 5, 2: 3}, binned=False)
        with pytest.raises(ValidationError):
            powerlaw_slope({0: 100}, binned=False)

    def test_bad_tail_quantile(self):
        with pytest.raises(ValidationError):
            powerlaw_slope({1: 1, 2: 1, 3: 1}, binned=False, tail_quantile=1.5)
