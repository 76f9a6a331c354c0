"""Spin models on rooted graphs: weights, Metropolis, quadrature, metric graphs."""

import numpy as np
import pytest
from scipy import fft as sfft

from villainlab.estimators import dunlop_newman_residual
from villainlab.spins import (
    ChainParams,
    GraphSpinChain,
    RootedGraph,
    build_metric_graph,
    chain_graph,
    estimate_graph_correlations,
    graph_quadrature,
    metric_graph_convergence,
    star_graph,
    triangle_graph,
    villain_truncation_error,
    villain_weight,
    wrap_angle,
)


def _iterated_convolution(beta_edge, n, grid):
    """n-fold circular convolution of the normalized kernel exp(beta_edge cos),
    as a density over the grid.  With the grid origin at index N/2, an n-fold
    index convolution carries a cumulative (n-1) N/2 shift that must be
    rolled away."""
    N = grid.size
    k = np.exp(beta_edge * np.cos(grid))
    k /= k.sum()
    kn = np.real(sfft.ifft(sfft.fft(k) ** n))
    return np.roll(kn, -((n - 1) * (N // 2)) % N)


class TestVillainWeight:
    def test_symmetry(self):
        for th in (0.3, 1.2, 3.0):
            assert villain_weight(th, 2.0, 8) == villain_weight(-th, 2.0, 8)

    def test_periodicity(self):
        # exact as M -> infinity; at M = 10, beta = 1 the shift error is
        # far below 1e-12
        a = villain_weight(0.4, 1.0, 10)
        b = villain_weight(0.4 + 2 * np.pi, 1.0, 10)
        assert abs(a - b) < 1e-12 * a

    def test_partial_sum_value(self):
        # beta = 1, theta = 0: sum exp(-2 pi^2 m^2)
        expect = sum(np.exp(-2 * np.pi ** 2 * m * m) for m in range(-10, 11))
        assert villain_weight(0.0, 1.0, 10) == pytest.approx(expect, rel=1e-15)

    def test_truncation_error_bound(self):
        assert villain_truncation_error(1.0, 10) == pytest.approx(np.exp(-20 * np.pi ** 2))

    def test_rejects_bad_m(self):
        with pytest.raises(ValueError):
            villain_weight(0.0, 1.0, 0)


class TestMetropolis:
    def test_beta_zero_accepts_everything(self):
        chain = GraphSpinChain(chain_graph(3), ChainParams(beta=0.0, sweeps=10, seed=1))
        for _ in range(5):
            assert chain.metropolis_sweep() == 1.0

    def test_frozen_root_never_moves(self):
        chain = GraphSpinChain(triangle_graph(), ChainParams(beta=1.0, seed=2))
        for _ in range(50):
            chain.metropolis_sweep()
        assert chain.config.theta[0] == 0.0

    def test_two_site_matches_quadrature(self):
        g = chain_graph(1)
        quad = graph_quadrature(g, 1.5, "villain", [(0, 1)])[(0, 1)]
        params = ChainParams(beta=1.5, model="villain", sweeps=40_000,
                             burn_in=2_000, thinning=2, seed=3)
        samples = GraphSpinChain(g, params).run()
        est = estimate_graph_correlations(samples, [(0, 1)])[(0, 1)]
        z = abs(est["cos_y"].mean - quad["cos_y"]) / est["cos_y"].std_error
        assert z < 3.0

    def test_reproducible_with_seed(self):
        params = ChainParams(beta=1.0, sweeps=200, burn_in=10, seed=17)
        a = GraphSpinChain(triangle_graph(), params).run()
        b = GraphSpinChain(triangle_graph(), params).run()
        assert np.array_equal(a, b)

    def test_detailed_balance_on_two_site_histogram(self):
        # empirical marginal of the free site matches the exact density
        g = chain_graph(1)
        params = ChainParams(beta=2.0, model="xy", sweeps=60_000, burn_in=2_000, seed=4)
        samples = GraphSpinChain(g, params).run()[:, 1]
        hist, edges = np.histogram(samples, bins=24, range=(-np.pi, np.pi), density=True)
        centers = 0.5 * (edges[1:] + edges[:-1])
        dens = np.exp(2.0 * np.cos(centers))
        dens /= np.trapezoid(dens, centers) + (dens[0] + dens[-1]) * 0  # normalize
        dens /= np.sum(dens) * (centers[1] - centers[0])
        assert np.max(np.abs(hist - dens)) < 0.05


class TestQuadrature:
    def test_sin_mean_vanishes(self):
        q = graph_quadrature(triangle_graph(), 1.0, "villain", [(1, 2)])[(1, 2)]
        # theta -> -theta symmetry: sinsin is even, single sin odd; check the
        # trig consistency identity instead of raw sin
        assert q["coscos"] == pytest.approx(0.5 * q["cosminus"] + 0.5 * q["cosplus"],
                                            abs=1e-12)

    def test_star_graph_runs(self):
        q = graph_quadrature(star_graph(2), 1.0, "xy", [(1, 2), (2, 3)])
        assert q[(1, 2)]["coscos"] > 0

    def test_too_many_free_vertices(self):
        from villainlab.estimators import InsufficientDataError
        with pytest.raises(InsufficientDataError):
            graph_quadrature(chain_graph(4), 1.0, "xy", [(0, 1)])

    def test_quadrature_vs_mc_three_free(self):
        g = chain_graph(3)
        pairs = [(0, 3), (1, 2)]
        quad = graph_quadrature(g, 1.0, "villain", pairs)
        params = ChainParams(beta=1.0, model="villain", sweeps=50_000,
                             burn_in=2_000, thinning=2, seed=5)
        samples = GraphSpinChain(g, params).run()
        est = estimate_graph_correlations(samples, pairs)
        for pair in pairs:
            for obs in ("coscos", "sinsin", "cosminus"):
                e = est[pair][obs]
                z = abs(e.mean - quad[pair][obs]) / max(e.std_error, 1e-12)
                assert z < 3.5, (pair, obs, e.mean, quad[pair][obs])


class TestDunlopNewman:
    def test_triangle_xy_quadrature(self):
        q = graph_quadrature(triangle_graph(), 1.0, "xy", [(1, 2)])[(1, 2)]
        res = (q["coscos"] - q["cos_x"] * q["cos_y"]) \
            * (q["coscos"] + q["cos_x"] * q["cos_y"]) - q["sinsin"] ** 2
        assert res >= -1e-8

    def test_beta_zero_limit(self):
        q = graph_quadrature(triangle_graph(), 1e-8, "xy", [(1, 2)])[(1, 2)]
        for key in ("coscos", "sinsin", "cos_x", "cos_y"):
            assert abs(q[key]) < 1e-6

    def test_mc_residual_with_error(self):
        g = triangle_graph()
        pa = ChainParams(beta=1.0, model="villain", sweeps=30_000, burn_in=2_000, seed=6)
        pb = ChainParams(beta=1.0, model="villain", sweeps=30_000, burn_in=2_000, seed=7)
        sa = GraphSpinChain(g, pa).run()
        sb = GraphSpinChain(g, pb).run()
        est = estimate_graph_correlations(sa, [(1, 2)], samples_b=sb)[(1, 2)]
        res = dunlop_newman_residual(est["coscos"], est["cos_x"], est["cos_y"],
                                     est["sinsin"])
        assert res.residual >= -3.0 * res.std_error


class TestMetricGraph:
    def test_identity_subdivision(self):
        g = triangle_graph()
        assert build_metric_graph(g, 1).edges == g.edges

    def test_single_edge_subdivision_counts(self):
        g = chain_graph(1)
        g4 = build_metric_graph(g, 4)
        assert g4.n_vertices == 2 + 3
        assert len(g4.edges) == 4

    def test_count_formula(self):
        g = triangle_graph()
        for n in (2, 3, 5):
            gn = build_metric_graph(g, n)
            assert gn.n_vertices == g.n_vertices + (n - 1) * len(g.edges)
            assert len(gn.edges) == n * len(g.edges)

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            build_metric_graph(triangle_graph(), 0)

    def test_convergence_single_edge(self):
        rows = metric_graph_convergence(chain_graph(1), 1.0, 0, 1, [1, 2, 4, 8, 16])
        gaps = [r["gap_coscos"] for r in rows]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        # first-order convergence: gap(n) ~ e^{-1/(2 beta)} / (4 n beta^2),
        # from ln(I_1(z)/I_0(z)) = -1/(2z) - 1/(4 z^2) + O(z^-3)
        assert gaps[-1] == pytest.approx(np.exp(-0.5) / (4 * 16), rel=0.15)

    def test_n_one_gap_is_plain_model_gap(self):
        g = chain_graph(1)
        rows = metric_graph_convergence(g, 1.0, 0, 1, [1])
        xy = graph_quadrature(g, 1.0, "xy", [(0, 1)])[(0, 1)]["coscos"]
        vil = graph_quadrature(g, 1.0, "villain", [(0, 1)])[(0, 1)]["coscos"]
        assert rows[0]["gap_coscos"] == pytest.approx(abs(xy - vil), abs=1e-12)

    def test_marginalized_kernel_matches_fft_convolution_oracle(self):
        # iterated circular convolution of exp(n beta cos) vs the Bessel
        # coefficients used by the quadrature kernel
        beta, n = 1.0, 8
        N = 4096
        grid = -np.pi + 2 * np.pi * np.arange(N) / N
        kn = _iterated_convolution(n * beta, n, grid)
        from villainlab.spins import _edge_weight_table
        w = _edge_weight_table("xy", n * beta, 10, n, grid)
        w /= w.sum()
        assert np.max(np.abs(kn - w)) < 1e-12

    def test_wrapped_gaussian_semigroup_l1(self):
        # n-fold circular convolution of the normalized XY kernel at n*beta
        # approaches the Villain heat kernel v_beta in L^1
        beta = 1.0
        N = 4096
        grid = -np.pi + 2 * np.pi * np.arange(N) / N
        v = villain_weight(grid, beta, 10)
        v /= v.sum()
        dists = []
        for n in (2, 8, 32):
            kn = _iterated_convolution(n * beta, n, grid)
            dists.append(np.sum(np.abs(kn - v)))
        assert dists[0] > dists[1] > dists[2]
        assert dists[-1] < 0.02


class TestWrapAngle:
    def test_range(self):
        rng = np.random.default_rng(8)
        th = rng.uniform(-20, 20, size=1000)
        w = wrap_angle(th)
        assert np.all(w >= -np.pi) and np.all(w < np.pi)
        assert np.allclose(np.cos(w), np.cos(th), atol=1e-12)
