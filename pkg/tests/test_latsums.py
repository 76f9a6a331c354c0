"""Lattice-sum inequality tables: stability of the bound constants."""

import numpy as np
import pytest

from villainlab.latsums import (
    SumSpec,
    convolution_sum,
    double_sum_check,
    two_point_kernel_sum,
)


class TestConvolutionSum:
    def test_fast_decay_dominated_by_origin(self):
        spec = SumSpec(alpha=6.0, gamma=6.0, d=3, radius=8)
        s, tail = convolution_sum(spec, (0, 0, 0))
        assert s >= 1.0           # the y = 0 term alone is 1
        assert s < 1.0 + 1.5      # everything else is heavily damped
        assert tail < 1e-3

    def test_first_regime_ratio_stable(self):
        # alpha = gamma = 2 in d = 3: S(x) ~ C / |x|^{alpha+gamma-d} = C/|x|
        ratios = []
        for k in (10, 20, 40):
            spec = SumSpec(alpha=2.0, gamma=2.0, d=3, radius=4 * k)
            s, _ = convolution_sum(spec, (k, 0, 0))
            ratios.append(s * k)
        assert max(ratios) / min(ratios) < 2.0

    def test_symmetry(self):
        spec = SumSpec(alpha=3.0, gamma=3.0, a=1.0, c=1.0, d=3, radius=16)
        s1, _ = convolution_sum(spec, (3, 1, 0))
        s2, _ = convolution_sum(spec, (-3, -1, 0))
        assert s1 == pytest.approx(s2, rel=1e-12)

    def test_tail_shrinks_with_radius(self):
        big = SumSpec(alpha=2.0, gamma=2.0, d=3, radius=32)
        small = SumSpec(alpha=2.0, gamma=2.0, d=3, radius=16)
        s_small, tail_small = convolution_sum(small, (2, 0, 0))
        s_big, tail_big = convolution_sum(big, (2, 0, 0))
        assert tail_big < tail_small
        assert abs(s_big - s_small) < tail_small

    def test_summability_precondition(self):
        with pytest.raises(ValueError):
            SumSpec(alpha=1.0, gamma=1.0, d=3)

    def test_radius_precondition(self):
        spec = SumSpec(alpha=2.0, gamma=2.0, d=3, radius=8)
        with pytest.raises(ValueError):
            convolution_sum(spec, (4, 0, 0))


class TestDoubleSum:
    # the smallest admissible bound constant still drifts at these |x|
    # (it converges like ln|x|/|x|); everything must stay within a factor
    # two of the frozen reference constant
    REFERENCE = 55.0

    def test_bound_ratio_stable(self):
        ratios = []
        for k in (8, 16, 32):
            _, ratio = double_sum_check((k, 0, 0), 0.0, radius=4 * k)
            ratios.append(ratio)
        assert all(self.REFERENCE / 2 < r < self.REFERENCE * 2 for r in ratios)

    def test_finite_at_origin(self):
        lhs, _ = double_sum_check((0, 0, 0), 0.0, radius=16)
        assert np.isfinite(lhs) and lhs > 0

    def test_decreasing_along_axis(self):
        vals = [double_sum_check((k, 0, 0), 0.0, radius=130)[0] for k in (8, 16, 32)]
        assert vals[0] > vals[1] > vals[2]

    def test_radius_precondition(self):
        with pytest.raises(ValueError):
            double_sum_check((8, 0, 0), 0.0, radius=16)


class TestTwoPointKernelSum:
    def test_coincident_points_reduce_to_single_centre(self):
        y = (3, 0, 0)
        lhs, _ = two_point_kernel_sum(y, y, 0.0, 0.0, radius=16)
        # sum_z 1/(2 |y-z|_+^{2d+1}) * 1/|z|_+^{d-1}
        spec = SumSpec(alpha=2 * 3 + 1, gamma=3 - 1, d=3, radius=16)
        ref, _ = convolution_sum(spec, y)
        assert lhs == pytest.approx(ref / 2.0, rel=1e-12)

    def test_swap_symmetry(self):
        y1, y2 = (4, 1, 0), (0, -3, 2)
        a, c = 1.0, 1.0
        l1, _ = two_point_kernel_sum(y1, y2, a, c, radius=24)
        l2, _ = two_point_kernel_sum(y2, y1, a, c, radius=24)
        assert l1 == pytest.approx(l2, rel=1e-12)

    # frozen regression constant for the (a, c) = (0, 1) ratio table on the
    # lattice realizations of the (|y1|, |y2|, |y1-y2|) grid
    # {(8,8,4), (16,8,12), (16,16,24)}
    GRID_PAIRS = [((8, 0, 0), (7, 4, 0)),
                  ((16, 0, 0), (5, 6, 2)),
                  ((16, 0, 0), (-2, 11, 11))]
    REFERENCE = 8.9

    def test_ratio_bounded_over_grid(self):
        ratios = [two_point_kernel_sum(y1, y2, 0.0, 1.0, radius=66)[1]
                  for y1, y2 in self.GRID_PAIRS]
        assert all(np.isfinite(r) and r > 0 for r in ratios)
        assert all(self.REFERENCE / 2 < r < self.REFERENCE * 2 for r in ratios)
