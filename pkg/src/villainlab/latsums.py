"""Brute-force verification of polynomially-decaying lattice sums.

Three families of sums showing up in decay estimates are evaluated over
finite boxes with explicit truncation-tail estimates:

  convolution_sum     S(x) = sum_y (ln|y-x|_+)^a / |y-x|_+^alpha
                                 * (ln|y|_+)^c / |y|_+^gamma
  double_sum_check    sum_{z,z'} g(z) g(z') K(z - z'),
                      g(z) = (|z|_+^{d-1} |z-x|_+^{d-1})^{-1},
                      K(u) = (ln|u|_+)^a / |u|_+^d,
                      compared against the C / |x|^{2d-2} bound shape
  two_point_kernel_sum  sum_z (ln(|y1-z|_+ + |y2-z|_+))^a
                               / (|y1-z|_+^{2d+1} + |y2-z|_+^{2d+1})
                               * (ln|z|_+)^c / |z|_+^{d-1}

Conventions: |.| is the Euclidean norm, |.|_+ = |.| + 1, natural logs,
and 0^0 = 1 for the log powers.  The double sum is evaluated through its
separable inner convolution with a circular FFT; the wrap-around images
of the kernel are part of the reported truncation error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

__all__ = [
    "SumSpec",
    "convolution_sum",
    "double_sum_check",
    "two_point_kernel_sum",
]


@dataclass(frozen=True)
class SumSpec:
    """Exponents and geometry for the convolution sum."""

    alpha: float
    gamma: float
    a: float = 0.0
    c: float = 0.0
    d: int = 3
    radius: int = 32

    def __post_init__(self):
        if min(self.alpha, self.gamma, self.a, self.c) < 0:
            raise ValueError("exponents must be nonnegative")
        if self.alpha + self.gamma <= self.d:
            raise ValueError(
                f"need alpha + gamma > d for a summable tail, got "
                f"{self.alpha} + {self.gamma} <= {self.d}")


def _norm_plus_grid(d: int, radius: int, center) -> np.ndarray:
    axes = [np.arange(-radius, radius + 1, dtype=np.float64) - c
            for c in center]
    r2 = np.zeros((2 * radius + 1,) * d)
    for ax, v in enumerate(axes):
        shape = [1] * d
        shape[ax] = v.size
        r2 = r2 + (v ** 2).reshape(shape)
    return np.sqrt(r2) + 1.0


def _log_pow(rp: np.ndarray, p: float) -> np.ndarray:
    if p == 0.0:
        return np.ones_like(rp)  # 0^0 = 1 at |y|_+ = 1
    return np.log(rp) ** p


def _tail_estimate(radius: int, d: int, decay: float, logpow: float) -> float:
    """Upper estimate of sum_{|y| > radius} (ln|y|_+)^logpow |y|_+^{-decay}
    via the integral over the outer region (decay > d required)."""
    from scipy.integrate import quad
    surf = {3: 4.0 * np.pi}.get(d, 2.0 * d * 2.0 ** (d - 1))
    val, _ = quad(lambda r: surf * r ** (d - 1) * np.log(r + 1.0) ** logpow
                  * (r + 1.0) ** (-decay), radius, np.inf, limit=200)
    return float(val)


def convolution_sum(spec: SumSpec, x) -> tuple[float, float]:
    """S(x) over the box |y|_inf <= radius, with a truncation-tail estimate.

    Requires radius >= 4 |x|.
    """
    x = tuple(x)
    if spec.radius < 4 * np.linalg.norm(x):
        raise ValueError(f"radius {spec.radius} < 4|x| for x={x}")
    r0 = _norm_plus_grid(spec.d, spec.radius, (0,) * spec.d)
    rx = _norm_plus_grid(spec.d, spec.radius, x)
    total = float(np.sum(_log_pow(rx, spec.a) * rx ** (-spec.alpha)
                         * _log_pow(r0, spec.c) * r0 ** (-spec.gamma)))
    # outside the box |y - x|_+ >= |y|_+ / 2 since radius >= 4|x| >= 2|x|
    tail = 2.0 ** spec.alpha * _tail_estimate(
        spec.radius, spec.d, spec.alpha + spec.gamma, spec.a + spec.c)
    return total, tail


def double_sum_check(x, a: float, radius: int, d: int = 3) -> tuple[float, float]:
    """The two-centre double sum and lhs * |x|^{2d-2} (the bound-shape ratio).

    The inner sum over z' is a convolution; it is evaluated with a circular
    FFT on the summation box, so kernel images at distance >= 2*radius
    contribute a relative error of order (|x|/radius)^d which is far below
    the factor-two tolerances this table feeds.
    """
    x = tuple(x)
    if radius < 4 * np.linalg.norm(x):
        raise ValueError(f"radius {radius} < 4|x| for x={x}")
    r0 = _norm_plus_grid(d, radius, (0,) * d)
    rx = _norm_plus_grid(d, radius, x)
    g = ((r0 ** (d - 1) * rx ** (d - 1)) ** -1.0).astype(np.float32)
    del r0, rx
    n = 2 * radius + 1
    # zero-padded circular convolution = exact linear convolution (single
    # precision; the tolerances downstream are factors of two)
    m = _next_smooth(2 * n - 1)
    axes = np.minimum(np.arange(m), m - np.arange(m)).astype(np.float64)
    u2 = np.zeros((m,) * d, dtype=np.float32)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = m
        u2 = u2 + (axes ** 2).reshape(shape).astype(np.float32)
    up = np.sqrt(u2) + np.float32(1.0)
    del u2
    K = (_log_pow(up, a) * up ** (-float(d))).astype(np.float32)
    del up
    gpad = np.zeros((m,) * d, dtype=np.float32)
    gpad[(slice(0, n),) * d] = g
    conv = sfft.irfftn(sfft.rfftn(gpad) * sfft.rfftn(K), s=(m,) * d)
    del K, gpad
    lhs = float(np.sum(g.astype(np.float64) * conv[(slice(0, n),) * d]))
    ratio = lhs * float(np.linalg.norm(x)) ** (2 * d - 2)
    return lhs, ratio


def _next_smooth(n: int) -> int:
    while True:
        m = n
        for p in (2, 3, 5, 7):
            while m % p == 0:
                m //= p
        if m == 1:
            return n
        n += 1


def two_point_kernel_sum(y1, y2, a: float, c: float, radius: int,
                         d: int = 3) -> tuple[float, float]:
    """The two-centre single sum and its ratio to the bound shape

        (ln(|y1|_+ + |y2|_+))^{a+c} / ((|y1|_+^{d-1} + |y2|_+^{d-1}) |y1-y2|_+^{d+1}).
    """
    y1, y2 = tuple(y1), tuple(y2)
    need = 4 * max(np.linalg.norm(y1), np.linalg.norm(y2))
    if radius < need:
        raise ValueError(f"radius {radius} too small, need >= {need:.0f}")
    r0 = _norm_plus_grid(d, radius, (0,) * d)
    r1 = _norm_plus_grid(d, radius, y1)
    r2 = _norm_plus_grid(d, radius, y2)
    num = np.log(r1 + r2) ** a if a > 0 else np.ones_like(r1)
    lhs = float(np.sum(num / (r1 ** (2 * d + 1) + r2 ** (2 * d + 1))
                       * _log_pow(r0, c) * r0 ** (-(d - 1.0))))
    n1 = float(np.linalg.norm(y1)) + 1.0
    n2 = float(np.linalg.norm(y2)) + 1.0
    n12 = float(np.linalg.norm(np.subtract(y1, y2))) + 1.0
    denom_shape = (np.log(n1 + n2) ** (a + c) if a + c > 0 else 1.0)
    bound = denom_shape / ((n1 ** (d - 1) + n2 ** (d - 1)) * n12 ** (d + 1))
    return lhs, lhs / bound
