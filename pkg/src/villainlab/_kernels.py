"""Numba kernels for the hot lattice sweeps.

All kernels consume pregenerated random arrays indexed by site (or edge),
and checkerboard passes only read the opposite colour, so the sample path
is bit-identical regardless of the number of threads.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

TWO_PI = 2.0 * np.pi


@njit(parallel=True, cache=True)
def gibbs_theta_pass(theta, bsum, noise, parity, sigma):
    """Heat-bath update of every interior site with (i+j+k) % 2 == parity.

    theta: (S,S,S) angles, boundary layers frozen; bsum: 2 pi * div m offsets;
    noise: standard normals consumed at the updated sites; sigma = 1/sqrt(2 d beta).
    """
    S = theta.shape[0]
    for i in prange(1, S - 1):
        for j in range(1, S - 1):
            k0 = 1 + ((parity + i + j + 1) & 1)
            for k in range(k0, S - 1, 2):
                mean = (theta[i - 1, j, k] + theta[i + 1, j, k]
                        + theta[i, j - 1, k] + theta[i, j + 1, k]
                        + theta[i, j, k - 1] + theta[i, j, k + 1]
                        + bsum[i, j, k]) / 6.0
                theta[i, j, k] = mean + sigma * noise[i, j, k]


@njit(parallel=True, cache=True)
def m_gibbs_pass(theta, m1, m2, m3, beta, uni, changed):
    """Exact Gibbs resampling of the integer bond field given theta.

    For each edge, u = theta(head) - theta(tail); the discrete Gaussian over
    the wrapping integer is sampled from the window mode-1..mode+1, which is
    exact to double precision for beta >= 1/4.  uni holds one uniform per
    edge; changed[0] counts modified bonds (diagnostic).  Edges whose
    neighbouring weights are below 5e-15 of the mode keep the mode without
    touching the exponentials (the skipped probability mass is at the level
    of double rounding).
    """
    S = theta.shape[0]
    c = np.exp(-2.0 * np.pi ** 2 * beta)
    # |r| below this cannot put >= 5e-15 of mass on the neighbours
    rthr = (2.0 * np.pi ** 2 * beta - 33.0) / (TWO_PI * beta)
    nchanged = 0
    for i in prange(S):
        local = 0
        for j in range(S):
            for k in range(S):
                for a in range(3):
                    if a == 0:
                        if i >= S - 1:
                            continue
                        u0 = theta[i + 1, j, k] - theta[i, j, k]
                        mold = m1[i, j, k]
                    elif a == 1:
                        if j >= S - 1:
                            continue
                        u0 = theta[i, j + 1, k] - theta[i, j, k]
                        mold = m2[i, j, k]
                    else:
                        if k >= S - 1:
                            continue
                        u0 = theta[i, j, k + 1] - theta[i, j, k]
                        mold = m3[i, j, k]
                    mstar = int(np.floor(0.5 - u0 / TWO_PI))
                    r = u0 + TWO_PI * mstar
                    mnew = mstar
                    if abs(r) >= rthr:
                        wp = c * np.exp(-TWO_PI * beta * r)
                        wm = c * np.exp(TWO_PI * beta * r)
                        if wp + wm > 1e-14:
                            tot = 1.0 + wp + wm
                            x = uni[a, i, j, k] * tot
                            if x < wm:
                                mnew = mstar - 1
                            elif x < wm + wp:
                                mnew = mstar + 1
                    if mnew != mold:
                        local += 1
                        if a == 0:
                            m1[i, j, k] = mnew
                        elif a == 1:
                            m2[i, j, k] = mnew
                        else:
                            m3[i, j, k] = mnew
        nchanged += local
    changed[0] = nchanged


@njit(cache=True)
def _log_villain(u, beta, c1, c2):
    """log of the wrapped heat kernel with two image pairs, after wrapping u.

    Exact to double precision for beta >= ~0.6 and within 2e-8 relative down
    to beta = 0.1 (images |m| >= 3 are dropped).
    """
    w = u - TWO_PI * np.rint(u / TWO_PI)
    t = 2.0 * c1 * np.cosh(TWO_PI * beta * w) + 2.0 * c2 * np.cosh(2.0 * TWO_PI * beta * w)
    return -0.5 * beta * w * w + np.log1p(t)


@njit(parallel=True, cache=True)
def metropolis_pass(theta, parity, beta, width, model_xy, prop, uni, acc):
    """Checkerboard Metropolis on the interior sites of one colour.

    prop: uniform(-1,1) proposal draws; uni: uniform(0,1) acceptance draws;
    acc[0] accumulates acceptances.  XY: weight exp(beta cos u); Villain:
    the wrapped heat kernel via _log_villain.
    """
    S = theta.shape[0]
    c1 = np.exp(-2.0 * np.pi ** 2 * beta)
    c2 = np.exp(-8.0 * np.pi ** 2 * beta)
    naccept = 0
    for i in prange(1, S - 1):
        local = 0
        for j in range(1, S - 1):
            k0 = 1 + ((parity + i + j + 1) & 1)
            for k in range(k0, S - 1, 2):
                old = theta[i, j, k]
                new = old + width * prop[i, j, k]
                new -= TWO_PI * np.rint(new / TWO_PI)
                delta = 0.0
                if model_xy:
                    delta += np.cos(new - theta[i - 1, j, k]) - np.cos(old - theta[i - 1, j, k])
                    delta += np.cos(new - theta[i + 1, j, k]) - np.cos(old - theta[i + 1, j, k])
                    delta += np.cos(new - theta[i, j - 1, k]) - np.cos(old - theta[i, j - 1, k])
                    delta += np.cos(new - theta[i, j + 1, k]) - np.cos(old - theta[i, j + 1, k])
                    delta += np.cos(new - theta[i, j, k - 1]) - np.cos(old - theta[i, j, k - 1])
                    delta += np.cos(new - theta[i, j, k + 1]) - np.cos(old - theta[i, j, k + 1])
                    delta *= beta
                else:
                    delta += _log_villain(new - theta[i - 1, j, k], beta, c1, c2) \
                        - _log_villain(old - theta[i - 1, j, k], beta, c1, c2)
                    delta += _log_villain(new - theta[i + 1, j, k], beta, c1, c2) \
                        - _log_villain(old - theta[i + 1, j, k], beta, c1, c2)
                    delta += _log_villain(new - theta[i, j - 1, k], beta, c1, c2) \
                        - _log_villain(old - theta[i, j - 1, k], beta, c1, c2)
                    delta += _log_villain(new - theta[i, j + 1, k], beta, c1, c2) \
                        - _log_villain(old - theta[i, j + 1, k], beta, c1, c2)
                    delta += _log_villain(new - theta[i, j, k - 1], beta, c1, c2) \
                        - _log_villain(old - theta[i, j, k - 1], beta, c1, c2)
                    delta += _log_villain(new - theta[i, j, k + 1], beta, c1, c2) \
                        - _log_villain(old - theta[i, j, k + 1], beta, c1, c2)
                if delta >= 0.0 or uni[i, j, k] < np.exp(delta):
                    theta[i, j, k] = new
                    local += 1
        naccept += local
    acc[0] = naccept
