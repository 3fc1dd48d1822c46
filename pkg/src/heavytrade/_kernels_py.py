"""Pure-numpy kernels for the per-round hot loops.

The compiled extension ``heavytrade._kernels`` implements the same five
functions with identical signatures; ``heavytrade.backend`` picks one at
import. Keep the two in sync -- the parity tests compare them elementwise.

Noise "profiles" are (family code, parameter vector) pairs produced by
``NoiseModel.profile()``:

* 0 gaussian   [sigma]
* 1 uniform    [half_width]
* 2 student_t  [nu, normalization]
* 3 piecewise  [k, left_0..left_{k-1}, right_0.., height_0..]

``profile_partial_moment`` evaluates  J(d) = int_{min(0,d)}^{max(0,d)} |s| f(s) ds
in closed form; the expected per-round regret of pricing at offset d is
J_xi(d) + J_zeta(d), which the quadrature route in ``trade`` cross-checks.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def gain_batch(price, v, w):
    """Gain from trade |v-w| * 1{min <= price <= max}, elementwise."""
    price = np.asarray(price, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    lo = np.minimum(v, w)
    hi = np.maximum(v, w)
    return np.where((lo <= price) & (price <= hi), hi - lo, 0.0)


def profile_partial_moment(deltas, code, params):
    """Closed-form J(d) = int over [min(0,d), max(0,d)] of |s| f(s) ds."""
    d = np.asarray(deltas, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    if code == 0:  # gaussian
        sigma = params[0]
        f0 = 1.0 / (sigma * _SQRT_2PI)
        return -sigma * sigma * f0 * np.expm1(-0.5 * (d / sigma) ** 2)
    if code == 1:  # uniform
        a = params[0]
        reach = np.minimum(np.abs(d), a)
        return reach * reach / (4.0 * a)
    if code == 2:  # student_t
        nu, c = params
        return -c * nu / (nu - 1.0) * np.expm1(0.5 * (1.0 - nu) * np.log1p(d * d / nu))
    if code == 3:  # piecewise constant
        k = int(params[0])
        left = params[1:1 + k]
        right = params[1 + k:1 + 2 * k]
        height = params[1 + 2 * k:1 + 3 * k]
        lo = np.minimum(d, 0.0)[..., None]
        hi = np.maximum(d, 0.0)[..., None]
        a = np.maximum(left, lo)
        b = np.minimum(right, hi)
        # antiderivative of |s| is s|s|/2
        seg = 0.5 * (b * np.abs(b) - a * np.abs(a))
        return np.where(b > a, seg * height, 0.0).sum(axis=-1)
    raise ValueError(f"unknown profile code {code}")


def regret_profile(deltas, code_xi, params_xi, code_zeta, params_zeta):
    """Expected per-round regret of pricing at offset delta from the market value."""
    return (profile_partial_moment(deltas, code_xi, params_xi)
            + profile_partial_moment(deltas, code_zeta, params_zeta))


def truncated_mean_given_tau(y, tau):
    """((1/n) sum y_i 1{|y_i| <= tau}, kept count); zeroed samples stay in n."""
    y = np.asarray(y, dtype=np.float64)
    keep = np.abs(y) <= tau
    return float(np.where(keep, y, 0.0).sum() / y.size), int(keep.sum())


def score_truncated_means(contexts, responses, tau):
    """Coordinate-wise truncated means of the score vectors x_s * y_s.

    Returns (mu[d], kept[d]) where the shared threshold tau applies per
    coordinate of the scores.
    """
    x = np.asarray(contexts, dtype=np.float64)
    y = np.asarray(responses, dtype=np.float64)
    scores = x * y[:, None]
    keep = np.abs(scores) <= tau
    mu = np.where(keep, scores, 0.0).sum(axis=0) / y.size
    return mu, keep.sum(axis=0).astype(np.int64)


def cell_truncated_stats(cells, responses, n_cells, u, p, log_term):
    """Per-cell counts, truncated sums, and kept counts.

    Each cell's threshold uses its own realized count:
    tau_j = (u * n_j / log_term)^(1/p).
    """
    cells = np.asarray(cells, dtype=np.int64)
    y = np.asarray(responses, dtype=np.float64)
    counts = np.bincount(cells, minlength=n_cells)
    tau = np.zeros(n_cells)
    nz = counts > 0
    tau[nz] = (u * counts[nz] / log_term) ** (1.0 / p)
    keep = np.abs(y) <= tau[cells]
    sums = np.bincount(cells, weights=np.where(keep, y, 0.0), minlength=n_cells)
    kept = np.bincount(cells[keep], minlength=n_cells)
    return counts.astype(np.int64), sums, kept.astype(np.int64)
