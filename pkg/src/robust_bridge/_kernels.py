"""Compiled inner loops for path simulation.

Imported lazily by :mod:`robust_bridge.montecarlo` so that commands which do
not simulate never pay the JIT import cost.
"""

from __future__ import annotations

import math

import numba

_HALF_ULP = 2.0**-54


@numba.njit(cache=True)
def ppnd(p):
    """Inverse standard normal CDF, Wichura's AS 241 (PPND16), ~1e-16 relative accuracy."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                         + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                       + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                     + 1.3314166789178437745e2) * r + 3.3871328727963666080e0) / \
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                  + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
              + 4.2313330701600911252e1) * r + 1.0)
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0) / \
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                  + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
              + 2.05319162663775882187e0) * r + 1.0)
    else:
        r -= 5.0
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0) / \
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                  + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
              + 5.99832206555887937690e-1) * r + 1.0)
    return -val if q < 0.0 else val


@numba.njit(cache=True)
def uniform_to_normal(v):
    """Map a ``Generator.random()`` draw ``v = k 2^-53`` to a standard normal.

    The draw is shifted to the midpoint ``(k + 1/2) 2^-53`` of its cell, which
    is exact in both halves when the upper half is reflected through ``1 - v``;
    the map is odd around 1/2 and never returns an infinity.
    """
    if v < 0.5:
        return ppnd(v + _HALF_ULP)
    return -ppnd((1.0 - v) - _HALF_ULP)


@numba.njit(cache=True)
def normals(u, out):
    flat_u = u.ravel()
    flat_o = out.ravel()
    for i in range(flat_u.size):
        flat_o[i] = uniform_to_normal(flat_u[i])


@numba.njit(cache=True)
def advance(u, k0, x, total, entropy, drift, vol, inv_den, ent_w, track, trace_col, traces):
    """Advance every path of a block through steps ``k0 .. k0 + u.shape[1] - 1``.

    ``u`` holds one row of uniforms per path. State arrays are updated in
    place; ``traces`` rows (one per traced path) receive ``max(x, 0)`` at
    nodes whose ``trace_col`` entry is nonnegative.
    """
    count, steps = u.shape
    keep = traces.shape[0]
    for i in range(count):
        xi = x[i]
        tot = total[i]
        ent = entropy[i]
        for j in range(steps):
            k = k0 + j
            xp = xi if xi > 0.0 else 0.0
            if i < keep:
                c = trace_col[k]
                if c >= 0:
                    traces[i, c] = xp
            if track:
                ent += ent_w[k] * xp
            z = uniform_to_normal(u[i, j])
            # x <- (x + a dt + sigma sqrt(lam dt) sqrt(x+) dB) / den
            xi = (xi + drift[k] + vol[k] * math.sqrt(xp) * z) * inv_den[k + 1]
            if xi > 0.0:
                tot += xi
        x[i] = xi
        total[i] = tot
        entropy[i] = ent

