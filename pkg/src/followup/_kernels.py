"""Numba-compiled simulation kernels.

Everything here works on scalars and flat numpy arrays so that segment
simulation, generator steps, full-horizon rollouts and the batched filter
updates run at native speed.  The public API in :mod:`followup.dynamics`
wraps these with the value types from :mod:`followup.patient`.

All samplers draw from an explicit ``numpy.random.Generator``; given the
same generator state the kernels are bit-reproducible.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)

DELAY_VALUES = np.array([15.0, 30.0, 60.0])

# rollout policy ids
ROLLOUT_MODE = 0
ROLLOUT_UNIFORM = 1


@njit(**_JIT)
def plin_eval(ku, ky, x):
    """Piecewise-linear interpolation, constant beyond the outer knots."""
    n = ku.shape[0]
    if x <= ku[0]:
        return ky[0]
    for i in range(1, n):
        if x <= ku[i]:
            w = (x - ku[i - 1]) / (ku[i] - ku[i - 1])
            return ky[i - 1] + w * (ky[i] - ky[i - 1])
    return ky[n - 1]


@njit(**_JIT)
def plin_invert(ku, ky, u0, target):
    """Smallest s >= 0 with integral_{u0}^{u0+s} mu = target (inf if the
    total remaining mass never reaches the target).

    The cumulative hazard of a piecewise-linear rate is piecewise
    quadratic, so each piece inverts in closed form.
    """
    if target <= 0.0:
        return 0.0
    n = ku.shape[0]
    x = u0
    y = plin_eval(ku, ky, u0)
    rem = target
    for i in range(n):
        if ku[i] <= x:
            continue
        x2 = ku[i]
        y2 = ky[i]
        dx = x2 - x
        area = 0.5 * (y + y2) * dx
        if area >= rem:
            k = (y2 - y) / dx
            if k == 0.0:
                return (x - u0) + rem / y
            disc = y * y + 2.0 * k * rem
            return (x - u0) + (math.sqrt(disc) - y) / k
        rem -= area
        x = x2
        y = y2
    ylast = ky[n - 1]
    if ylast <= 0.0:
        return math.inf
    return (x - u0) + rem / ylast


@njit(**_JIT)
def escape_invert(zeta, v, alpha, beta, scale, target):
    """Invert the cumulative escape hazard along the flow zeta*exp(v*t).

    The rate scale*(beta*zeta*exp(v*t))**alpha is exponential in t, so the
    cumulative hazard is A*(exp(g*t)-1)/g with A = scale*(beta*zeta)**alpha
    and g = alpha*v, invertible in closed form.
    """
    if target <= 0.0:
        return 0.0
    if scale <= 0.0:
        return math.inf
    a = scale * (beta * zeta) ** alpha
    if a <= 0.0:
        return math.inf
    g = alpha * v
    if g == 0.0:
        return target / a
    arg = 1.0 + g * target / a
    if arg <= 0.0:
        return math.inf
    return math.log(arg) / g


@njit(**_JIT)
def risk_rate(m, zeta, u, li, pm):
    """Jump intensity for (condition, treatment) at marker zeta, age u."""
    if m == 0:
        if li == 0:
            return plin_eval(pm.musum_u, pm.musum_y, u)
        if li == 1:
            return plin_eval(pm.mu2_u, pm.mu2_y, u)
        return plin_eval(pm.mu1_u, pm.mu1_y, u)
    if (m == 1 and li == 1) or (m == 2 and li == 2):
        return pm.esc_scale * (pm.esc_beta * zeta) ** pm.esc_alpha
    return 0.0


@njit(**_JIT)
def sample_jump(m, zeta, u, li, pm, rng):
    """Draw the next jump delay via inverse transform; may be inf."""
    e = -math.log1p(-rng.random())
    if m == 0:
        if li == 0:
            return plin_invert(pm.musum_u, pm.musum_y, u, e)
        if li == 1:
            return plin_invert(pm.mu2_u, pm.mu2_y, u, e)
        return plin_invert(pm.mu1_u, pm.mu1_y, u, e)
    if m == 1 and li == 1:
        return escape_invert(zeta, pm.vmat[1, 1], pm.esc_alpha, pm.esc_beta,
                             pm.esc_scale, e)
    if m == 2 and li == 2:
        return escape_invert(zeta, pm.vmat[2, 2], pm.esc_alpha, pm.esc_beta,
                             pm.esc_scale, e)
    return math.inf


@njit(**_JIT)
def hitting_time(m, zeta, li, pm):
    """Deterministic time for the flow to reach the nominal or death level."""
    v = pm.vmat[m, li]
    if v > 0.0:
        if zeta >= pm.dlev:
            return 0.0
        return math.log(pm.dlev / zeta) / v
    if v < 0.0:
        if zeta <= pm.zeta0:
            return 0.0
        return math.log(pm.zeta0 / zeta) / v
    return math.inf


@njit(**_JIT)
def post_jump_mode(m, zeta, u, li, boundary, pm, rng):
    """Sample the condition after a jump.

    ``boundary`` distinguishes flow-boundary jumps (marker at nominal or
    death level) from risk-clock jumps strictly inside the band; ties are
    resolved in favour of the boundary.
    """
    if boundary:
        if pm.vmat[m, li] > 0.0:
            return 3
        return 0
    if m == 0:
        if li == 1:
            return 2
        if li == 2:
            return 1
        a = plin_eval(pm.mu1_u, pm.mu1_y, u)
        b = plin_eval(pm.mu2_u, pm.mu2_y, u)
        if rng.random() * (a + b) < a:
            return 1
        return 2
    if m == 1:
        return 2
    return 1


@njit(**_JIT)
def segment(m, zeta, u, clock, li, r, pm, rng):
    """Simulate the hidden trajectory across one inter-visit interval.

    Returns (mode, marker, sincejump, clock, first_relapse_clock,
    marker_min, marker_max, n_jumps, died).  Death freezes the clock at
    the death time; otherwise the clock advances by exactly ``r`` days.
    ``first_relapse_clock`` is the absolute time of the first jump out of
    remission inside this segment (NaN if none).
    """
    first_rel = math.nan
    mn = zeta
    mx = zeta
    if m == 3:
        return 3, zeta, u, clock, first_rel, mn, mx, 0, 1
    t = 0.0
    njump = 0
    while True:
        v = pm.vmat[m, li]
        s = sample_jump(m, zeta, u, li, pm, rng)
        ts = hitting_time(m, zeta, li, pm)
        boundary = ts <= s
        sj = ts if boundary else s
        if sj == math.inf or t + sj > r:
            dt = r - t
            z = zeta * math.exp(v * dt)
            if z < pm.zeta0:
                z = pm.zeta0
            if z > pm.dlev:
                z = pm.dlev
            if z < mn:
                mn = z
            if z > mx:
                mx = z
            return m, z, u + dt, clock + r, first_rel, mn, mx, njump, 0
        t += sj
        u += sj
        if boundary:
            zeta = pm.dlev if v > 0.0 else pm.zeta0
        else:
            zeta = zeta * math.exp(v * sj)
            if zeta < pm.zeta0:
                zeta = pm.zeta0
            if zeta > pm.dlev:
                zeta = pm.dlev
        if zeta < mn:
            mn = zeta
        if zeta > mx:
            mx = zeta
        if m == 0 and math.isnan(first_rel):
            first_rel = clock + t
        m = post_jump_mode(m, zeta, u, li, boundary, pm, rng)
        u = 0.0
        njump += 1
        if m == 3:
            return 3, pm.dlev, 0.0, clock + t, first_rel, mn, mx, njump, 1
        if t >= r:
            return m, zeta, u, clock + r, first_rel, mn, mx, njump, 0


@njit(**_JIT)
def step_cost(z_from, li, r, z_to, died, pm):
    c = pm.visit_cost + pm.marker_weight * abs(z_to - pm.zeta0) * r
    if li != 0 and z_from == pm.zeta0:
        c += pm.overtreat_weight * r
    if died:
        c += pm.death_cost
    return c


@njit(**_JIT)
def generate(m, zeta, u, clock, li, r, pm, rng):
    """One generator step: segment, observation, cost.

    Returns (mode, marker, sincejump, clock, reading, terminal, cost,
    first_relapse_clock).  The reading is NaN when the patient died
    (terminal sentinel); it is not clamped to the marker band otherwise.
    """
    m2, z2, u2, c2, frel, _, _, _, died = segment(m, zeta, u, clock, li, r, pm, rng)
    if died == 1:
        reading = math.nan
    elif pm.sigma > 0.0:
        reading = z2 + pm.sigma * rng.standard_normal()
    else:
        reading = z2
    cost = step_cost(zeta, li, r, z2, died == 1, pm)
    return m2, z2, u2, c2, reading, died, cost, frel


@njit(**_JIT)
def rollout(m, zeta, u, clock, policy, pm, rng):
    """Accumulated cost of following a rollout policy until horizon/death.

    policy 0: condition-matched treatment with 15-day visits (uses the
    simulated hidden condition); policy 1: uniform over all 9 decisions.
    """
    total = 0.0
    while clock < pm.horizon and m != 3:
        if policy == ROLLOUT_MODE:
            li = m
            r = 15.0
        else:
            k = rng.integers(0, 9)
            li = k // 3
            r = DELAY_VALUES[k % 3]
        m2, z2, u2, c2, frel, _, _, _, died = segment(m, zeta, u, clock, li, r, pm, rng)
        total += step_cost(zeta, li, r, z2, died == 1, pm)
        m = m2
        zeta = z2
        u = u2
        clock = c2
    return total


@njit(**_JIT)
def sample_jump_batch(m, zeta, u, li, pm, n, rng):
    out = np.empty(n)
    for i in range(n):
        out[i] = sample_jump(m, zeta, u, li, pm, rng)
    return out


@njit(**_JIT)
def pf_propose(src_m, src_z, src_u, src_c, li, r, y_obs, terminal_obs, prec,
               need, budget, out_m, out_z, out_u, out_c, pm, rng):
    """Rejection-sample one-step transitions compatible with an observation.

    Draws source particles uniformly, simulates a generator step and keeps
    arrivals whose simulated reading lands within ``prec`` of the true one
    (terminal observations accept only simulated deaths).  Returns
    (n_accepted, n_attempted).
    """
    n = src_m.shape[0]
    cnt = 0
    att = 0
    while att < budget and cnt < need:
        i = rng.integers(0, n)
        m2, z2, u2, c2, reading, died, _, _ = generate(
            src_m[i], src_z[i], src_u[i], src_c[i], li, r, pm, rng)
        att += 1
        if terminal_obs == 1:
            ok = died == 1
        else:
            ok = died == 0 and abs(reading - y_obs) < prec
        if ok:
            out_m[cnt] = m2
            out_z[cnt] = z2
            out_u[cnt] = u2
            out_c[cnt] = c2
            cnt += 1
    return cnt, att


@njit(**_JIT)
def pf_backstep(prev_m, prev_z, prev_u, prev_c, li_prev, r_prev, y_mid,
                terminal_mid, li, r, y_obs, terminal_obs, prec, need, budget,
                out_m, out_z, out_u, out_c, pm, rng):
    """Two-step resimulation from the previous belief: accept when both the
    intermediate and the final simulated observations match the recorded
    ones.  Returns (n_accepted, n_attempted)."""
    n = prev_m.shape[0]
    cnt = 0
    att = 0
    while att < budget and cnt < need:
        i = rng.integers(0, n)
        att += 1
        m1, z1, u1, c1, read1, died1, _, _ = generate(
            prev_m[i], prev_z[i], prev_u[i], prev_c[i], li_prev, r_prev, pm, rng)
        if terminal_mid == 1:
            mid_ok = died1 == 1
        else:
            mid_ok = died1 == 0 and abs(read1 - y_mid) < prec
        if not mid_ok:
            continue
        if died1 == 1:
            continue
        m2, z2, u2, c2, read2, died2, _, _ = generate(
            m1, z1, u1, c1, li, r, pm, rng)
        if terminal_obs == 1:
            ok = died2 == 1
        else:
            ok = died2 == 0 and abs(read2 - y_obs) < prec
        if ok:
            out_m[cnt] = m2
            out_z[cnt] = z2
            out_u[cnt] = u2
            out_c[cnt] = c2
            cnt += 1
    return cnt, att


@njit(**_JIT)
def pf_bestk(src_m, src_z, src_u, src_c, li, r, y_obs, terminal_obs,
             n_samples, out_m, out_z, out_u, out_c, out_dist, pm, rng):
    """Simulate ``n_samples`` transitions and record observation distances
    (inf on alive/dead mismatch) so the caller can keep the closest K."""
    n = src_m.shape[0]
    for j in range(n_samples):
        i = rng.integers(0, n)
        m2, z2, u2, c2, reading, died, _, _ = generate(
            src_m[i], src_z[i], src_u[i], src_c[i], li, r, pm, rng)
        out_m[j] = m2
        out_z[j] = z2
        out_u[j] = u2
        out_c[j] = c2
        if terminal_obs == 1:
            out_dist[j] = 0.0 if died == 1 else math.inf
        elif died == 1:
            out_dist[j] = math.inf
        else:
            out_dist[j] = abs(reading - y_obs)


@njit(**_JIT)
def project_to_grid(m, zeta, u, zeta0, log_step1, log_step2, n0, n1, n2, u_step):
    """Index of the nearest grid state (same condition; O(1) on the uniform
    log-marker / linear-age grids).  Layout: remission block, disease-1
    block, disease-2 block, death atom."""
    if m == 3:
        return n0 + n1 + n2
    if m == 0:
        j = int(round(u / u_step))
        if j < 0:
            j = 0
        if j >= n0:
            j = n0 - 1
        return j
    logz = math.log(zeta / zeta0)
    if m == 1:
        step = log_step1
        count = n1
        base = n0
    else:
        step = log_step2
        count = n2
        base = n0 + n1
    j = int(round(logz / step))
    if j < 0:
        j = 0
    if j >= count:
        j = count - 1
    return base + j


@njit(**_JIT)
def cf_transition_counts(grid_m, grid_z, grid_u, li, r, nmc, zeta0,
                         log_step1, log_step2, n0, n1, n2, u_step, pm, rng):
    """Monte-Carlo estimate of the per-decision transition matrix between
    grid states (row-stochastic after normalization by nmc)."""
    n = grid_m.shape[0]
    counts = np.zeros((n, n))
    for i in range(n):
        for _ in range(nmc):
            m2, z2, u2, _, _, _, _, _, _ = segment(
                grid_m[i], grid_z[i], grid_u[i], 0.0, li, r, pm, rng)
            j = project_to_grid(m2, z2, u2, zeta0, log_step1, log_step2,
                                n0, n1, n2, u_step)
            counts[i, j] += 1.0
    return counts


@njit(**_JIT)
def segment_batch(src_m, src_z, src_u, src_c, li, r, pm, rng,
                  out_m, out_z, out_u, out_c, out_mn, out_mx):
    """Segment simulation over a batch of states (used by property tests)."""
    for i in range(src_m.shape[0]):
        m2, z2, u2, c2, _, mn, mx, _, _ = segment(
            src_m[i], src_z[i], src_u[i], src_c[i], li, r, pm, rng)
        out_m[i] = m2
        out_z[i] = z2
        out_u[i] = u2
        out_c[i] = c2
        out_mn[i] = mn
        out_mx[i] = mx
