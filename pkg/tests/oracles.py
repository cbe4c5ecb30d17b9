"""Independent reference implementations used only by the tests.

Kept deliberately naive: direct kernel formulas, no lookup tables, no code
shared with the package.
"""
from __future__ import annotations

import math

import numpy as np


def eps(te, tau, normalized=True):
    if te <= 0:
        return 0.0
    x = te / tau
    return x * math.exp((1.0 if normalized else 0.0) - x)


def rho(tp, theta, tau_r):
    if tp <= 0:
        return 0.0
    return -4.0 * theta * math.exp(-tp / tau_r)


def brute_psp(arrivals, n_steps, dt, tau, normalized=True):
    """Summed postsynaptic potential at each grid sample (no refractoriness).

    Elapsed time is counted in whole ticks when the arrival sits on the grid,
    so that e.g. an EPSP peak lands exactly on tau instead of 1 ulp below it.
    """
    k = np.arange(n_steps + 1)
    total = np.zeros(n_steps + 1)
    for a, w in arrivals:
        ticks = a / dt
        if abs(ticks - round(ticks)) < 1e-9:
            te = (k - round(ticks)) * dt
        else:
            te = k * dt - a
        x = np.where(te > 0, te / tau, 0.0)
        total += w * x * np.exp((1.0 if normalized else 0.0) - x)
    return total.tolist()


def brute_neuron(arrivals, n_steps, dt, tau, tau_r, theta, max_spikes, normalized=True):
    """Sample-by-sample potential and spike times (ms)."""
    psp = brute_psp(arrivals, n_steps, dt, tau, normalized)
    u, spikes = [], []
    prev = 0.0
    for k in range(n_steps + 1):
        t = k * dt
        val = psp[k] + (rho(t - spikes[-1], theta, tau_r) if spikes else 0.0)
        u.append(val)
        if len(spikes) < max_spikes and val >= theta and val > prev:
            spikes.append(t)
            prev = psp[k] - 4.0 * theta
        else:
            prev = val
    return u, spikes


def brute_network(topology, weights, delays, inputs, n_steps, dt, tau, tau_r, theta,
                  max_spikes, normalized=True):
    """weights/delays: list of (n_post, n_pre) matrices. Returns (trains, traces)."""
    trains = [list(tr) for tr in inputs]
    traces = {}
    base = 0
    for p in range(len(topology) - 1):
        n_pre, n_post = topology[p], topology[p + 1]
        for j in range(n_post):
            arrivals = [(t + delays[p][j][i], weights[p][j][i])
                        for i in range(n_pre) for t in trains[base + i]]
            u, spk = brute_neuron(arrivals, n_steps, dt, tau, tau_r, theta, max_spikes, normalized)
            traces[base + n_pre + j] = u
            trains.append(spk)
        base += n_pre
    return trains, traces


def continuous_crossings(arrivals, discrete_spikes, sim_time, dt, tau, tau_r, theta,
                         normalized=True, refine=4):
    """Continuous-time firing times of u(t): the first t after the previous
    spike with u(t) >= theta, located by bisection.

    For the n-th event the refractory term is anchored on the (n-1)-th
    discrete spike, i.e. the same u(t) the time-stepped simulator samples.
    Three cases are handled: an upward crossing (bracketed on a grid
    ``refine`` times finer than dt, offset from the simulation grid, then
    bisected to 1e-12 ms); a tangency where a local maximum touches theta
    (refined by ternary search); and u already at or above theta right after
    the previous spike, where the event is that spike's time itself.
    """
    a_t = np.array([a for a, _ in arrivals], dtype=float)
    a_w = np.array([w for _, w in arrivals], dtype=float)
    lift = 1.0 if normalized else 0.0

    def psp(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if a_t.size == 0:
            return np.zeros_like(t)
        te = t[:, None] - a_t[None, :]
        x = np.where(te > 0, te / tau, 0.0)
        return (x * np.exp(lift - x)) @ a_w

    def refr(t, anchor):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if anchor is None:
            return np.zeros_like(t)
        tp = t - anchor
        return np.where(tp > 0, -4 * theta * np.exp(-np.maximum(tp, 0) / tau_r), 0.0)

    def u(t, anchor):
        return float((psp(t) + refr(t, anchor))[0])

    h = dt / refine
    fine = np.arange(0.0, sim_time + h, h) + h / 3
    base = psp(fine)

    def first_reach(start, anchor):
        if anchor is not None and u(start + 1e-12, anchor) >= theta:
            return start
        keep = fine > start
        ts, vs = fine[keep], (base + refr(fine, anchor))[keep]
        if ts.size < 2:
            return None
        cands = []
        up = np.flatnonzero((vs[:-1] < theta) & (vs[1:] >= theta))
        if vs[0] >= theta:
            lo, hi = start, ts[0]
        elif up.size:
            lo, hi = ts[up[0]], ts[up[0] + 1]
        else:
            lo = hi = None
        if lo is not None:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if u(mid, anchor) >= theta:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-12:
                    break
            cands.append(hi)
        mid = vs[1:-1]
        peaks = np.flatnonzero((mid >= vs[:-2]) & (mid >= vs[2:]) & (mid < theta)
                               & (mid > theta - 1e-3)) + 1
        for i in peaks:
            lo, hi = ts[i - 1], ts[i + 1]
            for _ in range(200):
                m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
                if u(m1, anchor) < u(m2, anchor):
                    lo = m1
                else:
                    hi = m2
                if hi - lo < 1e-12:
                    break
            if u(0.5 * (lo + hi), anchor) >= theta - 1e-12:
                cands.append(0.5 * (lo + hi))
                break
        return min(cands) if cands else None

    crossings = []
    anchor, start = None, 0.0
    for n in range(len(discrete_spikes) + 1):
        t = first_reach(start, anchor)
        if t is None or t > sim_time:
            break
        crossings.append(t)
        if n >= len(discrete_spikes):
            break
        anchor = start = discrete_spikes[n]
    return crossings


def brute_rank(n, eta_max):
    eta_min = 2 - eta_max
    if n == 1:
        return [1.0]
    return [(eta_max - (eta_max - eta_min) * (i - 1) / (n - 1)) / n for i in range(1, n + 1)]


def brute_objective(first_times, desired, miss_penalty, mode):
    errs = []
    for a, d in zip(first_times, desired):
        if a is None and d is None:
            errs.append(0.0)
        elif a is None or d is None:
            errs.append(miss_penalty)
        else:
            errs.append((a - d) ** 2)
    return 0.5 * sum(errs) if mode == "lms" else sum(errs) / len(errs)
