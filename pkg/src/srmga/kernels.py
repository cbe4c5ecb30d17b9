"""Hot loops of the SRM0 simulator.

Two interchangeable backends are provided:

* ``numba``: ``@njit`` loops over grid samples, using precomputed kernel
  tables for arrivals that sit on the time grid.
* ``numpy``: vectorised evaluation of the summed postsynaptic potential,
  followed by a short segment-wise search for threshold crossings (at most
  ``max_spikes`` passes).

The backend is picked at import time. Set ``SRMGA_DISABLE_NUMBA=1`` to force
the numpy path (useful when numba is unavailable or for debugging).
All times handed to these functions are in ms; spike results are returned as
grid step indices.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


def _env_disabled() -> bool:
    return os.environ.get("SRMGA_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


BACKEND = "numba" if HAS_NUMBA and not _env_disabled() else "numpy"

# Arrivals closer than this (in steps) to a grid point use the table path.
_GRID_EPS = 1e-7


def kernel_tables(n_steps, dt, tau, tau_r, theta, normalized):
    """epsilon and rho sampled at integer step offsets 0..n_steps."""
    te = np.arange(n_steps + 1, dtype=np.float64) * dt
    x = te / tau
    if normalized:
        eps = x * np.exp(1.0 - x)
    else:
        eps = x * np.exp(-x)
    eps[0] = 0.0
    rho = -4.0 * theta * np.exp(-te / tau_r)
    rho[0] = 0.0
    return eps, rho


# --------------------------------------------------------------------------
# numba backend


@njit(cache=True)
def _eps_direct(te, tau, normalized):
    if te <= 0.0:
        return 0.0
    x = te / tau
    if normalized:
        return x * np.exp(1.0 - x)
    return x * np.exp(-x)


@njit(cache=True)
def _neuron_nb(arr_t, arr_w, n_arr, n_steps, dt, eps_tab, rho_tab, tau, tau_r,
               theta, max_spikes, normalized, u_out, spk_out):
    # Split arrivals into on-grid (table lookup) and off-grid (direct exp).
    idx = np.empty(n_arr, dtype=np.int64)
    on_grid = np.empty(n_arr, dtype=np.bool_)
    for a in range(n_arr):
        s = arr_t[a] / dt
        r = np.floor(s + 0.5)
        if abs(s - r) < _GRID_EPS:
            on_grid[a] = True
            idx[a] = np.int64(r)
        else:
            on_grid[a] = False
            idx[a] = 0
    n_spk = 0
    last = -1
    prev = 0.0
    for k in range(n_steps + 1):
        acc = 0.0
        for a in range(n_arr):
            w = arr_w[a]
            if w == 0.0:
                continue
            if on_grid[a]:
                m = k - idx[a]
                if m <= 0:
                    continue
                if m <= n_steps:
                    acc += w * eps_tab[m]
                else:
                    acc += w * _eps_direct(m * dt, tau, normalized)
            else:
                acc += w * _eps_direct(k * dt - arr_t[a], tau, normalized)
        psp = acc
        if last >= 0:
            acc += rho_tab[k - last]
        u_out[k] = acc
        if n_spk < max_spikes and acc >= theta and acc > prev:
            spk_out[n_spk] = k
            n_spk += 1
            last = k
            # slope reference for the next sample: the freshly reset branch
            prev = psp - 4.0 * theta
        else:
            prev = acc
    return n_spk


@njit(cache=True)
def _network_nb(layer_sizes, weights, delays, in_t, in_n, n_steps, dt, eps_tab,
                rho_tab, tau, tau_r, theta, max_spikes, normalized, spk_t, spk_n, u_all):
    """Simulate one network on one input pattern.

    spk_t[neuron, g] holds spike times in ms, spk_n[neuron] the counts; input
    neurons are copied from in_t/in_n. u_all receives traces of computing
    neurons (row per global neuron index) when it has more than one row.
    """
    n_layers = layer_sizes.shape[0]
    keep_trace = u_all.shape[0] > 1
    for i in range(layer_sizes[0]):
        spk_n[i] = in_n[i]
        for g in range(in_n[i]):
            spk_t[i, g] = in_t[i, g]
    u = np.empty(n_steps + 1)
    spk = np.empty(max_spikes, dtype=np.int64)
    pre0 = 0
    syn0 = 0
    for layer in range(1, n_layers):
        n_pre = layer_sizes[layer - 1]
        n_post = layer_sizes[layer]
        post0 = pre0 + n_pre
        n_arr_max = 0
        for i in range(n_pre):
            n_arr_max += spk_n[pre0 + i]
        arr_t = np.empty(max(n_arr_max, 1))
        arr_w = np.empty(max(n_arr_max, 1))
        for j in range(n_post):
            n_arr = 0
            for i in range(n_pre):
                s = syn0 + j * n_pre + i
                w = weights[s]
                d = delays[s]
                for g in range(spk_n[pre0 + i]):
                    arr_t[n_arr] = spk_t[pre0 + i, g] + d
                    arr_w[n_arr] = w
                    n_arr += 1
            ns = _neuron_nb(arr_t, arr_w, n_arr, n_steps, dt, eps_tab, rho_tab, tau,
                            tau_r, theta, max_spikes, normalized, u, spk)
            spk_n[post0 + j] = ns
            for g in range(ns):
                spk_t[post0 + j, g] = spk[g] * dt
            if keep_trace:
                u_all[post0 + j, :] = u
        syn0 += n_pre * n_post
        pre0 = post0


@njit(cache=True)
def _batch_first_nb(layer_sizes, weights, delays, in_t, in_n, n_steps, dt, eps_tab,
                    rho_tab, tau, tau_r, theta, max_spikes, normalized):
    n_pop = weights.shape[0]
    n_pat = in_t.shape[0]
    n_total = 0
    for s in layer_sizes:
        n_total += s
    n_out = layer_sizes[-1]
    width = max(max_spikes, in_t.shape[2])
    out = np.full((n_pop, n_pat, n_out), np.nan)
    spk_t = np.zeros((n_total, width))
    spk_n = np.zeros(n_total, dtype=np.int64)
    dummy = np.zeros((1, 1))
    for p in range(n_pop):
        for m in range(n_pat):
            _network_nb(layer_sizes, weights[p], delays[p], in_t[m], in_n[m], n_steps,
                        dt, eps_tab, rho_tab, tau, tau_r, theta, max_spikes, normalized,
                        spk_t, spk_n, dummy)
            for o in range(n_out):
                idx = n_total - n_out + o
                if spk_n[idx] > 0:
                    out[p, m, o] = spk_t[idx, 0]
    return out


# --------------------------------------------------------------------------
# numpy backend


def _eps_np(te, tau, normalized):
    x = np.where(te > 0.0, te / tau, 0.0)
    if normalized:
        return x * np.exp(1.0 - x)
    return x * np.exp(-x)


def _neuron_np(arr_t, arr_w, n_steps, dt, tau, tau_r, theta, max_spikes, normalized):
    t = np.arange(n_steps + 1, dtype=np.float64) * dt
    if len(arr_t):
        psp = _eps_np(t[:, None] - np.asarray(arr_t)[None, :], tau, normalized) @ np.asarray(arr_w)
    else:
        psp = np.zeros_like(t)
    u = psp.copy()
    spikes = []
    start = 0
    prev_val = 0.0
    while len(spikes) < max_spikes and start <= n_steps:
        seg = u[start:]
        prev = np.empty_like(seg)
        prev[0] = prev_val
        prev[1:] = seg[:-1]
        hits = np.flatnonzero((seg >= theta) & (seg > prev))
        if hits.size == 0:
            break
        s = start + int(hits[0])
        spikes.append(s)
        prev_val = psp[s] - 4.0 * theta
        start = s + 1
        tp = t[start:] - t[s]
        u[start:] = psp[start:] - 4.0 * theta * np.exp(-tp / tau_r)
    return u, np.asarray(spikes, dtype=np.int64)


def _network_np(layer_sizes, weights, delays, inputs, n_steps, dt, tau, tau_r, theta,
                max_spikes, normalized, keep_trace=False):
    trains = [np.asarray(tr, dtype=np.float64) for tr in inputs]
    traces = {}
    syn0 = 0
    pre0 = 0
    for layer in range(1, len(layer_sizes)):
        n_pre, n_post = layer_sizes[layer - 1], layer_sizes[layer]
        w = weights[syn0:syn0 + n_pre * n_post].reshape(n_post, n_pre)
        d = delays[syn0:syn0 + n_pre * n_post].reshape(n_post, n_pre)
        counts = np.array([len(trains[pre0 + i]) for i in range(n_pre)])
        pre_idx = np.repeat(np.arange(n_pre), counts)
        pre_times = np.concatenate([trains[pre0 + i] for i in range(n_pre)]) if counts.sum() else np.zeros(0)
        for j in range(n_post):
            arr_t = pre_times + d[j, pre_idx]
            arr_w = w[j, pre_idx]
            u, spk = _neuron_np(arr_t, arr_w, n_steps, dt, tau, tau_r, theta,
                                max_spikes, normalized)
            trains.append(spk * dt)
            if keep_trace:
                traces[pre0 + n_pre + j] = u
        syn0 += n_pre * n_post
        pre0 += n_pre
    return trains, traces


def _batch_first_np(layer_sizes, weights, delays, in_t, in_n, n_steps, dt, tau, tau_r,
                    theta, max_spikes, normalized):
    n_pop, n_pat = weights.shape[0], in_t.shape[0]
    n_out = int(layer_sizes[-1])
    out = np.full((n_pop, n_pat, n_out), np.nan)
    patterns = [[in_t[m, i, :in_n[m, i]] for i in range(in_t.shape[1])] for m in range(n_pat)]
    for p in range(n_pop):
        for m in range(n_pat):
            trains, _ = _network_np(layer_sizes, weights[p], delays[p], patterns[m], n_steps,
                                    dt, tau, tau_r, theta, max_spikes, normalized)
            for o, tr in enumerate(trains[-n_out:]):
                if len(tr):
                    out[p, m, o] = tr[0]
    return out


# --------------------------------------------------------------------------
# dispatch


def neuron_response(arr_t, arr_w, n_steps, dt, tau, tau_r, theta, max_spikes, normalized,
                    backend=None):
    """Return (u over the grid, spike step indices) for one neuron."""
    backend = backend or BACKEND
    arr_t = np.ascontiguousarray(arr_t, dtype=np.float64)
    arr_w = np.ascontiguousarray(arr_w, dtype=np.float64)
    if backend == "numpy":
        return _neuron_np(arr_t, arr_w, n_steps, dt, tau, tau_r, theta, max_spikes, normalized)
    eps, rho = kernel_tables(n_steps, dt, tau, tau_r, theta, normalized)
    u = np.empty(n_steps + 1)
    spk = np.empty(max_spikes, dtype=np.int64)
    n = _neuron_nb(arr_t, arr_w, arr_t.shape[0], n_steps, dt, eps, rho, tau, tau_r,
                   theta, max_spikes, normalized, u, spk)
    return u, spk[:n].copy()


def pack_inputs(patterns):
    """Pad per-pattern input trains into (times, counts) arrays."""
    n_pat = len(patterns)
    n_in = len(patterns[0]) if n_pat else 0
    width = max([len(tr) for pat in patterns for tr in pat] + [1])
    in_t = np.zeros((n_pat, n_in, width))
    in_n = np.zeros((n_pat, n_in), dtype=np.int64)
    for m, pat in enumerate(patterns):
        for i, tr in enumerate(pat):
            in_t[m, i, :len(tr)] = tr
            in_n[m, i] = len(tr)
    return in_t, in_n


def network_spikes(layer_sizes, weights, delays, inputs, n_steps, dt, tau, tau_r, theta,
                   max_spikes, normalized, keep_trace=False, backend=None):
    """Simulate one network; returns (list of spike-time arrays, {neuron: u})."""
    backend = backend or BACKEND
    sizes = np.asarray(layer_sizes, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    delays = np.ascontiguousarray(delays, dtype=np.float64)
    if backend == "numpy":
        return _network_np(list(map(int, sizes)), weights, delays, inputs, n_steps, dt, tau,
                           tau_r, theta, max_spikes, normalized, keep_trace)
    in_t, in_n = pack_inputs([inputs])
    n_total = int(sizes.sum())
    width = max(max_spikes, in_t.shape[2])
    spk_t = np.zeros((n_total, width))
    spk_n = np.zeros(n_total, dtype=np.int64)
    u_all = np.zeros((n_total, n_steps + 1)) if keep_trace else np.zeros((1, 1))
    eps, rho = kernel_tables(n_steps, dt, tau, tau_r, theta, normalized)
    _network_nb(sizes, weights, delays, in_t[0], in_n[0], n_steps, dt, eps, rho, tau, tau_r,
                theta, max_spikes, normalized, spk_t, spk_n, u_all)
    trains = [spk_t[i, :spk_n[i]].copy() for i in range(n_total)]
    traces = {i: u_all[i].copy() for i in range(int(sizes[0]), n_total)} if keep_trace else {}
    return trains, traces


def batch_first_spikes(layer_sizes, weights, delays, in_t, in_n, n_steps, dt, tau, tau_r,
                       theta, max_spikes, normalized, backend=None):
    """First output spike time per (individual, pattern, output neuron); NaN if silent."""
    backend = backend or BACKEND
    sizes = np.asarray(layer_sizes, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    delays = np.ascontiguousarray(delays, dtype=np.float64)
    if backend == "numpy":
        return _batch_first_np(sizes, weights, delays, in_t, in_n, n_steps, dt, tau, tau_r,
                               theta, max_spikes, normalized)
    eps, rho = kernel_tables(n_steps, dt, tau, tau_r, theta, normalized)
    return _batch_first_nb(sizes, weights, delays, np.ascontiguousarray(in_t, dtype=np.float64),
                           np.ascontiguousarray(in_n, dtype=np.int64), n_steps, dt, eps, rho,
                           tau, tau_r, theta, max_spikes, normalized)
