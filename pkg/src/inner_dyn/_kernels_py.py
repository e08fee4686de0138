"""Pure-numpy orbit kernel; same contract as the compiled ``_kernels``.

Trials are processed in fixed blocks so memory stays bounded; a block's
result depends only on the trial keys it receives.
"""

import numpy as np

from . import rng

DITHER = 2.0**-50
ATOM_EPS = 1e-12
NUDGE = 1e-9
BLOCK = 16384


def _step(theta, offset, zre, zim, zmult, atom_t, atom_mass):
    lift = np.full(theta.shape, offset)
    events = 0
    for t in atom_t:
        d = np.mod(theta - t + 0.5, 1.0) - 0.5
        hit = np.abs(d) < ATOM_EPS
        if hit.any():
            events += int(hit.sum())
            theta = np.where(hit, theta + NUDGE, theta)
    two_pi_theta = 2.0 * np.pi * theta
    c = np.cos(two_pi_theta)
    s = np.sin(two_pi_theta)
    for a_re, a_im, m in zip(zre, zim, zmult):
        if a_re == 0.0 and a_im == 0.0:
            lift += m * theta
        else:
            # 1 - a e^{-i x} = 1 - (a_re c + a_im s) - i (a_im c - a_re s)
            re = 1.0 - (a_re * c + a_im * s)
            im = -(a_im * c - a_re * s)
            lift += m * (theta + np.arctan2(im, re) / np.pi)
    for t, sig in zip(atom_t, atom_mass):
        d = np.mod(theta - t + 0.5, 1.0) - 0.5
        lift -= sig / (2.0 * np.pi * np.tan(np.pi * d))
    out = lift - np.floor(lift)
    return np.where(out >= 1.0, 0.0, out), events


def _psi(theta, psi0, psi_cos, psi_sin):
    val = np.full(theta.shape, psi0)
    for n in range(psi_cos.size):
        arg = 2.0 * np.pi * (n + 1) * theta
        if psi_cos[n] != 0.0:
            val += psi_cos[n] * np.cos(arg)
        if psi_sin[n] != 0.0:
            val += psi_sin[n] * np.sin(arg)
    return val


def birkhoff_sums(
    theta0,
    keys,
    n_steps,
    offset,
    zero_re,
    zero_im,
    zero_mult,
    atom_t,
    atom_mass,
    psi0,
    psi_cos,
    psi_sin,
    dither=True,
    threads=1,
):
    """Return ``(sums, events)`` with ``sums[i] = sum_{j<n} psi(tau^j theta0[i])``."""
    theta0 = np.asarray(theta0, dtype=float)
    keys = np.asarray(keys, dtype=np.uint64)
    sums = np.empty(theta0.size)
    events = 0
    blocks = [(lo, min(lo + BLOCK, theta0.size)) for lo in range(0, theta0.size, BLOCK)]

    def run(lo, hi):
        th = theta0[lo:hi].copy()
        k = keys[lo:hi]
        acc = np.zeros(hi - lo)
        ev = 0
        for j in range(n_steps):
            acc += _psi(th, psi0, psi_cos, psi_sin)
            if j == n_steps - 1:
                break
            th, e = _step(th, offset, zero_re, zero_im, zero_mult, atom_t, atom_mass)
            ev += e
            if dither:
                th = th + (rng.step_uniform(k, j) - 0.5) * DITHER
                th = th - np.floor(th)
        return lo, hi, acc, ev

    if threads > 1 and len(blocks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda b: run(*b), blocks))
    else:
        results = [run(*b) for b in blocks]
    for lo, hi, acc, ev in results:
        sums[lo:hi] = acc
        events += ev
    return sums, events
