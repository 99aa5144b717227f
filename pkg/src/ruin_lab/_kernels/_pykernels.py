"""Pure numpy implementations of the hot loops.

Semantics match ``_ckernels.pyx`` exactly; the running sums are accumulated
left to right so both backends produce identical floating point results for
the path scans.
"""

import numpy as np

BACKEND = "python"


def scan_paths(incr, csum, cmax, hit, hit_val, cap, strict, step0):
    """Advance partial sums over a batch of steps and record the first crossing.

    ``incr`` has shape (paths, steps). Paths with ``hit >= 0`` are frozen. A
    crossing is ``csum > cap`` (or ``csum >= cap`` when ``strict``); after it
    the path stops accumulating.
    """
    act = np.flatnonzero(hit < 0)
    if act.size == 0:
        return
    steps = incr.shape[1]
    ext = np.empty((act.size, steps + 1))
    ext[:, 0] = csum[act]
    ext[:, 1:] = incr[act]
    cs = np.cumsum(ext, axis=1)[:, 1:]
    crossed = cs >= cap if strict else cs > cap
    anyc = crossed.any(axis=1)
    first = crossed.argmax(axis=1)
    end = np.where(anyc, first, steps - 1)
    masked = np.where(np.arange(steps)[None, :] <= end[:, None], cs, -np.inf)
    cmax[act] = np.maximum(cmax[act], masked.max(axis=1))
    rows = np.arange(act.size)
    csum[act] = cs[rows, end]
    idx = act[anyc]
    hit[idx] = step0 + first[anyc] + 1
    hit_val[idx] = cs[rows[anyc], first[anyc]]


def scan_lattice(u, base, thr, jump, csum, cmax, hit, hit_val, cap, strict, step0):
    """``scan_paths`` on integer-valued increments given by uniforms.

    Phase ``ph = (step0 + t) % N`` maps a uniform ``v`` to
    ``base[ph] + sum(jump[ph, k] for thresholds thr[ph, k] <= v)``.
    """
    n_phase = base.shape[0]
    steps = u.shape[1]
    ph = (step0 + np.arange(steps)) % n_phase
    incr = np.empty(u.shape)
    for q in range(n_phase):
        cols = ph == q
        x = np.full((u.shape[0], int(cols.sum())), base[q])
        uq = u[:, cols]
        for k in range(thr.shape[1]):
            x += np.where(uq >= thr[q, k], jump[q, k], 0.0)
        incr[:, cols] = x
    scan_paths(incr, csum, cmax, hit, hit_val, cap, strict, step0)


def spitzer_accumulate(incr, csum, y, counts, n0):
    """Accumulate ``#{S_n > 0}`` per step and per-path ``sum 1{S_n>0}/n``."""
    paths, steps = incr.shape
    ext = np.empty((paths, steps + 1))
    ext[:, 0] = csum
    ext[:, 1:] = incr
    cs = np.cumsum(ext, axis=1)[:, 1:]
    pos = cs > 0.0
    counts += pos.sum(axis=0)
    inv_n = 1.0 / np.arange(n0 + 1, n0 + steps + 1, dtype=np.float64)
    w = np.empty((paths, steps + 1))
    w[:, 0] = y
    w[:, 1:] = np.where(pos, inv_n[None, :], 0.0)
    y[:] = np.cumsum(w, axis=1)[:, -1]
    csum[:] = cs[:, -1]


def dp_ruin_curve(pmfs, c, u, horizon, strict):
    """Finite-horizon ruin probabilities of the integer surplus chain.

    ``pmfs`` is an (N, K) array; period t uses row ``(t - 1) % N``. Returns
    ``psi[t-1] = P(ruin by period t)`` for t = 1..horizon.
    """
    pmfs = np.ascontiguousarray(pmfs, dtype=np.float64)
    n_phase, width = pmfs.shape
    thr = 1 if strict else 0
    cur = np.zeros(u + 1)
    cur[u] = 1.0
    psi = np.empty(horizon)
    ruined = 0.0
    for t in range(horizon):
        h = pmfs[t % n_phase]
        n = cur.size
        new = np.zeros(n + c)
        lost = 0.0
        for k in range(width):
            hk = h[k]
            if hk == 0.0:
                continue
            # destination index w + c - k must be >= thr
            lo = k - c + thr
            if lo > 0:
                m = min(lo, n)
                lost += hk * cur[:m].sum()
            else:
                lo = 0
            if lo < n:
                new[lo + c - k : n + c - k] += hk * cur[lo:n]
        ruined += lost
        psi[t] = ruined
        cur = new
    return psi


def truncated_convolve(a, b, m):
    """First ``m`` coefficients of the convolution of ``a`` and ``b``."""
    out = np.zeros(m)
    r = np.convolve(a[:m], b[:m])[:m]
    out[: r.size] = r
    return out


def panjer_geometric(f, q, m):
    """Compound geometric masses ``sum_n (1-q) q^n f^{*n}`` via Panjer's recursion."""
    f = np.zeros(m) if f.size == 0 else f
    fm = np.zeros(m)
    fm[: min(m, f.size)] = f[:m]
    d = 1.0 - q * fm[0]
    coef = q / d
    g = np.empty(m)
    g[0] = (1.0 - q) / d
    for k in range(1, m):
        g[k] = coef * np.dot(fm[1 : k + 1], g[k - 1 :: -1])
    return g
