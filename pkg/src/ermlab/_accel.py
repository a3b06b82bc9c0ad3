"""Hot numeric kernels with optional numba acceleration.

Every kernel exists in two functionally equivalent forms: a scalar-loop
version compiled with ``numba.njit`` and a vectorized pure-numpy fallback.
The active backend is chosen once at import time from the environment
variable ``ERMLAB_NUMBA``:

* unset or ``auto`` -- use numba when it imports, numpy otherwise
* ``1`` / ``on``    -- require numba (raises if unavailable)
* ``0`` / ``off``   -- force the pure-numpy path

``BACKEND`` names the active backend and ``IMPLS`` maps backend name to
its kernel table; ``benchmarks/bench_kernels.py`` times both side by side.
Results agree between backends up to floating-point summation order.
"""

import math
import os

import numpy as np

_EPS = 2.3e-16
_TINY = 2.3e-308


# ---------------------------------------------------------------------------
# scalar-loop kernel sources (compiled with numba when enabled)
# ---------------------------------------------------------------------------


def _jacobi_evd_loops(a, v, tol, max_sweeps):
    # Cyclic Jacobi rotations. a is overwritten with the diagonalized matrix,
    # v accumulates the rotations (columns end up as eigenvectors).
    n = a.shape[0]
    anorm = 0.0
    for i in range(n):
        for j in range(n):
            if abs(a[i, j]) > anorm:
                anorm = abs(a[i, j])
    if anorm == 0.0:
        return 0, True
    for sweep in range(1, max_sweeps + 1):
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    if i != p and i != q:
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = c * aip - s * aiq
                        a[i, q] = s * aip + c * aiq
                        a[p, i] = a[i, p]
                        a[q, i] = a[i, q]
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - s * viq
                    v[i, q] = s * vip + c * viq
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > off:
                    off = abs(a[p, q])
        if off <= tol * anorm:
            return sweep, True
    return max_sweeps, False


def _cholesky_loops(a, l):
    # Lower Cholesky factor of a symmetric positive-definite matrix.
    # Returns -1 on success, else the index of the failing pivot.
    n = a.shape[0]
    dmax = 0.0
    for i in range(n):
        if a[i, i] > dmax:
            dmax = a[i, i]
    thresh = dmax * n * _EPS
    if thresh <= 0.0:
        thresh = _TINY
    for j in range(n):
        s = a[j, j]
        for t in range(j):
            s -= l[j, t] * l[j, t]
        if s <= thresh:
            return j
        l[j, j] = math.sqrt(s)
        for i in range(j + 1, n):
            s2 = a[i, j]
            for t in range(j):
                s2 -= l[i, t] * l[j, t]
            l[i, j] = s2 / l[j, j]
    return -1


def _forward_solve_loops(l, b):
    n = l.shape[0]
    x = np.empty(n)
    for i in range(n):
        s = b[i]
        for j in range(i):
            s -= l[i, j] * x[j]
        x[i] = s / l[i, i]
    return x


def _back_solve_loops(l, b):
    # Solves l.T @ x = b with l lower triangular.
    n = l.shape[0]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        s = b[i]
        for j in range(i + 1, n):
            s -= l[j, i] * x[j]
        x[i] = s / l[i, i]
    return x


def _assign_nearest_loops(x, means):
    m = x.shape[0]
    n = x.shape[1]
    k = means.shape[0]
    labels = np.empty(m, dtype=np.int64)
    sqd = np.empty(m)
    for i in range(m):
        best = -1
        bestd = np.inf
        for c in range(k):
            d = 0.0
            for j in range(n):
                diff = x[i, j] - means[c, j]
                d += diff * diff
            if d < bestd:
                bestd = d
                best = c
        labels[i] = best
        sqd[i] = bestd
    return labels, sqd


def _mahalanobis_sq_loops(xc, l):
    # Squared Mahalanobis norms z.T (L L^T)^-1 z for the rows z of xc.
    m = xc.shape[0]
    n = xc.shape[1]
    d2 = np.empty(m)
    z = np.empty(n)
    for i in range(m):
        for a in range(n):
            s = xc[i, a]
            for b in range(a):
                s -= l[a, b] * z[b]
            z[a] = s / l[a, a]
        acc = 0.0
        for a in range(n):
            acc += z[a] * z[a]
        d2[i] = acc
    return d2


def _weighted_moments_loops(x, resp):
    # Responsibility-weighted counts, means and covariance matrices.
    m = x.shape[0]
    n = x.shape[1]
    k = resp.shape[1]
    counts = np.zeros(k)
    means = np.zeros((k, n))
    covs = np.zeros((k, n, n))
    for i in range(m):
        for c in range(k):
            w = resp[i, c]
            counts[c] += w
            for j in range(n):
                means[c, j] += w * x[i, j]
    for c in range(k):
        if counts[c] > 0.0:
            for j in range(n):
                means[c, j] /= counts[c]
    for i in range(m):
        for c in range(k):
            w = resp[i, c]
            if w == 0.0:
                continue
            for a in range(n):
                da = x[i, a] - means[c, a]
                for b in range(a + 1):
                    covs[c, a, b] += w * da * (x[i, b] - means[c, b])
    for c in range(k):
        if counts[c] > 0.0:
            for a in range(n):
                for b in range(a + 1):
                    covs[c, a, b] /= counts[c]
                    covs[c, b, a] = covs[c, a, b]
    return counts, means, covs


def _ols_pad_trials_loops(xs, ys, xts, yts, r):
    # Per trial: least squares on the first r features, weights zero-padded
    # to full length, squared prediction error on one fresh point.
    tn = xs.shape[0]
    m = xs.shape[1]
    n = xs.shape[2]
    ws = np.zeros((tn, n))
    pe2 = np.empty(tn)
    ok = np.ones(tn, dtype=np.bool_)
    g = np.empty((r, r))
    l = np.empty((r, r))
    b = np.empty(r)
    z = np.empty(r)
    for t in range(tn):
        for i in range(r):
            for j in range(i + 1):
                s = 0.0
                for u in range(m):
                    s += xs[t, u, i] * xs[t, u, j]
                g[i, j] = s
                g[j, i] = s
            s = 0.0
            for u in range(m):
                s += xs[t, u, i] * ys[t, u]
            b[i] = s
        dmax = 0.0
        for i in range(r):
            if g[i, i] > dmax:
                dmax = g[i, i]
        thresh = dmax * r * _EPS
        if thresh <= 0.0:
            thresh = _TINY
        good = True
        for j in range(r):
            s = g[j, j]
            for u in range(j):
                s -= l[j, u] * l[j, u]
            if s <= thresh:
                good = False
                break
            l[j, j] = math.sqrt(s)
            for i in range(j + 1, r):
                s2 = g[i, j]
                for u in range(j):
                    s2 -= l[i, u] * l[j, u]
                l[i, j] = s2 / l[j, j]
        if not good:
            ok[t] = False
            pe2[t] = np.nan
            for j in range(n):
                ws[t, j] = np.nan
            continue
        for i in range(r):
            s = b[i]
            for j in range(i):
                s -= l[i, j] * z[j]
            z[i] = s / l[i, i]
        for i in range(r - 1, -1, -1):
            s = z[i]
            for j in range(i + 1, r):
                s -= l[j, i] * ws[t, j]
            ws[t, i] = s / l[i, i]
        pred = 0.0
        for j in range(n):
            pred += ws[t, j] * xts[t, j]
        diff = pred - yts[t]
        pe2[t] = diff * diff
    return ws, pe2, ok


def _ridge_trials_loops(xs, ys, xts, yts, lam):
    # Per trial: ridge solution ((1/m) X^T X + lam I)^-1 (1/m) X^T y and the
    # squared prediction error on one fresh point.
    tn = xs.shape[0]
    m = xs.shape[1]
    n = xs.shape[2]
    ws = np.zeros((tn, n))
    pe2 = np.empty(tn)
    ok = np.ones(tn, dtype=np.bool_)
    g = np.empty((n, n))
    l = np.empty((n, n))
    b = np.empty(n)
    z = np.empty(n)
    inv_m = 1.0 / m
    for t in range(tn):
        for i in range(n):
            for j in range(i + 1):
                s = 0.0
                for u in range(m):
                    s += xs[t, u, i] * xs[t, u, j]
                g[i, j] = s * inv_m
                g[j, i] = g[i, j]
            g[i, i] += lam
            s = 0.0
            for u in range(m):
                s += xs[t, u, i] * ys[t, u]
            b[i] = s * inv_m
        dmax = 0.0
        for i in range(n):
            if g[i, i] > dmax:
                dmax = g[i, i]
        thresh = dmax * n * _EPS
        if thresh <= 0.0:
            thresh = _TINY
        good = True
        for j in range(n):
            s = g[j, j]
            for u in range(j):
                s -= l[j, u] * l[j, u]
            if s <= thresh:
                good = False
                break
            l[j, j] = math.sqrt(s)
            for i in range(j + 1, n):
                s2 = g[i, j]
                for u in range(j):
                    s2 -= l[i, u] * l[j, u]
                l[i, j] = s2 / l[j, j]
        if not good:
            ok[t] = False
            pe2[t] = np.nan
            for j in range(n):
                ws[t, j] = np.nan
            continue
        for i in range(n):
            s = b[i]
            for j in range(i):
                s -= l[i, j] * z[j]
            z[i] = s / l[i, i]
        for i in range(n - 1, -1, -1):
            s = z[i]
            for j in range(i + 1, n):
                s -= l[j, i] * ws[t, j]
            ws[t, i] = s / l[i, i]
        pred = 0.0
        for j in range(n):
            pred += ws[t, j] * xts[t, j]
        diff = pred - yts[t]
        pe2[t] = diff * diff
    return ws, pe2, ok


# ---------------------------------------------------------------------------
# vectorized numpy fallbacks
# ---------------------------------------------------------------------------


def _jacobi_evd_numpy(a, v, tol, max_sweeps):
    n = a.shape[0]
    if n == 0:
        return 0, True
    anorm = float(np.max(np.abs(a)))
    if anorm == 0.0:
        return 0, True
    iu = np.triu_indices(n, 1)
    for sweep in range(1, max_sweeps + 1):
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        off = float(np.max(np.abs(a[iu]))) if n > 1 else 0.0
        if off <= tol * anorm:
            return sweep, True
    return max_sweeps, False


def _cholesky_numpy(a, l):
    n = a.shape[0]
    diag = np.diagonal(a)
    dmax = float(diag.max()) if n else 0.0
    thresh = dmax * n * _EPS
    if thresh <= 0.0:
        thresh = _TINY
    for j in range(n):
        s = a[j, j] - l[j, :j] @ l[j, :j]
        if s <= thresh:
            return j
        l[j, j] = math.sqrt(s)
        if j + 1 < n:
            l[j + 1:, j] = (a[j + 1:, j] - l[j + 1:, :j] @ l[j, :j]) / l[j, j]
    return -1


def _forward_solve_numpy(l, b):
    n = l.shape[0]
    x = np.empty(n)
    for i in range(n):
        x[i] = (b[i] - l[i, :i] @ x[:i]) / l[i, i]
    return x


def _back_solve_numpy(l, b):
    n = l.shape[0]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - l[i + 1:, i] @ x[i + 1:]) / l[i, i]
    return x


def _assign_nearest_numpy(x, means):
    d2 = ((x[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1).astype(np.int64)
    sqd = d2[np.arange(x.shape[0]), labels]
    return labels, sqd


def _mahalanobis_sq_numpy(xc, l):
    n = l.shape[0]
    z = np.empty((n, xc.shape[0]))
    for i in range(n):
        z[i] = (xc[:, i] - l[i, :i] @ z[:i]) / l[i, i]
    return (z ** 2).sum(axis=0)


def _weighted_moments_numpy(x, resp):
    counts = resp.sum(axis=0)
    safe = np.where(counts > 0.0, counts, 1.0)
    means = (resp.T @ x) / safe[:, None]
    k = resp.shape[1]
    n = x.shape[1]
    covs = np.empty((k, n, n))
    for c in range(k):
        xc = x - means[c]
        covs[c] = (resp[:, c] * xc.T) @ xc / safe[c]
        covs[c] = 0.5 * (covs[c] + covs[c].T)
    means = np.where(counts[:, None] > 0.0, means, 0.0)
    covs = np.where(counts[:, None, None] > 0.0, covs, 0.0)
    return counts, means, covs


def _cholesky_solve_batch(g, b):
    # Batched Cholesky solve for many small SPD systems (g: (T,r,r)).
    tn, r, _ = g.shape
    l = np.zeros_like(g)
    diag = np.einsum("tii->ti", g)
    thresh = np.maximum(diag.max(axis=1) * r * _EPS, _TINY)
    ok = np.ones(tn, dtype=bool)
    for j in range(r):
        piv = g[:, j, j] - np.einsum("tk,tk->t", l[:, j, :j], l[:, j, :j])
        bad = piv <= thresh
        ok &= ~bad
        piv = np.where(bad, 1.0, piv)
        l[:, j, j] = np.sqrt(piv)
        if j + 1 < r:
            l[:, j + 1:, j] = (
                g[:, j + 1:, j]
                - np.einsum("tik,tk->ti", l[:, j + 1:, :j], l[:, j, :j])
            ) / l[:, j, j][:, None]
    y = np.zeros_like(b)
    for i in range(r):
        y[:, i] = (b[:, i] - np.einsum("tk,tk->t", l[:, i, :i], y[:, :i])) / l[:, i, i]
    x = np.zeros_like(b)
    for i in range(r - 1, -1, -1):
        x[:, i] = (
            y[:, i] - np.einsum("tk,tk->t", l[:, i + 1:, i], x[:, i + 1:])
        ) / l[:, i, i]
    return x, ok


def _ols_pad_trials_numpy(xs, ys, xts, yts, r):
    tn, m, n = xs.shape
    xr = xs[:, :, :r]
    g = np.einsum("tmi,tmj->tij", xr, xr)
    b = np.einsum("tmi,tm->ti", xr, ys)
    wr, ok = _cholesky_solve_batch(g, b)
    ws = np.zeros((tn, n))
    ws[:, :r] = wr
    pe2 = (np.einsum("ti,ti->t", ws, xts) - yts) ** 2
    ws[~ok] = np.nan
    pe2[~ok] = np.nan
    return ws, pe2, ok


def _ridge_trials_numpy(xs, ys, xts, yts, lam):
    tn, m, n = xs.shape
    g = np.einsum("tmi,tmj->tij", xs, xs) / m
    g += lam * np.eye(n)[None, :, :]
    b = np.einsum("tmi,tm->ti", xs, ys) / m
    ws, ok = _cholesky_solve_batch(g, b)
    pe2 = (np.einsum("ti,ti->t", ws, xts) - yts) ** 2
    ws = ws.copy()
    ws[~ok] = np.nan
    pe2[~ok] = np.nan
    return ws, pe2, ok


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

_KERNEL_NAMES = (
    "jacobi_evd",
    "cholesky_factor",
    "forward_solve",
    "back_solve",
    "assign_nearest",
    "mahalanobis_sq",
    "weighted_moments",
    "ols_pad_trials",
    "ridge_trials",
)

IMPLS = {
    "numpy": {
        "jacobi_evd": _jacobi_evd_numpy,
        "cholesky_factor": _cholesky_numpy,
        "forward_solve": _forward_solve_numpy,
        "back_solve": _back_solve_numpy,
        "assign_nearest": _assign_nearest_numpy,
        "mahalanobis_sq": _mahalanobis_sq_numpy,
        "weighted_moments": _weighted_moments_numpy,
        "ols_pad_trials": _ols_pad_trials_numpy,
        "ridge_trials": _ridge_trials_numpy,
    }
}


def _build_numba_impls():
    import numba

    jit = numba.njit(cache=True)
    return {
        "jacobi_evd": jit(_jacobi_evd_loops),
        "cholesky_factor": jit(_cholesky_loops),
        "forward_solve": jit(_forward_solve_loops),
        "back_solve": jit(_back_solve_loops),
        "assign_nearest": jit(_assign_nearest_loops),
        "mahalanobis_sq": jit(_mahalanobis_sq_loops),
        "weighted_moments": jit(_weighted_moments_loops),
        "ols_pad_trials": jit(_ols_pad_trials_loops),
        "ridge_trials": jit(_ridge_trials_loops),
    }


def _select_backend():
    flag = os.environ.get("ERMLAB_NUMBA", "auto").strip().lower()
    if flag in ("0", "off", "false", "no"):
        return "numpy"
    if flag in ("1", "on", "true", "yes", "force"):
        IMPLS["numba"] = _build_numba_impls()
        return "numba"
    try:
        IMPLS["numba"] = _build_numba_impls()
    except ImportError:
        return "numpy"
    return "numba"


BACKEND = _select_backend()

jacobi_evd = IMPLS[BACKEND]["jacobi_evd"]
cholesky_factor = IMPLS[BACKEND]["cholesky_factor"]
forward_solve = IMPLS[BACKEND]["forward_solve"]
back_solve = IMPLS[BACKEND]["back_solve"]
assign_nearest = IMPLS[BACKEND]["assign_nearest"]
mahalanobis_sq = IMPLS[BACKEND]["mahalanobis_sq"]
weighted_moments = IMPLS[BACKEND]["weighted_moments"]
ols_pad_trials = IMPLS[BACKEND]["ols_pad_trials"]
ridge_trials = IMPLS[BACKEND]["ridge_trials"]
