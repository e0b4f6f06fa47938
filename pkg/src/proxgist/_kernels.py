"""Hot numeric kernels: closed-form proximity operators and the dense
least-squares GIST inner loop.

Two interchangeable backends are provided:

* a numba ``@njit`` backend (default when numba imports cleanly), built
  from scalar loops;
* a pure-numpy vectorized backend, selected by setting the environment
  variable ``PROXGIST_DISABLE_NUMBA=1`` (or when numba is missing).

Both backends implement the same math; tiny floating-point differences
(BLAS vs explicit loops, libm vs numpy transcendentals) are possible
between them.  Within one backend every kernel is deterministic.
``BACKEND`` reports which one is active.  ``benchmarks/bench_backends.py``
compares their throughput.
"""

from __future__ import annotations

import math
import os

import numpy as np

# regularizer kind codes shared with RegKind
RIDGE = 0
LASSO = 1
LSP = 2
LHALF = 3

# objective ties between 0 and a positive prox candidate resolve toward 0
TIE_TOL = 1e-12

_FOUR_PI = 4.0 * math.pi


def _numba_requested() -> bool:
    if os.environ.get("PROXGIST_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_requested()
BACKEND = "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# scalar prox: argmin_{x >= 0} tau * g(x) + 0.5 * (x - a)^2  for a >= 0
# ---------------------------------------------------------------------------

def _prox_pos(kind, a, tau, theta):
    """Prox magnitude on the nonnegative half-line (a >= 0, tau >= 0)."""
    if tau == 0.0:
        return a
    if kind == RIDGE:
        return a / (1.0 + 2.0 * tau)
    if kind == LASSO:
        r = a - tau
        return r if r > 0.0 else 0.0

    # nonconvex kinds: candidate set is {0} plus the nonnegative
    # stationary points; compare objectives, ties go to 0
    obj0 = 0.5 * a * a
    best_x = 0.0
    best_obj = np.inf

    if kind == LSP:
        # stationary points solve x^2 + (theta - a) x + (tau - a*theta) = 0
        disc = (a + theta) * (a + theta) - 4.0 * tau
        if disc >= 0.0:
            sq = math.sqrt(disc)
            for s in (-1.0, 1.0):
                x = 0.5 * ((a - theta) + s * sq)
                if x > 0.0:
                    obj = tau * math.log1p(x / theta) + 0.5 * (x - a) * (x - a)
                    if obj < best_obj:
                        best_obj = obj
                        best_x = x
    else:
        # LHALF: u = sqrt(x) solves the depressed cubic u^3 - a u + tau/2 = 0;
        # three real roots exist iff tau^2/16 <= a^3/27 (else no positive
        # stationary point and 0 wins outright)
        if a > 0.0 and tau * tau / 16.0 <= a * a * a / 27.0:
            mcub = 2.0 * math.sqrt(a / 3.0)
            c = -(tau / 4.0) * math.sqrt(27.0 / (a * a * a))
            if c < -1.0:
                c = -1.0
            elif c > 1.0:
                c = 1.0
            psi = math.acos(c)
            for shift in (0.0, _FOUR_PI):
                u = mcub * math.cos((psi + shift) / 3.0)
                if u > 0.0:
                    x = u * u
                    obj = tau * u + 0.5 * (x - a) * (x - a)
                    if obj < best_obj:
                        best_obj = obj
                        best_x = x

    if obj0 <= best_obj + TIE_TOL:
        return 0.0
    return best_x


def _prox_scalar(kind, v, tau, theta, nonneg):
    """Scalar prox with sign handling and optional positivity composition."""
    if nonneg:
        a = v if v > 0.0 else 0.0
        return _prox_pos(kind, a, tau, theta)
    if v < 0.0:
        return -_prox_pos(kind, -v, tau, theta)
    return _prox_pos(kind, v, tau, theta)


def _prox_vector_loop(kind, v, tau, theta, nonneg):
    out = np.empty_like(v)
    for i in range(v.shape[0]):
        out[i] = _prox_scalar(kind, v[i], tau, theta, nonneg)
    return out


def _reg_value_loop(kind, w, theta):
    s = 0.0
    for i in range(w.shape[0]):
        x = abs(w[i])
        if kind == RIDGE:
            s += x * x
        elif kind == LASSO:
            s += x
        elif kind == LSP:
            s += math.log1p(x / theta)
        else:
            s += math.sqrt(x)
    return s


# ---------------------------------------------------------------------------
# vectorized numpy twins (fallback backend)
# ---------------------------------------------------------------------------

def _prox_vector_np(kind, v, tau, theta, nonneg):
    if nonneg:
        a = np.maximum(v, 0.0)
    else:
        a = np.abs(v)

    if tau == 0.0:
        x = a.copy()
    elif kind == RIDGE:
        x = a / (1.0 + 2.0 * tau)
    elif kind == LASSO:
        x = np.maximum(a - tau, 0.0)
    elif kind == LSP:
        disc = (a + theta) ** 2 - 4.0 * tau
        sq = np.sqrt(np.maximum(disc, 0.0))
        x = np.zeros_like(a)
        obj0 = 0.5 * a * a
        best = np.full_like(a, np.inf)
        for s in (-1.0, 1.0):
            cand = 0.5 * ((a - theta) + s * sq)
            ok = (disc >= 0.0) & (cand > 0.0)
            c = np.where(ok, cand, 1.0)
            obj = np.where(ok, tau * np.log1p(c / theta) + 0.5 * (c - a) ** 2, np.inf)
            take = obj < best
            best = np.where(take, obj, best)
            x = np.where(take, cand, x)
        x = np.where(obj0 <= best + TIE_TOL, 0.0, x)
    else:
        three_real = (a > 0.0) & (tau * tau / 16.0 <= a ** 3 / 27.0)
        a_safe = np.where(three_real, a, 1.0)
        mcub = 2.0 * np.sqrt(a_safe / 3.0)
        c = np.clip(-(tau / 4.0) * np.sqrt(27.0 / a_safe ** 3), -1.0, 1.0)
        psi = np.arccos(c)
        x = np.zeros_like(a)
        obj0 = 0.5 * a * a
        best = np.full_like(a, np.inf)
        for shift in (0.0, _FOUR_PI):
            u = mcub * np.cos((psi + shift) / 3.0)
            ok = three_real & (u > 0.0)
            cand = u * u
            uu = np.where(ok, u, 0.0)
            obj = np.where(ok, tau * uu + 0.5 * (cand - a) ** 2, np.inf)
            take = obj < best
            best = np.where(take, obj, best)
            x = np.where(take, cand, x)
        x = np.where(obj0 <= best + TIE_TOL, 0.0, x)

    if nonneg:
        return x
    return np.where(v < 0.0, -x, x)


def _reg_value_np(kind, w, theta):
    x = np.abs(w)
    if kind == RIDGE:
        return float(np.sum(x * x))
    if kind == LASSO:
        return float(np.sum(x))
    if kind == LSP:
        return float(np.sum(np.log1p(x / theta)))
    return float(np.sum(np.sqrt(x)))


# ---------------------------------------------------------------------------
# backend binding for the prox / penalty-value kernels
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    from numba import njit

    _prox_pos = njit(cache=True)(_prox_pos)
    _prox_scalar = njit(cache=True)(_prox_scalar)
    prox_vector_kernel = njit(cache=True)(_prox_vector_loop)
    reg_value_kernel = njit(cache=True)(_reg_value_loop)
else:
    prox_vector_kernel = _prox_vector_np
    reg_value_kernel = _reg_value_np


def prox_scalar_kernel(kind, v, tau, theta, nonneg):
    return float(_prox_scalar(kind, float(v), float(tau), float(theta), bool(nonneg)))


# ---------------------------------------------------------------------------
# GIST inner loop for 0.5*||y - D w||^2 + lam * R(w), precomputed Gram form
#
#   loss(w) = 0.5 * w'Gw - b'w + c0   with  G = D'D, b = D'y, c0 = 0.5*||y||^2
#
# Termination codes: 0 = relative-objective tolerance, 1 = max_iter,
# 2 = non-finite objective (diverged at the reported iteration).
# ---------------------------------------------------------------------------

def _gist_ls_core(G, b, c0, w0, kind, theta, nonneg, lam,
                  mu0, max_iter, tol, mu_min, mu_max, sigma_dec, window):
    w = w0.copy()
    Gw = np.dot(G, w)
    f = 0.5 * np.dot(w, Gw) - np.dot(b, w) + c0
    obj = f + lam * reg_value_kernel(kind, w, theta)
    grad = Gw - b

    trace = np.empty(max_iter + 1)
    trace[0] = obj
    n_done = 0
    term = 1

    w_prev = w.copy()
    grad_prev = grad.copy()
    mu = mu0
    if mu < mu_min:
        mu = mu_min
    elif mu > mu_max:
        mu = mu_max

    for t in range(max_iter):
        if t > 0:
            dw = w - w_prev
            dg = grad - grad_prev
            denom = np.dot(dw, dw)
            if denom > 0.0:
                bb = np.dot(dw, dg) / denom
                if bb < mu_min:
                    mu = mu_min
                elif bb > mu_max:
                    mu = mu_max
                else:
                    mu = bb

        if window <= 1:
            ref = trace[t]
        else:
            lo = t - window + 1
            if lo < 0:
                lo = 0
            ref = np.max(trace[lo:t + 1])

        accepted = False
        w_new = w
        obj_new = obj
        Gw_new = Gw
        while True:
            w_new = prox_vector_kernel(kind, w - grad / mu, lam / mu, theta, nonneg)
            Gw_new = np.dot(G, w_new)
            f_new = 0.5 * np.dot(w_new, Gw_new) - np.dot(b, w_new) + c0
            obj_new = f_new + lam * reg_value_kernel(kind, w_new, theta)
            d = w_new - w
            if obj_new <= ref - 0.5 * sigma_dec * mu * np.dot(d, d):
                accepted = True
                break
            if mu >= mu_max:
                break
            mu = mu * 2.0
            if mu > mu_max:
                mu = mu_max

        if not accepted:
            # no acceptable decrease within the curvature budget
            n_done = t
            term = 0
            break
        if not np.isfinite(obj_new):
            n_done = t + 1
            trace[n_done] = obj_new
            term = 2
            break

        rel = abs(trace[t] - obj_new) / max(1.0, abs(trace[t]))
        w_prev = w
        grad_prev = grad
        w = w_new
        Gw = Gw_new
        grad = Gw - b
        obj = obj_new
        n_done = t + 1
        trace[n_done] = obj
        if rel < tol:
            term = 0
            break

    return w, trace[:n_done + 1].copy(), n_done, term, mu


if NUMBA_ENABLED:
    gist_ls_kernel = njit(cache=True)(_gist_ls_core)
else:
    gist_ls_kernel = _gist_ls_core


def warmup():
    """Trigger JIT compilation of every kernel (no-op on the numpy backend)."""
    v = np.array([0.3, -1.2, 0.0])
    for kind in (RIDGE, LASSO, LSP, LHALF):
        prox_vector_kernel(kind, v, 0.5, 0.1, False)
        prox_vector_kernel(kind, v, 0.5, 0.1, True)
        reg_value_kernel(kind, v, 0.1)
    G = np.eye(3)
    b = np.array([1.0, 0.5, -0.2])
    w0 = np.zeros(3)
    gist_ls_kernel(G, b, 0.5, w0, LASSO, 0.1, True, 0.1,
                   1.0, 10, 1e-7, 1e-10, 1e10, 1e-4, 1)
