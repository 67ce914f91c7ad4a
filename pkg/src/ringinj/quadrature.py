"""Adaptive Gauss-Kronrod quadrature with improper-endpoint handling.

The 7-15 embedded pair is evaluated on interior nodes only, so integrands
may be singular at interval endpoints.  ``improper_quad`` peels geometric
shells off each endpoint and declares divergence when shell contributions
stop decaying; this is the primitive behind every radial integral here.
"""

from __future__ import annotations

import heapq
import math
from typing import Callable, NamedTuple

import numpy as np

from .errors import QuadratureError

# Kronrod-15 abscissae on [-1, 1] (ascending) and weights; the embedded
# Gauss-7 rule lives on the odd-index nodes.
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870,
])


class IntegralOutcome(NamedTuple):
    value: float
    error: float
    diverged_at: str | None  # 'lower' | 'upper' | None


def _gk15(f: Callable[[np.ndarray], np.ndarray], a: float, b: float):
    h = 0.5 * (b - a)
    c = 0.5 * (b + a)
    x = c + h * _XK
    y = np.asarray(f(x), dtype=float)
    bad = ~np.isfinite(y)
    if bad.any():
        raise QuadratureError(
            f"non-finite integrand sample at t={x[bad][0]!r}",
            location=float(x[bad][0]),
        )
    k15 = h * float(_WK @ y)
    g7 = h * float(_WG @ y[1::2])
    return k15, abs(k15 - g7)


def adaptive_quad(f, a: float, b: float, abs_tol: float = 1e-10,
                  rel_tol: float = 1e-8, max_intervals: int = 2000):
    """Globally adaptive bisection; returns (value, error_estimate)."""
    if a == b:
        return 0.0, 0.0
    val, err = _gk15(f, a, b)
    heap = [(-err, 0, a, b, val, err)]
    total_val, total_err = val, err
    count = 1
    while (total_err > max(abs_tol, rel_tol * abs(total_val))
           and count < max_intervals and heap):
        neg_err, _, ia, ib, ival, ierr = heapq.heappop(heap)
        if neg_err == 0.0:  # nothing left to refine
            heapq.heappush(heap, (neg_err, count, ia, ib, ival, ierr))
            break
        mid = 0.5 * (ia + ib)
        if mid <= ia or mid >= ib:  # interval at float resolution
            total_err -= ierr
            heapq.heappush(heap, (0.0, count, ia, ib, ival, 0.0))
            count += 1
            continue
        v1, e1 = _gk15(f, ia, mid)
        v2, e2 = _gk15(f, mid, ib)
        total_val += (v1 + v2) - ival
        total_err += (e1 + e2) - ierr
        count += 2
        heapq.heappush(heap, (-e1, count, ia, mid, v1, e1))
        heapq.heappush(heap, (-e2, count + 1, mid, ib, v2, e2))
    return total_val, total_err


def improper_quad(f, a: float, b: float, abs_tol: float = 1e-10,
                  rel_tol: float = 1e-8, divergence_threshold: float = 1e3,
                  max_shells: int = 64) -> IntegralOutcome:
    """Integrate f over (a, b) allowing singularities at either endpoint.

    Shells [a + w 2^{-j-1}, a + w 2^{-j}] are accumulated toward each
    endpoint until their contribution is negligible.  Divergence is
    declared when the running total exceeds ``divergence_threshold`` while
    shell contributions fail to decay, or when the shell budget runs out
    without geometric decay.
    """
    if not a < b:
        raise ValueError("need a < b")
    w = 0.25 * (b - a)
    core_val, core_err = adaptive_quad(f, a + w, b - w, abs_tol, rel_tol)
    total, err = core_val, core_err

    for side in ("lower", "upper"):
        quiet = 0
        prev = None
        j = 0
        while True:
            if side == "lower":
                s_lo = a + w * 0.5 ** (j + 1)
                s_hi = a + w * 0.5 ** j
            else:
                s_lo = b - w * 0.5 ** j
                s_hi = b - w * 0.5 ** (j + 1)
            if s_hi <= s_lo:
                break  # endpoint resolved to float precision
            c_val, c_err = adaptive_quad(f, s_lo, s_hi, abs_tol * 0.25,
                                         rel_tol, max_intervals=400)
            total += c_val
            err += c_err
            mag = abs(c_val)
            tol = 0.25 * max(abs_tol, rel_tol * abs(total))
            if mag <= tol:
                quiet += 1
                if quiet >= 2:
                    break
            else:
                quiet = 0
            growing = prev is not None and mag >= 0.999 * prev
            if growing and abs(total) > divergence_threshold:
                return IntegralOutcome(math.inf, math.inf, side)
            if j + 1 >= max_shells:
                ratio = mag / prev if (prev and prev > 0) else 0.0
                if ratio >= 0.95:
                    return IntegralOutcome(math.inf, math.inf, side)
                tail = mag * ratio / (1.0 - ratio) if ratio > 0 else 0.0
                total += math.copysign(tail, c_val)
                err += tail
                break
            prev = mag
            j += 1
    return IntegralOutcome(total, err, None)
