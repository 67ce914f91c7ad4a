"""Controlling integrals: psi weights, I(r1, r2), divergence classification
and the shell-decomposed volume integral of Q * psi^n.

All radial integrals are computed in u = log t coordinates, which absorbs
the universal 1/t factor; catalog fields additionally carry exact
antiderivatives that the adaptive engine is tested against.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .config import RunConfig
from .errors import QuadratureError
from .geometry import constants
from .qfield import QField, RadialProfile
from .quadrature import improper_quad


@dataclasses.dataclass
class PsiWeight:
    """Admissible-weight template psi on (0, 1).

    kinds:
      canonical  1/(t q0^{1/(n-1)}(t)) on (r1, r2), 0 outside
      fmo        1/(eps0 t log(1/(eps0 t)))
      custom     tabulated values
    """

    kind: str
    n: int
    r1: float
    r2: float
    field: QField | None = None
    profile: RadialProfile | None = None
    eps0: float | None = None

    def _q0(self, t):
        if self.field is not None:
            return self.field.eval_radial(t)
        return self.profile(t)

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t > self.r1) & (t < self.r2)
        out = np.zeros_like(t)
        ts = np.where(inside, t, 0.5 * (self.r1 + self.r2))
        if self.kind == "canonical":
            with np.errstate(divide="ignore"):
                vals = 1.0 / (ts * self._q0(ts) ** (1.0 / (self.n - 1)))
        elif self.kind == "fmo":
            vals = 1.0 / (self.eps0 * ts * (-np.log(self.eps0 * ts)))
        else:
            vals = self.profile(ts)
        out[inside] = np.asarray(vals)[inside] if vals.ndim else vals
        return float(out) if out.ndim == 0 else out

    def eval_logform(self, u):
        """psi(e^u) * e^u, the integrand after substituting u = log t."""
        u = np.asarray(u, dtype=float)
        if self.kind == "canonical":
            return self._q0(np.exp(u)) ** (-1.0 / (self.n - 1))
        if self.kind == "fmo":
            return 1.0 / (self.eps0 * (math.log(1.0 / self.eps0) - u))
        return self.profile(np.exp(u)) * np.exp(u)

    def breakpoints(self):
        pts = []
        if self.field is not None:
            pts.extend(self.field.breakpoints())
        return pts


def psi_canonical(profile: RadialProfile, n: int, r1: float,
                  r2: float) -> PsiWeight:
    """The canonical weight built from a sampled average profile."""
    if not 0.0 < r1 < r2 <= 1.0:
        raise ValueError("need 0 < r1 < r2 <= 1")
    if profile.r_min > r1 * (1 + 1e-12) or profile.r_max < r2 * (1 - 1e-12):
        raise ValueError(
            f"profile covers [{profile.r_min}, {profile.r_max}], "
            f"not ({r1}, {r2})")
    return PsiWeight(kind="canonical", n=n, r1=r1, r2=r2, profile=profile)


def psi_from_field(q: QField, n: int, r1: float = 0.0,
                   r2: float = 1.0) -> PsiWeight:
    """Canonical weight evaluated straight from a field (exact q0)."""
    if not 0.0 <= r1 < r2 <= 1.0:
        raise ValueError("need 0 <= r1 < r2 <= 1")
    return PsiWeight(kind="canonical", n=n, r1=r1, r2=r2, field=q)


def psi_fmo(eps0: float, n: int, r1: float = 0.0, r2: float = 1.0) -> PsiWeight:
    if not 0.0 < eps0 <= 1.0:
        raise ValueError("need 0 < eps0 <= 1")
    return PsiWeight(kind="fmo", n=n, r1=r1, r2=r2, eps0=eps0)


@dataclasses.dataclass
class IntegralResult:
    value: float
    abs_error_estimate: float
    diverged_at: str | None = None


@dataclasses.dataclass
class DivergenceClass:
    verdict: str                       # 'divergent' | 'convergent' | 'inconclusive'
    partial_values: list               # [(eps_k, I(eps_k, c)), ...]
    fit: dict


# ---------------------------------------------------------------------------
# Closed forms for catalog fields
# ---------------------------------------------------------------------------

def _closed_form_segment(q: QField, n: int, r1: float, r2: float):
    """Exact integral of dt/(t q0^{1/(n-1)}) over (r1, r2), or None.

    Returns (value, diverged_at).  r1 may be 0 and r2 may be 1; infinities
    are classified by the offending endpoint.
    """
    m = n - 1
    if q.kind == "const":
        if q.value == 0:
            return math.inf, "lower"
        scale = q.value ** (-1.0 / m)
        if r1 == 0.0:
            return math.inf, "lower"
        return scale * math.log(r2 / r1), None

    if q.kind == "powr":
        beta = q.power / m
        scale = q.coeff ** (-1.0 / m)
        if beta == 0.0:
            if r1 == 0.0:
                return math.inf, "lower"
            return scale * math.log(r2 / r1), None
        if beta > 0:
            if r1 == 0.0:
                return math.inf, "lower"
            return scale * (r1 ** (-beta) - r2 ** (-beta)) / beta, None
        g = -beta  # positive
        return scale * (r2 ** g - r1 ** g) / g, None

    if q.kind == "logpow":
        beta = q.power / m
        scale = q.coeff ** (-1.0 / m)
        s1 = math.inf if r1 == 0.0 else math.log(1.0 / r1)
        s2 = 0.0 if r2 >= 1.0 else math.log(1.0 / r2)
        # integral of s^{-beta} ds over (s2, s1): (s1^e - s2^e) / e, e = 1-beta
        if beta == 1.0:
            if s2 == 0.0:
                return math.inf, "upper"
            if math.isinf(s1):
                return math.inf, "lower"
            return scale * (math.log(s1) - math.log(s2)), None
        e = 1.0 - beta
        if beta < 1.0:
            if math.isinf(s1):
                return math.inf, "lower"
            return scale * (s1 ** e - s2 ** e) / e, None
        # beta > 1: singular at s -> 0, i.e. the upper endpoint t -> 1
        if s2 == 0.0:
            return math.inf, "upper"
        top = 0.0 if math.isinf(s1) else s1 ** e
        return scale * (top - s2 ** e) / e, None

    if q.kind == "trunc":
        d = q.delta
        lo, hi = max(r1, 0.0), r2
        total = 0.0
        if lo < min(d, hi):
            inner = QField.const(q.inner)
            v, div = _closed_form_segment(inner, n, lo, min(d, hi))
            if div:
                return math.inf, div
            total += v
        if hi > max(d, lo):
            v = _closed_form_segment(q.outer, n, max(d, lo), hi)
            if v is None:
                return None
            val, div = v
            if div:
                return math.inf, div
            total += val
        return total, None

    return None


def controlling_integral_exact(q: QField, n: int, r1: float, r2: float):
    """Closed form of I(r1, r2) for catalog fields, else None."""
    out = _closed_form_segment(q, n, r1, r2)
    return out


def _fmo_exact(eps0: float, r1: float, r2: float):
    def loglog(r):
        arg = math.log(1.0 / (eps0 * r))
        if arg <= 0.0:
            return -math.inf
        return math.log(arg)
    if r1 == 0.0:
        return math.inf, "lower"
    lo, hi = loglog(r2), loglog(r1)
    if math.isinf(lo):
        return math.inf, "upper"
    return (hi - lo) / eps0, None


# ---------------------------------------------------------------------------
# The controlling integral I(r1, r2) = int psi dt
# ---------------------------------------------------------------------------

def integrate_I(psi: PsiWeight, r1: float, r2: float,
                cfg: RunConfig | None = None) -> IntegralResult:
    """Adaptive integral of psi over (r1, r2) in u = log t coordinates.

    Catalog-backed canonical weights and the fmo weight use exact
    antiderivatives; endpoint singularities in the numeric path are handled
    by nested shell refinement with divergence detection.
    """
    cfg = cfg or RunConfig()
    lo = max(r1, psi.r1)
    hi = min(r2, psi.r2)
    if hi <= lo:
        return IntegralResult(0.0, 0.0)

    if psi.kind == "canonical" and psi.field is not None:
        exact = controlling_integral_exact(psi.field, psi.n, lo, hi)
        if exact is not None:
            val, div = exact
            err = abs(val) * 1e-15 if math.isfinite(val) else math.inf
            return IntegralResult(val, err, div)
    if psi.kind == "fmo":
        val, div = _fmo_exact(psi.eps0, lo, hi)
        err = abs(val) * 1e-15 if math.isfinite(val) else math.inf
        return IntegralResult(val, err, div)

    if lo <= 0.0:
        return IntegralResult(math.inf, math.inf, "lower")
    ua, ub = math.log(lo), math.log(hi)
    total, err = 0.0, 0.0
    edges = [ua] + sorted(math.log(b) for b in psi.breakpoints()
                          if lo < b < hi) + [ub]
    for a, b in zip(edges[:-1], edges[1:]):
        out = improper_quad(psi.eval_logform, a, b, cfg.abs_tol, cfg.rel_tol,
                            cfg.divergence_threshold)
        if out.diverged_at is not None:
            side = "lower" if (out.diverged_at == "lower" and a == ua) else \
                ("upper" if (out.diverged_at == "upper" and b == ub) else None)
            if side is None:
                raise QuadratureError(
                    "non-integrable interior singularity",
                    location=math.exp(a if out.diverged_at == "lower" else b))
            return IntegralResult(math.inf, math.inf, side)
        total += out.value
        err += out.error
    return IntegralResult(total, err, None)


def upper_anchor(q: QField, n: int, cfg: RunConfig | None = None) -> float:
    """Upper integration anchor for I(., 1).

    1.0 when the canonical integrand is integrable at t = 1; the configured
    cap r_max otherwise (log-power fields with p >= n-1, whose average
    vanishes at the boundary fast enough to blow the integral up there).
    Tabulated fields anchor at their last node.
    """
    cfg = cfg or RunConfig()
    if q.kind == "logpow":
        return 1.0 if q.power / (n - 1) < 1.0 else cfg.r_max
    if q.kind == "trunc":
        return upper_anchor(q.outer, n, cfg)
    if q.kind == "table":
        return q.profile.r_max
    return 1.0


def eta_normalize(psi: PsiWeight, r1: float, r2: float,
                  cfg: RunConfig | None = None):
    """The admissible weight eta = psi / I(r1, r2) with unit integral."""
    res = integrate_I(psi, r1, r2, cfg)
    if not math.isfinite(res.value) or res.value <= 0.0:
        raise ValueError(
            f"cannot normalize: I(r1, r2) = {res.value} is zero or infinite")
    I = res.value

    @dataclasses.dataclass
    class EtaWeight:
        psi: PsiWeight
        I: float

        def eval(self, t):
            return self.psi.eval(t) / self.I

    return EtaWeight(psi=psi, I=I)


# ---------------------------------------------------------------------------
# Divergence classification at the origin
# ---------------------------------------------------------------------------

def classify_divergence(q_or_profile, n: int,
                        cfg: RunConfig | None = None) -> DivergenceClass:
    """Classify divergence of I(0, c) from dyadic partial integrals.

    Catalog fields are decided exactly; tabulated data uses the documented
    trend test (partials beyond the threshold with positive growth =>
    divergent, geometrically decaying increments => convergent, otherwise
    inconclusive).
    """
    cfg = cfg or RunConfig()
    field = q_or_profile if isinstance(q_or_profile, QField) else None

    if field is not None:
        c = min(0.5, field.coverage()[1] * 0.999)
        exact = controlling_integral_exact(field, n, 0.0, c)
        if exact is not None:
            value, div = exact
            verdict = "divergent" if (math.isinf(value) and div == "lower") \
                else "convergent"
            partials = []
            for k in range(1, 19):
                eps = c * 2.0 ** (-k)
                v, _ = controlling_integral_exact(field, n, eps, c)
                partials.append((eps, v))
            return DivergenceClass(verdict=verdict, partial_values=partials,
                                   fit={"method": "closed-form",
                                        "I_0_c": value})
        # tabulated (or table-backed truncation): numeric trend test
        cov_lo = field.coverage()[0]
        psi = psi_from_field(field, n, cov_lo, c)
    else:
        prof = q_or_profile
        c = min(0.5, prof.r_max * 0.999)
        cov_lo = prof.r_min
        psi = psi_canonical(prof, n, cov_lo, min(c * (1 + 1e-9), prof.r_max))

    if cov_lo > 1e-6 * c:
        return DivergenceClass(
            verdict="inconclusive", partial_values=[],
            fit={"method": "numeric",
                 "reason": f"tail data stops at {cov_lo}, need <= {1e-6 * c}"})

    partials = []
    eps = c * 0.5
    while eps >= max(cov_lo, 1e-18):
        res = integrate_I(psi, eps, c, cfg)
        if res.diverged_at is not None:
            partials.append((eps, math.inf))
            return DivergenceClass(verdict="divergent",
                                   partial_values=partials,
                                   fit={"method": "numeric",
                                        "reason": "capped integral infinite"})
        partials.append((eps, res.value))
        eps *= 0.5

    if len(partials) < 6:
        return DivergenceClass("inconclusive", partials,
                               {"method": "numeric",
                                "reason": "too few dyadic partials"})
    vals = np.array([v for _, v in partials])
    incs = np.diff(np.concatenate([[0.0], vals]))
    slope = float(np.polyfit(np.arange(len(vals))[-5:], vals[-5:], 1)[0])
    fit = {"method": "numeric", "slope_last5": slope,
           "threshold": cfg.divergence_threshold}
    if vals[-1] > cfg.divergence_threshold and slope > 0:
        return DivergenceClass("divergent", partials, fit)

    tail = incs[len(incs) // 2:]
    if np.all(tail > 0):
        ratios = tail[1:] / tail[:-1]
        if np.all(ratios < 0.7):
            fit["tail_bound"] = float(tail[-1] * ratios[-1]
                                      / (1 - ratios[-1]))
            return DivergenceClass("convergent", partials, fit)
        # polynomial decay c_k ~ k^{-p}: the dyadic tail sums iff p > 1
        ks = np.arange(len(incs) // 2, len(incs)) + 1.0
        p_hat = -float(np.polyfit(np.log(ks), np.log(tail), 1)[0])
        fit["increment_power"] = p_hat
        if p_hat >= 1.3:
            fit["tail_bound"] = float(tail[-1] * ks[-1] / (p_hat - 1.0))
            return DivergenceClass("convergent", partials, fit)
    return DivergenceClass("inconclusive", partials, fit)


# ---------------------------------------------------------------------------
# Fubini right-hand side: volume integral of Q * psi^n over a ring
# ---------------------------------------------------------------------------

def fubini_rhs(q: QField, psi: PsiWeight, r1: float, r2: float, n: int,
               cfg: RunConfig | None = None) -> float:
    """Volume integral of Q(x) psi^n(|x|) over r1 < |x| < r2 by shells:
    omega_{n-1} * int q0(t) psi^n(t) t^{n-1} dt."""
    cfg = cfg or RunConfig()
    if not 0.0 <= r1 < r2 <= 1.0:
        raise ValueError("need 0 <= r1 < r2 <= 1 inside the unit ball")
    omega = constants(n).omega
    lo = max(r1, 1e-300)
    ua, ub = math.log(lo), math.log(r2)

    def integrand(u):
        t = np.exp(u)
        return q.eval_radial(t) * psi.eval(t) ** n * t ** float(n)

    breaks = sorted(set(
        math.log(b) for b in
        list(q.breakpoints()) + list(psi.breakpoints()) + [psi.r1, psi.r2]
        if lo < b < r2 and b > 0))
    edges = [ua] + breaks + [ub]
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        out = improper_quad(integrand, a, b, cfg.abs_tol, cfg.rel_tol,
                            cfg.divergence_threshold)
        if out.diverged_at is not None:
            raise QuadratureError(
                f"volume integral diverges at the {out.diverged_at} endpoint",
                location=math.exp(a if out.diverged_at == "lower" else b))
        total += out.value
        err += out.error
    return omega * total
