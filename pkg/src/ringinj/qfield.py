"""Dilatation fields Q on the unit ball and their radial statistics.

Supported field kinds (all radial):

* ``const:K``                — Q = K
* ``logpow:C,p``             — Q = C * log^p(1/|x|)
* ``powr:a`` / ``powr:c,a``  — Q = c * |x|^a
* ``table:<csv>``            — tabulated radial profile, columns ``r,value``
* ``trunc:K,delta,<outer>``  — outer field above |x| = delta, constant 1/K below

Spherical averages use the exact radial shortcut at the origin and seeded
Monte Carlo elsewhere; finite-mean-oscillation classification is a
documented trend test over a shrinking ball grid, returning a tri-state.
"""

from __future__ import annotations

import csv
import dataclasses
import math

import numpy as np

from .config import RunConfig
from .errors import InconclusiveError
from .geometry import as_point, constants
from .quadrature import improper_quad

_CATALOG_KINDS = ("const", "logpow", "powr", "table", "trunc")


@dataclasses.dataclass
class RadialProfile:
    """Tabulated function of r in (0,1), linear in (log r, value).

    Evaluation outside [min r, max r] is refused: every integral in this
    problem is logarithmic in r and extrapolated tails would silently decide
    divergence questions.
    """

    radii: np.ndarray
    values: np.ndarray
    provenance: str = "table"

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.radii.ndim != 1 or self.radii.shape != self.values.shape:
            raise ValueError("radii and values must be matching 1-d arrays")
        if len(self.radii) < 2:
            raise ValueError("need at least two nodes")
        if not (np.all(np.diff(self.radii) > 0)
                and self.radii[0] > 0 and self.radii[-1] < 1):
            raise ValueError("radii must be strictly increasing inside (0,1)")
        if np.any(self.values < 0):
            raise ValueError("profile values must be nonnegative")

    @property
    def r_min(self) -> float:
        return float(self.radii[0])

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        eps = 1e-12
        if np.any(r < self.r_min * (1 - eps)) or np.any(r > self.r_max * (1 + eps)):
            raise ValueError(
                f"profile defined on [{self.r_min}, {self.r_max}], "
                f"refusing extrapolation")
        out = np.interp(np.log(np.clip(r, self.r_min, self.r_max)),
                        np.log(self.radii), self.values)
        return float(out) if out.ndim == 0 else out

    @classmethod
    def from_csv(cls, path) -> "RadialProfile":
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["r", "value"]:
                raise ValueError(f"{path}: expected CSV header 'r,value'")
            rows = [(float(row[0]), float(row[1])) for row in reader if row]
        if not rows:
            raise ValueError(f"{path}: no data rows")
        r, v = zip(*rows)
        return cls(np.array(r), np.array(v), provenance=str(path))


@dataclasses.dataclass
class QField:
    """A measurable dilatation field Q: unit ball -> [0, inf]."""

    kind: str
    value: float = 1.0            # const
    coeff: float = 1.0            # logpow / powr multiplier
    power: float = 0.0            # logpow exponent p or powr exponent a
    profile: RadialProfile | None = None   # table
    inner: float = 1.0            # trunc: constant below delta
    delta: float = 0.0            # trunc: truncation radius
    outer: "QField | None" = None  # trunc

    def __post_init__(self):
        if self.kind not in _CATALOG_KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")

    # -- constructors -------------------------------------------------
    @classmethod
    def const(cls, K: float) -> "QField":
        if K < 0:
            raise ValueError("constant field must be nonnegative")
        return cls(kind="const", value=float(K))

    @classmethod
    def log_power(cls, C: float, p: float) -> "QField":
        if C <= 0:
            raise ValueError("log-power coefficient must be positive")
        return cls(kind="logpow", coeff=float(C), power=float(p))

    @classmethod
    def radial_power(cls, a: float, coeff: float = 1.0) -> "QField":
        if coeff <= 0:
            raise ValueError("radial-power coefficient must be positive")
        return cls(kind="powr", coeff=float(coeff), power=float(a))

    @classmethod
    def from_table(cls, profile: RadialProfile) -> "QField":
        return cls(kind="table", profile=profile)

    @classmethod
    def truncated(cls, inner: float, delta: float, outer: "QField") -> "QField":
        if not 0.0 < delta < 1.0:
            raise ValueError("truncation radius must lie in (0,1)")
        if inner < 0:
            raise ValueError("inner constant must be nonnegative")
        return cls(kind="trunc", inner=float(inner), delta=float(delta),
                   outer=outer)

    # -- evaluation ---------------------------------------------------
    def eval_radial(self, r):
        """Pointwise Q at radius r (vectorized)."""
        r = np.asarray(r, dtype=float)
        if self.kind == "const":
            out = np.full_like(r, self.value)
        elif self.kind == "logpow":
            # -log(r) stays finite for subnormal r where 1/r overflows
            with np.errstate(divide="ignore"):
                out = self.coeff * (-np.log(r)) ** self.power
        elif self.kind == "powr":
            with np.errstate(divide="ignore"):
                out = self.coeff * r ** self.power
        elif self.kind == "table":
            out = np.asarray(self.profile(r), dtype=float)
        else:  # trunc
            out = np.where(r <= self.delta,
                           self.inner,
                           self.outer.eval_radial(np.maximum(r, self.delta)))
        return float(out) if out.ndim == 0 else out

    def __call__(self, x):
        x = as_point(x)
        r = float(np.linalg.norm(x))
        if r >= 1.0:
            raise ValueError("field is defined on the open unit ball")
        return float(self.eval_radial(r))

    def scaled(self, factor: float) -> "QField":
        """The field factor * Q (same kind)."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        if self.kind == "const":
            return QField.const(self.value * factor)
        if self.kind == "logpow":
            return QField.log_power(self.coeff * factor, self.power)
        if self.kind == "powr":
            return QField.radial_power(self.power, self.coeff * factor)
        if self.kind == "table":
            prof = RadialProfile(self.profile.radii,
                                 self.profile.values * factor,
                                 provenance=self.profile.provenance + "*scale")
            return QField.from_table(prof)
        return QField.truncated(self.inner * factor, self.delta,
                                self.outer.scaled(factor))

    def breakpoints(self):
        """Radii where the field is only piecewise smooth."""
        if self.kind == "trunc":
            return [self.delta] + self.outer.breakpoints()
        return []

    def coverage(self):
        """(r_lo, r_hi) on which radial evaluation is defined."""
        if self.kind == "table":
            return self.profile.r_min, self.profile.r_max
        if self.kind == "trunc":
            lo, hi = self.outer.coverage()
            return (0.0, hi) if self.delta >= lo else (lo, hi)
        return 0.0, 1.0

    def spec_string(self) -> str:
        if self.kind == "const":
            return f"const:{self.value:g}"
        if self.kind == "logpow":
            return f"logpow:{self.coeff:g},{self.power:g}"
        if self.kind == "powr":
            if self.coeff == 1.0:
                return f"powr:{self.power:g}"
            return f"powr:{self.coeff:g},{self.power:g}"
        if self.kind == "table":
            return f"table:{self.profile.provenance}"
        inner_k = 1.0 / self.inner if self.inner > 0 else math.inf
        return f"trunc:{inner_k:g},{self.delta:g},{self.outer.spec_string()}"


def parse_qspec(spec: str) -> QField:
    """Parse the CLI mini-language for dilatation fields."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    try:
        if kind == "const":
            return QField.const(float(rest))
        if kind == "logpow":
            c, p = rest.split(",")
            return QField.log_power(float(c), float(p))
        if kind == "powr":
            parts = rest.split(",")
            if len(parts) == 1:
                return QField.radial_power(float(parts[0]))
            return QField.radial_power(float(parts[1]), coeff=float(parts[0]))
        if kind == "table":
            return QField.from_table(RadialProfile.from_csv(rest))
        if kind == "trunc":
            k_str, delta_str, outer_spec = rest.split(",", 2)
            K = float(k_str)
            if K <= 0:
                raise ValueError("trunc constant K must be positive")
            return QField.truncated(1.0 / K, float(delta_str),
                                    parse_qspec(outer_spec))
    except ValueError as exc:
        raise ValueError(f"bad Q spec {spec!r}: {exc}") from None
    raise ValueError(f"bad Q spec {spec!r}: unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# Spherical averages q_{x0}(r)
# ---------------------------------------------------------------------------

def q_eval(q: QField, x) -> float:
    return q(x)


def _sphere_dirs(rng, count, n):
    u = rng.normal(size=(count, n))
    norms = np.linalg.norm(u, axis=1)
    # Gaussian norm is zero with probability 0; guard anyway.
    norms[norms == 0] = 1.0
    return u / norms[:, None]


def _mc_values(q, points, rng, retry):
    radii = np.linalg.norm(points, axis=1)
    vals = q.eval_radial(radii)
    for _ in range(retry):
        bad = ~np.isfinite(vals)
        if not bad.any():
            return vals
        jitter = points[bad] * (1.0 + 1e-9 * rng.uniform(size=(bad.sum(), 1)))
        vals[bad] = q.eval_radial(np.linalg.norm(jitter, axis=1))
    if not np.isfinite(vals).all():
        raise ValueError("field evaluates non-finite on a positive fraction "
                         "of samples")
    return vals


def q_average(q: QField, x0, r: float, cfg: RunConfig | None = None) -> float:
    """Average of Q over the sphere |x - x0| = r.

    Exact (the average of a radial field over a centered sphere is its
    value) when x0 = 0; seeded Monte Carlo otherwise.
    """
    cfg = cfg or RunConfig()
    x0 = as_point(x0)
    if r <= 0 or np.linalg.norm(x0) + r >= 1.0:
        raise ValueError("sphere must lie inside the unit ball")
    lo, hi = q.coverage()
    if float(np.linalg.norm(x0)) == 0.0:
        if not lo <= r <= hi:
            raise ValueError(f"radius {r} outside field coverage [{lo},{hi}]")
        return float(q.eval_radial(r))
    r_lo = abs(np.linalg.norm(x0) - r)
    r_hi = np.linalg.norm(x0) + r
    if r_lo < lo or r_hi > hi:
        raise ValueError("sphere leaves the tabulated coverage")
    rng = cfg.rng(f"q_average:{r}")
    dirs = _sphere_dirs(rng, cfg.sample_count, len(x0))
    vals = _mc_values(q, x0 + r * dirs, rng, cfg.mc_retry)
    return float(np.mean(vals))


def q_profile(q: QField, x0, r_grid, cfg: RunConfig | None = None) -> RadialProfile:
    """Sampled curve of the spherical average over a radius grid."""
    cfg = cfg or RunConfig()
    r_grid = np.sort(np.asarray(r_grid, dtype=float))
    vals = [q_average(q, x0, float(r), cfg) for r in r_grid]
    return RadialProfile(r_grid, np.array(vals), provenance="q_profile")


# ---------------------------------------------------------------------------
# Growth condition q0(r) <= C log^{n-1}(1/r)
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class GrowthCheck:
    holds: bool
    C_estimate: float
    slope: float
    ratios: np.ndarray
    log_inv_r: np.ndarray


def log_growth_check(profile: RadialProfile, n: int,
                     slope_tol: float = 0.01) -> GrowthCheck:
    """Trend test for boundedness of q0(r) / log^{n-1}(1/r) along the grid.

    The ratio is regressed against log(1/r); `holds` means no upward trend
    (slope below `slope_tol` * max(1, median ratio)).
    """
    if profile.r_min > 0.1:
        raise InconclusiveError(
            "profile does not reach small radii (min node > 0.1)")
    mask = profile.radii <= 0.5
    r = profile.radii[mask]
    v = profile.values[mask]
    L = np.log(1.0 / r)
    ratios = v / L ** (n - 1)
    if not np.isfinite(ratios).all():
        return GrowthCheck(False, math.inf, math.inf, ratios, L)
    slope = float(np.polyfit(L, ratios, 1)[0])
    scale = max(1.0, float(np.median(ratios)))
    holds = slope <= slope_tol * scale
    return GrowthCheck(holds=holds, C_estimate=float(np.max(ratios)),
                       slope=slope, ratios=ratios, log_inv_r=L)


# ---------------------------------------------------------------------------
# Finite mean oscillation at a point
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class FmoReport:
    x0: np.ndarray
    epsilons: np.ndarray
    oscillations: np.ndarray
    limsup_estimate: float
    is_fmo: str                    # 'yes' | 'no' | 'inconclusive'
    epsilon0: float | None
    slope_rel: float


def _segmented_integral(f, lo, hi, breaks, cfg):
    """Sum of improper integrals of f over [lo, hi] split at breakpoints.

    Returns +inf if any segment diverges.
    """
    edges = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        out = improper_quad(f, a, b, cfg.abs_tol, cfg.rel_tol,
                            cfg.divergence_threshold)
        if out.diverged_at is not None:
            return math.inf
        total += out.value
    return total


def _ball_mean_radial(q, eps, n, cfg):
    """(1/(Omega_n eps^n)) * integral of Q over B(0, eps), exact in 1-d.

    Substituting t = eps * u keeps the integrand O(Q) so the absolute
    quadrature tolerance is not amplified by eps^{-n}.
    """
    def f(u):
        return q.eval_radial(eps * u) * u ** (n - 1)
    breaks = [b / eps for b in q.breakpoints() if 0 < b < eps]
    total = _segmented_integral(f, 0.0, 1.0, breaks, cfg)
    return math.inf if math.isinf(total) else total * n


def _ball_dev_radial(q, eps, n, mean, cfg):
    def f(u):
        return np.abs(q.eval_radial(eps * u) - mean) * u ** (n - 1)
    breaks = [b / eps for b in q.breakpoints() if 0 < b < eps]
    total = _segmented_integral(f, 0.0, 1.0, breaks, cfg)
    return math.inf if math.isinf(total) else total * n


def fmo_oscillation(q: QField, x0, eps_grid, cfg: RunConfig | None = None,
                    n: int | None = None) -> FmoReport:
    """Mean absolute deviation from the ball average over shrinking balls.

    A finite limsup is undecidable from finitely many radii; classification
    is by the least-squares slope of oscillation against log(1/eps):
    relative slope < 0.02 -> yes, > 0.1 -> no, otherwise inconclusive.
    """
    cfg = cfg or RunConfig()
    x0 = as_point(x0)
    n = n or len(x0)
    eps = np.asarray(eps_grid, dtype=float)
    if len(eps) < 3 or np.any(np.diff(eps) >= 0) or eps[-1] <= 0:
        raise ValueError("eps grid must be decreasing, positive, length >= 3")
    if np.linalg.norm(x0) + eps[0] >= 1.0:
        raise ValueError("largest ball leaves the unit ball")

    osc = np.empty_like(eps)
    centered = float(np.linalg.norm(x0)) == 0.0
    for i, e in enumerate(eps):
        if centered:
            mean = _ball_mean_radial(q, e, n, cfg)
            osc[i] = math.inf if math.isinf(mean) else \
                _ball_dev_radial(q, e, n, mean, cfg)
        else:
            rng = cfg.rng(f"fmo:{e}")
            dirs = _sphere_dirs(rng, cfg.sample_count, len(x0))
            radii = e * rng.uniform(size=cfg.sample_count) ** (1.0 / len(x0))
            vals = _mc_values(q, x0 + radii[:, None] * dirs, rng, cfg.mc_retry)
            osc[i] = float(np.mean(np.abs(vals - np.mean(vals))))

    finite = np.isfinite(osc)
    if not finite.all():
        return FmoReport(x0, eps, osc, math.inf, "no", None, math.inf)
    L = np.log(1.0 / eps)
    slope = float(np.polyfit(L, osc, 1)[0])
    rel = slope / (float(np.mean(osc)) + 1e-12)
    if rel < 0.02:
        verdict = "yes"
    elif rel > 0.1:
        verdict = "no"
    else:
        verdict = "inconclusive"
    limsup = float(np.max(osc[len(osc) // 2:]))

    epsilon0 = None
    if verdict == "yes":
        for e in eps:
            if math.isfinite(pr7_integral(q, float(e), n, cfg)):
                epsilon0 = float(e)
                break
    return FmoReport(x0=x0, epsilons=eps, oscillations=osc,
                     limsup_estimate=limsup, is_fmo=verdict,
                     epsilon0=epsilon0, slope_rel=rel)


def pr7_integral(q: QField, epsilon0: float, n: int,
                 cfg: RunConfig | None = None) -> float:
    """Integral of Q(x) / (|x| log(1/|x|))^n over B(0, epsilon0).

    Radial reduction in s = log(1/t); divergence at the origin is reported
    in-band as +inf.
    """
    cfg = cfg or RunConfig()
    if not 0.0 < epsilon0 < 1.0:
        raise ValueError("need 0 < epsilon0 < 1")
    omega = constants(n).omega
    s0 = math.log(1.0 / epsilon0)

    def g(s):
        return q.eval_radial(np.exp(-s)) * s ** (-float(n))

    total = 0.0
    windows: list = []
    lo = s0
    # e^{-s} underflows past s ~ 745; windows stop there and the tail is
    # settled by the decay trend
    while lo < 700.0:
        hi = min(2.0 * lo, 700.0)
        out = improper_quad(g, lo, hi, cfg.abs_tol, cfg.rel_tol,
                            cfg.divergence_threshold)
        if out.diverged_at is not None:
            return math.inf
        windows.append(out.value)
        total += out.value
        if len(windows) > 1 and windows[-1] >= windows[-2] and \
                total > cfg.divergence_threshold:
            return math.inf
        if windows[-1] <= max(cfg.abs_tol, cfg.rel_tol * abs(total)):
            return omega * total
        lo = hi
    # windows never became negligible; extrapolate only on clear decay
    if len(windows) > 1 and windows[-2] > 0 and \
            windows[-1] < 0.95 * windows[-2]:
        ratio = windows[-1] / windows[-2]
        return omega * (total + windows[-1] * ratio / (1 - ratio))
    return math.inf
