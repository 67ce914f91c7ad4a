"""Injectivity-radius lower bounds and the constructive sharpness pipeline.

The bound chain: a spherical-cap modulus constant C_n (pinned offline by a
discrete-modulus oracle, see scripts/derive_cap_constants.py) integrates to
C_n' = C_n log(sqrt 3); combining with the growth hypothesis
int Q psi^n dm <= C * I^{n-alpha} forces every injectivity-defect radius l
to satisfy I(l, r_anchor) <= (C / C_n')^{1/alpha}, so

    delta = sup { r : I(r, r_anchor) >= (C / C_n')^{1/alpha} }

is a certified lower bound whenever I diverges at the origin.  When I
converges instead, the truncated-field radial stretch composed with a
winding map of minimal feasible order realizes non-injectivity in B(0,
delta); the winding order is chosen from the image geometry because an
axis that clears the image ball admits same-image pairs only where the
ball subtends an angle of at least 2 pi / k.
"""

from __future__ import annotations

import dataclasses
import importlib.resources
import json
import math

import numpy as np

from .config import RunConfig
from .errors import InconclusiveError, NotApplicableError
from .geometry import LOG_SQRT3, constants
from .integrals import (DivergenceClass, classify_divergence, integrate_I,
                        psi_from_field, psi_fmo, upper_anchor)
from .mappings import (Composition, RadialStretch, Winding, WindingAxis,
                       Witness, axis_clearance, noninjectivity_witness,
                       radial_stretch_from_q, verify_ring_inequality)
from .qfield import (FmoReport, QField, fmo_oscillation, log_growth_check,
                     pr7_integral, q_profile)

_DEFAULT_EPS_GRID = 0.5 ** np.arange(3, 13)


# ---------------------------------------------------------------------------
# Cap constant
# ---------------------------------------------------------------------------

def zonal_cap_constant(n: int) -> float:
    """Extremal zonal density value for the antipodal two-point family on
    S^{n-1} with exponent n: omega_{n-2} / J^{n-1}, where
    J = int_0^pi sin(theta)^{-(n-2)/(n-1)} d theta (a Beta integral)."""
    if n < 2:
        raise ValueError("need n >= 2")
    a = -(n - 2) / (n - 1)
    J = math.sqrt(math.pi) * math.gamma((a + 1) / 2) / math.gamma(a / 2 + 1)
    omega_low = 2.0 * math.pi ** ((n - 1) / 2.0) / math.gamma((n - 1) / 2.0)
    return omega_low / J ** (n - 1)


def _load_cap_table():
    try:
        data = importlib.resources.files("ringinj").joinpath(
            "data/cap_constants.json").read_text(encoding="utf-8")
        return json.loads(data)
    except (FileNotFoundError, ModuleNotFoundError):
        return {"constants": {}}


def cap_constant(n: int, cfg: RunConfig | None = None):
    """(value, provenance) for the spherical-cap constant C_n."""
    cfg = cfg or RunConfig()
    if cfg.cap_constant is not None:
        return float(cfg.cap_constant), "override"
    table = _load_cap_table()
    entry = table.get("constants", {}).get(str(int(n)))
    if entry is not None:
        return float(entry["pinned"]), "pinned-table"
    return 0.5 * zonal_cap_constant(n), "zonal-fallback"


@dataclasses.dataclass
class BoundParameters:
    """Constants of the quantitative chain."""

    C: float
    alpha: float
    cap_constant: float
    cap_integrated: float = dataclasses.field(init=False)

    def __post_init__(self):
        if self.C <= 0 or self.alpha <= 0 or self.cap_constant <= 0:
            raise ValueError("C, alpha and cap_constant must be positive")
        self.cap_integrated = self.cap_constant * LOG_SQRT3

    @property
    def I_target(self) -> float:
        return (self.C / self.cap_integrated) ** (1.0 / self.alpha)


def default_parameters(n: int, psi_kind: str, q: QField,
                       cfg: RunConfig | None = None,
                       eps0: float | None = None,
                       pr7_value: float | None = None) -> BoundParameters:
    """Chain constants per weight kind.

    canonical: the Fubini identity gives C = omega_{n-1}, alpha = n - 1.
    fmo: C is the rescaled Prop-4.2 integral pr7 / eps0^n, alpha = n.
    """
    cfg = cfg or RunConfig()
    cap, _src = cap_constant(n, cfg)
    if psi_kind == "canonical":
        return BoundParameters(C=constants(n).omega, alpha=float(n - 1),
                               cap_constant=cap)
    if psi_kind == "fmo":
        if eps0 is None or pr7_value is None or not math.isfinite(pr7_value):
            raise ValueError(
                "fmo parameters need a finite pr7 integral and its epsilon0")
        return BoundParameters(C=pr7_value / eps0 ** n, alpha=float(n),
                               cap_constant=cap)
    raise ValueError(f"unknown psi kind {psi_kind!r}")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class InjectivityReport:
    n: int
    q_summary: str
    psi_kind: str
    divergence: DivergenceClass
    params: BoundParameters
    I_target: float
    delta: float
    method: str                       # canonical | log_growth | fmo
    caveats: list
    details: dict
    growth: object | None = None
    fmo: FmoReport | None = None
    witnesses: list = dataclasses.field(default_factory=list)
    ring_checks: list = dataclasses.field(default_factory=list)


def _bisect_tail_radius(I_of, target: float, anchor: float,
                        r_floor: float = 1e-300, tol_log: float = 1e-9):
    """Largest r with I(r, anchor) >= target, bisecting in log r.

    I_of(r) must be nonincreasing in r with I -> infinity as r -> 0.
    Returns (delta, bracket) or (None, reason) when the target is
    unreachable above r_floor.
    """
    log_floor = max(math.log(r_floor), -690.0)
    log_hi = math.log(anchor) - 1e-12
    if I_of(math.exp(log_hi)) >= target:
        return math.exp(log_hi), {"note": "target met at the anchor"}
    log_lo = math.log(anchor) - 1.0
    while I_of(math.exp(max(log_lo, log_floor))) < target:
        if log_lo <= log_floor:
            return None, f"target unreachable above r = {math.exp(log_floor)}"
        log_lo = math.log(anchor) + 2.0 * (log_lo - math.log(anchor))
    log_lo = max(log_lo, log_floor)
    while log_hi - log_lo > tol_log:
        mid = 0.5 * (log_lo + log_hi)
        if I_of(math.exp(mid)) >= target:
            log_lo = mid
        else:
            log_hi = mid
    delta = math.exp(log_lo)
    bracket = {
        "log_delta": log_lo,
        "I_at_delta": I_of(delta),
        "I_above_delta": I_of(min(delta * (1.0 + 1e-6), anchor)),
    }
    return delta, bracket


def estimate_delta(q: QField, n: int, psi_kind: str,
                   params: BoundParameters, cfg: RunConfig | None = None,
                   eps0: float | None = None) -> InjectivityReport:
    """Invert the bound chain into an explicit radius.

    Divergent controlling integral: monotone bisection in log r solves
    I(delta, anchor) = I_target.  Convergent: delta = 0 with the sharpness
    caveat.  Inconclusive divergence yields an inconclusive report, never a
    silent delta.
    """
    cfg = cfg or RunConfig()
    divergence = classify_divergence(q, n, cfg)
    target = params.I_target
    caveats: list = []
    details: dict = {"cap_provenance": cap_constant(n, cfg)[1]}

    if psi_kind == "fmo":
        if eps0 is None:
            raise ValueError("fmo weight needs epsilon0")
        psi = psi_fmo(eps0, n)
        anchor = 1.0
        details["eps0"] = eps0
    else:
        psi = psi_from_field(q, n, 0.0, 1.0)
        anchor = upper_anchor(q, n, cfg)
        if anchor < 1.0:
            caveats.append(
                f"tail integral capped at r_max={anchor} (integrand singular "
                "at the unit sphere); finiteness at 1 is implicit in the "
                "bound chain")
    details["anchor"] = anchor

    report = InjectivityReport(
        n=n, q_summary=q.spec_string(), psi_kind=psi_kind,
        divergence=divergence, params=params, I_target=target, delta=0.0,
        method={"canonical": "canonical", "fmo": "fmo"}[psi_kind],
        caveats=caveats, details=details)

    if divergence.verdict == "inconclusive":
        caveats.append("divergence classification inconclusive; no bound")
        return report
    if divergence.verdict == "convergent":
        caveats.append("controlling integral converges at 0; the divergence "
                       "condition is sharp and a non-injective construction "
                       "exists (see the sharpness pipeline)")
        return report

    def I_of(r):
        res = integrate_I(psi, r, anchor, cfg)
        return res.value

    probe = I_of(anchor * 0.5)
    if math.isinf(probe):
        # even the capped tail is infinite: fall back to the configured cap
        report.delta = cfg.r_cap
        caveats.append(
            f"I(., {anchor}) is infinite for every lower endpoint; "
            f"delta reported as the configured r_cap={cfg.r_cap}, "
            "not as an optimized bound")
        return report

    r_floor = max(q.coverage()[0] * (1 + 1e-9), 1e-300) \
        if psi_kind == "canonical" else 1e-300
    delta, bracket = _bisect_tail_radius(I_of, target, anchor,
                                         r_floor=r_floor)
    if delta is None:
        caveats.append(f"bisection floor reached: {bracket}")
        return report
    if psi_kind == "fmo":
        details["delta_lemma"] = delta
        delta = eps0 * delta
        caveats.append("delta rescaled by epsilon0 per the fmo reduction")
    report.delta = delta
    details["bracket"] = bracket
    return report


def corollary_report(q: QField, n: int,
                     cfg: RunConfig | None = None) -> InjectivityReport:
    """Radius bound under the logarithmic growth condition
    q0(r) <= C log^{n-1}(1/r)."""
    cfg = cfg or RunConfig()
    grid = 0.5 ** np.arange(1, 18)
    profile = q_profile(q, np.zeros(n), grid, cfg)
    growth = log_growth_check(profile, n)
    if not growth.holds:
        raise NotApplicableError(
            "growth check failed: q0(r)/log^{n-1}(1/r) trends upward "
            f"(slope {growth.slope:.3g})")
    params = default_parameters(n, "canonical", q, cfg)
    report = estimate_delta(q, n, "canonical", params, cfg)
    report.method = "log_growth"
    report.growth = growth
    report.details["growth_C_estimate"] = growth.C_estimate
    return report


def fmo_report(q: QField, n: int,
               cfg: RunConfig | None = None) -> InjectivityReport:
    """Radius bound for fields of finite mean oscillation at the origin."""
    cfg = cfg or RunConfig()
    rep = fmo_oscillation(q, np.zeros(n), _DEFAULT_EPS_GRID, cfg)
    if rep.is_fmo == "inconclusive":
        raise InconclusiveError(
            f"oscillation trend ambiguous (relative slope {rep.slope_rel:.3g})")
    if rep.is_fmo != "yes":
        raise NotApplicableError("field is not of finite mean oscillation "
                                 "at the origin on the probe grid")
    if rep.epsilon0 is None:
        raise NotApplicableError(
            "no epsilon0 with finite Prop-4.2 integral found on the grid")
    pr7 = pr7_integral(q, rep.epsilon0, n, cfg)
    params = default_parameters(n, "fmo", q, cfg, eps0=rep.epsilon0,
                                pr7_value=pr7)
    report = estimate_delta(q, n, "fmo", params, cfg, eps0=rep.epsilon0)
    report.method = "fmo"
    report.fmo = rep
    report.details["pr7_integral"] = pr7
    return report


# ---------------------------------------------------------------------------
# Sharpness construction
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class SharpnessPlan:
    delta: float
    k: int
    K: float
    q_tilde: QField
    sigma: float
    axis: WindingAxis
    domain_radius: float
    composed: Composition
    stretch: RadialStretch
    witness: Witness
    ring_checks: list
    clearance: float
    normalize_by_K: bool
    caveats: list


def _feasible_order(c: float, D: float, normalized: bool,
                    k_cap: int = 1_000_000):
    """Smallest winding order k admitting a same-image pair inside the
    image ball of the truncation radius.

    c is the outer log-gap I_q(delta, r_dom); the pair ball has radius
    e^{-c} (plain truncation) or e^{-kc} (outer part divided by K), and the
    axis sits at distance D > 1 from the origin.
    """
    frac = 0.95
    if normalized:
        for k in range(3, 65):
            if D * math.sin(math.pi / k) < frac * math.exp(-k * c):
                return k
        return None
    w_max = frac * math.exp(-c)
    if w_max >= D:
        return 3
    arg = w_max / D
    k = max(3, math.ceil(math.pi / math.asin(arg)))
    return k if k <= k_cap else None


def _q_min_inner(q: QField, delta: float) -> float:
    """Infimum of the radial values on (0, delta] for catalog fields."""
    if q.kind == "const":
        return q.value
    if q.kind == "logpow":
        return float(q.eval_radial(delta))  # decreasing in r
    if q.kind == "powr":
        if q.power < 0:
            return float(q.eval_radial(delta))
        return 0.0 if q.power > 0 else q.coeff
    if q.kind == "table":
        mask = q.profile.radii <= delta
        vals = q.profile.values[mask]
        return float(vals.min()) if len(vals) else float("inf")
    inner = q.inner
    rest = _q_min_inner(q.outer, delta) if q.delta < delta else math.inf
    return min(inner, rest)


def build_sharpness(q: QField, delta: float, n: int,
                    cfg: RunConfig | None = None) -> SharpnessPlan:
    """Construct the non-injective local ring homeomorphism for a
    convergent field: truncated dilatation below delta, radial stretch,
    winding map about an axis clear of the image ball, verified witness.

    With cfg.normalize_by_K (default) the outer part of the truncation is
    divided by K = k^{n-1}, so the composition is a ring Q-map rather than
    a ring KQ-map; feasibility then forces the certified domain down to a
    ball barely above delta, which is reported and caveated.
    """
    cfg = cfg or RunConfig()
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    verdict = classify_divergence(q, n, cfg).verdict
    if verdict == "divergent":
        raise NotApplicableError(
            "controlling integral diverges: the field admits a positive "
            "injectivity radius and no sharpness example")
    if verdict == "inconclusive":
        raise InconclusiveError("divergence classification inconclusive")
    if _q_min_inner(q, delta) < 1.0 - 1e-12:
        raise ValueError(
            "need Q >= 1 on (0, delta] so the composed map's ring function "
            "is dominated by Q")

    D = cfg.axis_distance
    if D <= 1.0:
        raise ValueError("axis distance must exceed the image ball radius 1")
    caveats: list = []
    psi_q = psi_from_field(q, n, 0.0, 1.0)
    r_hi = min(upper_anchor(q, n, cfg), cfg.r_cap)
    if delta >= r_hi:
        raise ValueError(f"delta must stay below the domain cap {r_hi}")
    if r_hi < upper_anchor(q, n, cfg):
        caveats.append(f"stretch anchored at r_cap={r_hi} to keep the image "
                       "geometry in floating-point range")

    # scan certified-domain candidates from large to small until a winding
    # order is feasible
    chosen = None
    for gamma in np.linspace(1.0, 0.0, 25) ** 2:
        r_dom = max(delta * (r_hi / delta) ** gamma, delta * 1.002)
        c = integrate_I(psi_q, delta, r_dom, cfg).value
        if not math.isfinite(c):
            continue
        if cfg.winding_order is not None:
            k = cfg.winding_order
            sigma_k = math.exp(-(k * c if cfg.normalize_by_K else c))
            if D * math.sin(math.pi / k) >= 0.95 * sigma_k:
                continue
        else:
            k = _feasible_order(c, D, cfg.normalize_by_K)
            if k is None:
                continue
        chosen = (r_dom, c, int(k))
        break
    if chosen is None:
        raise ValueError(
            "no feasible winding order: axis clearance plus the image "
            "geometry leave no same-image pair inside B(0, delta); try a "
            "smaller axis distance or disable normalize_by_K")
    r_dom, c_outer, k = chosen
    K = float(k) ** (n - 1)

    outer = q.scaled(1.0 / K) if cfg.normalize_by_K else q
    q_tilde = QField.truncated(1.0 / K, delta, outer)
    stretch = radial_stretch_from_q(q_tilde, n, cfg, anchor=r_dom,
                                    r_lo=min(delta * 1e-3, 1e-4))
    sigma = float(stretch.rho(delta))

    axis = WindingAxis.default(n, D)
    clearance = axis_clearance(axis, np.zeros(n), 1.0)
    if clearance <= 0.0:
        raise ValueError("axis placement failed to clear the image ball")
    wind = Winding(k=k, axis=axis, n=n)
    composed = Composition([wind, stretch])

    witness = noninjectivity_witness(composed, delta, cfg)
    if witness is None or witness.containment_radius >= delta or \
            witness.image_gap >= cfg.witness_tol:
        raise ValueError("constructed map failed to certify a witness "
                         f"inside B(0, {delta}); got {witness}")

    checks = []
    grid = sorted({0.3 * delta, 0.7 * delta, delta,
                   math.sqrt(delta * r_dom), 0.99 * r_dom})
    pairs = [(grid[i], grid[j]) for i in range(len(grid))
             for j in range(i + 1, len(grid))
             if grid[j] > grid[i] * (1 + 1e-9)]
    for r1, r2 in pairs:
        checks.append(("q_tilde",
                       verify_ring_inequality(stretch, q_tilde, r1, r2, n, cfg)))
        checks.append(("K*q_tilde",
                       verify_ring_inequality(stretch, q_tilde.scaled(K),
                                              r1, r2, n, cfg)))

    if cfg.normalize_by_K:
        caveats.append(
            f"composed map is a ring Q-homeomorphism on B(0, {r_dom:.6g}); "
            "dividing the outer field by K shrinks the certifiable domain "
            "to just above delta")
    else:
        caveats.append(
            f"composed map is a ring (K*Q)-homeomorphism with K={K:g} on "
            f"B(0, {r_dom:.6g}); pass normalize_by_K for the ring-Q variant")

    return SharpnessPlan(delta=delta, k=k, K=K, q_tilde=q_tilde, sigma=sigma,
                         axis=axis, domain_radius=r_dom, composed=composed,
                         stretch=stretch, witness=witness, ring_checks=checks,
                         clearance=clearance,
                         normalize_by_K=cfg.normalize_by_K, caveats=caveats)
