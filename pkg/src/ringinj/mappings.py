"""Concrete mappings: radial stretches, winding maps, the planar
exponential, their compositions, ring-inequality verification and
non-injectivity witnesses.

A radial stretch stores (log r, log rho) nodes; log-log interpolation is
exact on power laws, and every quantitative check goes through the
stretch's defining integral rather than the tabulation.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .config import RunConfig
from .errors import UnsupportedMapError
from .geometry import as_point, chordal_distance, constants
from .integrals import integrate_I, psi_from_field, upper_anchor
from .qfield import QField

_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Map kinds
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class RadialStretch:
    """x -> (x/|x|) rho(|x|) with tabulated monotone rho, rho(anchor) = 1."""

    n: int
    log_radii: np.ndarray
    log_rho: np.ndarray
    anchor: float
    source: QField | None = None   # field whose profile defined rho

    kind = "radial_stretch"

    def __post_init__(self):
        if np.any(np.diff(self.log_radii) <= 0):
            raise ValueError("stretch nodes must be strictly increasing")
        if np.any(np.diff(self.log_rho) <= 0):
            raise ValueError("rho must be strictly increasing")

    def log_rho_at(self, r):
        r = np.asarray(r, dtype=float)
        lr = np.log(r)
        lo, hi = self.log_radii[0], self.log_radii[-1]
        if np.any(lr > hi + 1e-12):
            raise ValueError(f"radius beyond stretch domain (max {math.exp(hi)})")
        # linear continuation below the grid matches the exact power law of
        # constant fields (the only ones evaluated there by construction)
        slope0 = (self.log_rho[1] - self.log_rho[0]) / \
                 (self.log_radii[1] - self.log_radii[0])
        out = np.interp(lr, self.log_radii, self.log_rho)
        below = lr < lo
        if np.any(below):
            out = np.where(below, self.log_rho[0] + slope0 * (lr - lo), out)
        return float(out) if out.ndim == 0 else out

    def rho(self, r):
        return np.exp(self.log_rho_at(r))

    def rho_inverse(self, w):
        w = np.asarray(w, dtype=float)
        lw = np.log(w)
        lo, hi = self.log_rho[0], self.log_rho[-1]
        if np.any(lw > hi + 1e-12):
            raise ValueError("value beyond the image of the stretch")
        slope0 = (self.log_radii[1] - self.log_radii[0]) / \
                 (self.log_rho[1] - self.log_rho[0])
        out = np.interp(lw, self.log_rho, self.log_radii)
        below = lw < lo
        if np.any(below):
            out = np.where(below, self.log_radii[0] + slope0 * (lw - lo), out)
        out = np.exp(out)
        return float(out) if out.ndim == 0 else out

    def apply(self, x):
        x = as_point(x)
        r = float(np.linalg.norm(x))
        if r == 0.0:
            return np.zeros_like(x)
        return x * (float(self.rho(r)) / r)

    def log_gap_exact(self, r1: float, r2: float, cfg=None) -> float:
        """log(rho(r2)/rho(r1)) via the defining integral (not the table)."""
        if self.source is None:
            return float(self.log_rho_at(r2) - self.log_rho_at(r1))
        res = integrate_I(psi_from_field(self.source, self.n, 0.0, self.anchor),
                          r1, r2, cfg)
        return res.value


@dataclasses.dataclass
class WindingAxis:
    """Branch set of a winding map: the affine subspace through `point`
    orthogonal to the rotation plane spanned by `plane` (2 x n)."""

    point: np.ndarray
    plane: np.ndarray

    def __post_init__(self):
        self.point = as_point(self.point)
        self.plane = np.asarray(self.plane, dtype=float)
        if self.plane.shape != (2, len(self.point)):
            raise ValueError("rotation plane must be a 2 x n matrix")
        gram = self.plane @ self.plane.T
        if not np.allclose(gram, np.eye(2), atol=1e-10):
            raise ValueError("rotation plane vectors must be orthonormal")

    @classmethod
    def from_line(cls, point, direction) -> "WindingAxis":
        """n = 3 only: axis line {point + t direction}."""
        point = as_point(point)
        if len(point) != 3:
            raise ValueError("axis lines are for n = 3; pass a plane otherwise")
        d = as_point(direction)
        d = d / np.linalg.norm(d)
        # complete to an orthonormal frame; rotation plane is d-orthogonal
        trial = np.eye(3)[np.argmin(np.abs(d))]
        p = trial - (trial @ d) * d
        p /= np.linalg.norm(p)
        q = np.cross(d, p)
        return cls(point=point, plane=np.vstack([p, q]))

    @classmethod
    def default(cls, n: int, distance: float) -> "WindingAxis":
        """Axis at `distance` along e1, rotating the (e1, e2) plane."""
        point = np.zeros(n)
        point[0] = distance
        plane = np.zeros((2, n))
        plane[0, 0] = 1.0
        plane[1, 1] = 1.0
        return cls(point=point, plane=plane)

    def coords(self, x):
        """(c1, c2, rest) with x = point + c1 p + c2 q + rest."""
        w = as_point(x) - self.point
        c1 = float(w @ self.plane[0])
        c2 = float(w @ self.plane[1])
        rest = w - c1 * self.plane[0] - c2 * self.plane[1]
        return c1, c2, rest


@dataclasses.dataclass
class Winding:
    """Angle multiplication by k about an axis; k-to-1, distortion k^{n-1}."""

    k: int
    axis: WindingAxis
    n: int

    kind = "winding"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ValueError("winding order must be an integer >= 2")
        self.k = int(self.k)
        if len(self.axis.point) != self.n:
            raise ValueError("axis dimension mismatch")

    def apply(self, x):
        c1, c2, rest = self.axis.coords(x)
        s = math.hypot(c1, c2)
        theta = math.atan2(c2, c1)
        kt = self.k * theta
        return (self.axis.point + rest
                + s * math.cos(kt) * self.axis.plane[0]
                + s * math.sin(kt) * self.axis.plane[1])


@dataclasses.dataclass
class Exp2D:
    """z -> exp(m z) on the unit disk, identified with R^2."""

    m: int
    n: int = 2

    kind = "exp2d"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("exponent must be an integer >= 1")
        self.m = int(self.m)

    def apply(self, x):
        x = as_point(x)
        if len(x) != 2:
            raise ValueError("exp2d acts on the plane")
        r = math.exp(self.m * x[0])
        return np.array([r * math.cos(self.m * x[1]),
                         r * math.sin(self.m * x[1])])


@dataclasses.dataclass
class Composition:
    """maps[0] o maps[1] o ... (rightmost applied first)."""

    maps: list

    kind = "composition"

    def __post_init__(self):
        if not self.maps:
            raise ValueError("empty composition")
        dims = {m.n for m in self.maps}
        if len(dims) != 1:
            raise ValueError("composed maps must share a dimension")

    @property
    def n(self):
        return self.maps[0].n

    def apply(self, x):
        y = as_point(x)
        for m in reversed(self.maps):
            y = m.apply(y)
        return y


MapSpec = RadialStretch | Winding | Exp2D | Composition


def map_eval(f: MapSpec, x) -> np.ndarray:
    """Image point; compositions apply right-to-left."""
    x = as_point(x)
    r = float(np.linalg.norm(x))
    if isinstance(f, RadialStretch):
        if r > f.anchor * (1 + 1e-12):
            raise ValueError(f"point outside stretch domain B(0, {f.anchor})")
    elif r >= 1.0 and not isinstance(f, Winding):
        raise ValueError("maps are defined on the open unit ball")
    return f.apply(x)


# ---------------------------------------------------------------------------
# Stretch construction
# ---------------------------------------------------------------------------

def radial_stretch_from_q(q: QField, n: int, cfg: RunConfig | None = None,
                          anchor: float | None = None,
                          r_lo: float | None = None) -> RadialStretch:
    """Stretch with rho(r) = exp(-I(r, anchor)) tabulated on a log grid.

    The anchor defaults to 1 when the canonical integrand is integrable
    there and to the configured cap otherwise; rho(anchor) = 1 either way.
    """
    cfg = cfg or RunConfig()
    if anchor is None:
        anchor = upper_anchor(q, n, cfg)
    cov_lo, cov_hi = q.coverage()
    if anchor > cov_hi:
        raise ValueError(f"anchor {anchor} beyond field coverage {cov_hi}")
    if r_lo is None:
        r_lo = max(1e-4, cov_lo * (1 + 1e-9)) if cov_lo > 0 else 1e-4
    if not 0 < r_lo < anchor:
        raise ValueError("need 0 < r_lo < anchor")

    grid = np.exp(np.linspace(math.log(r_lo), math.log(anchor),
                              cfg.profile_nodes))
    extra = [b for b in q.breakpoints() if r_lo < b < anchor]
    grid = np.unique(np.concatenate([grid, np.array(extra)]))
    grid[-1] = anchor

    psi = psi_from_field(q, n, 0.0, anchor)
    seg = np.empty(len(grid) - 1)
    for i in range(len(grid) - 1):
        res = integrate_I(psi, float(grid[i]), float(grid[i + 1]), cfg)
        if not math.isfinite(res.value):
            raise ValueError(
                f"defining integral diverges inside ({grid[i]}, {grid[i+1]}); "
                "cannot build a stretch from this field")
        seg[i] = res.value
    log_rho = np.concatenate([-np.cumsum(seg[::-1])[::-1], [0.0]])
    if np.any(np.diff(log_rho) <= 0):
        raise ValueError("field produced a non-increasing stretch profile")
    return RadialStretch(n=n, log_radii=np.log(grid), log_rho=log_rho,
                         anchor=float(anchor), source=q)


# ---------------------------------------------------------------------------
# Ring inequality check
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class RingCheck:
    r1: float
    r2: float
    lhs_modulus: float
    rhs_bound: float
    passed: bool
    slack: float


def verify_ring_inequality(f: MapSpec, q: QField, r1: float, r2: float,
                           n: int, cfg: RunConfig | None = None) -> RingCheck:
    """Compare the exact image-ring modulus of a radial stretch with the
    bound omega_{n-1} / I^{n-1}(r1, r2) computed from q.

    Radial maps send spheres to spheres, so the left side is exact:
    omega / (log(rho(r2)/rho(r1)))^{n-1}, with the log-gap evaluated through
    the stretch's defining integral.
    """
    cfg = cfg or RunConfig()
    if not isinstance(f, RadialStretch):
        raise UnsupportedMapError(
            "ring verification is defined for radial stretches only")
    if not 0.0 < r1 < r2 <= f.anchor * (1 + 1e-12):
        raise ValueError("need 0 < r1 < r2 within the stretch domain")
    omega = constants(n).omega
    gap = f.log_gap_exact(r1, r2, cfg)
    lhs = omega * gap ** (1 - n)
    I_q = integrate_I(psi_from_field(q, n, 0.0, 1.0), r1, r2, cfg).value
    rhs = 0.0 if math.isinf(I_q) else omega * I_q ** (1 - n)
    tol = 10.0 * cfg.rel_tol * rhs + 1e-12
    return RingCheck(r1=r1, r2=r2, lhs_modulus=lhs, rhs_bound=rhs,
                     passed=bool(lhs <= rhs + tol), slack=rhs - lhs)


# ---------------------------------------------------------------------------
# Winding maps and witnesses
# ---------------------------------------------------------------------------

def winding_map(k: int, axis: WindingAxis, n: int) -> Winding:
    return Winding(k=k, axis=axis, n=n)


def axis_clearance(axis: WindingAxis, ball_center, ball_radius: float) -> float:
    """Distance from the branch set to the ball (0 when they meet)."""
    c1, c2, _rest = axis.coords(as_point(ball_center))
    return max(math.hypot(c1, c2) - ball_radius, 0.0)


def exp2d_map(m: int) -> Exp2D:
    return Exp2D(m=m)


@dataclasses.dataclass
class Witness:
    """Two domain points with (numerically) identical images."""

    x1: np.ndarray
    x2: np.ndarray
    image_gap: float
    containment_radius: float

    def __post_init__(self):
        if np.array_equal(self.x1, self.x2):
            raise ValueError("witness points must differ")


def _winding_pair_in_ball(wind: Winding, radius: float):
    """Same-image pair for a winding map inside B(0, radius), or None.

    Points at axis angles theta_0 +/- pi/k (measured around the branch
    point closest to the origin) coincide after angle multiplication; such
    a pair fits in the ball iff the ball reaches within axis distance
    s sin(pi/k) of the axis.
    """
    axis = wind.axis
    origin = np.zeros(wind.n)
    c1, c2, _rest = axis.coords(origin)
    d0 = math.hypot(c1, c2)          # distance from the origin to the axis
    phi = math.pi / wind.k
    # closest branch point; the origin sits at plane angle theta_o from it
    foot = origin - c1 * axis.plane[0] - c2 * axis.plane[1]
    theta_o = math.atan2(c2, c1)
    if d0 < radius * (1.0 - 1e-9):
        # axis meets the ball: small circles around the foot stay inside
        s = 0.45 * (radius - d0)
    else:
        if d0 * math.sin(phi) >= 0.98 * radius:
            return None                      # ball subtends less than 2pi/k
        w_target = 0.5 * (d0 * math.sin(phi) + 0.98 * radius)
        s = d0 * math.cos(phi) - math.sqrt(
            max(w_target ** 2 - (d0 * math.sin(phi)) ** 2, 0.0))
        if s <= 0.0:
            return None
    pts = []
    for sign in (+1.0, -1.0):
        ang = theta_o + sign * phi
        pts.append(foot
                   + s * math.cos(ang) * axis.plane[0]
                   + s * math.sin(ang) * axis.plane[1])
    return pts[0], pts[1]


def _random_pair_search(f: MapSpec, radius: float, cfg: RunConfig):
    """Seeded pair sampling with local refinement on the image gap.

    Pairs closer than 1e-4 * radius in the domain are ignored so that mere
    continuity cannot masquerade as a witness.
    """
    rng = cfg.rng("witness")
    n = f.n
    sep_floor = 1e-4 * radius
    budget = min(cfg.sample_count, 2048)
    pts = rng.normal(size=(budget, n))
    pts *= (radius * 0.98 * rng.uniform(size=budget)[:, None] ** (1.0 / n)
            / np.linalg.norm(pts, axis=1)[:, None])
    images = np.array([f.apply(p) for p in pts])
    best = None
    for i in range(budget):
        d = np.linalg.norm(images - images[i], axis=1)
        d[i] = math.inf
        sep = np.linalg.norm(pts - pts[i], axis=1)
        d[sep < sep_floor] = math.inf
        j = int(np.argmin(d))
        if best is None or d[j] < best[0]:
            best = (float(d[j]), pts[i].copy(), pts[j].copy())
    if best is None or math.isinf(best[0]):
        return None
    gap, x1, x2 = best
    img1 = f.apply(x1)
    scale = 0.05 * radius
    for _ in range(40):
        cand2 = x2 + rng.normal(size=(64, n)) * scale
        keep = np.linalg.norm(cand2, axis=1) < radius
        if keep.any():
            cand2 = cand2[keep]
            d = np.linalg.norm(np.array([f.apply(p) for p in cand2]) - img1,
                               axis=1)
            sep = np.linalg.norm(cand2 - x1, axis=1)
            d[sep < sep_floor] = math.inf
            j = int(np.argmin(d))
            if d[j] < gap:
                gap, x2 = float(d[j]), cand2[j]
        scale *= 0.7
        if gap < cfg.witness_tol:
            break
    if gap < cfg.witness_tol:
        return Witness(x1=x1, x2=x2, image_gap=gap,
                       containment_radius=float(max(np.linalg.norm(x1),
                                                    np.linalg.norm(x2))))
    return None


def noninjectivity_witness(f: MapSpec, radius: float,
                           cfg: RunConfig | None = None) -> Witness | None:
    """Search B(0, radius) for two points with coinciding images.

    Analytic shortcuts: winding angle pairs (optionally pulled back through
    a preceding radial stretch) and the 2 pi i / m period of the planar
    exponential.  Absence of a witness is reported as None, never as a
    proof of injectivity.
    """
    cfg = cfg or RunConfig()
    if not 0.0 < radius <= 1.0:
        raise ValueError("need 0 < radius <= 1")

    if isinstance(f, Exp2D):
        period = _TWO_PI / f.m
        if period < radius:
            x1 = np.zeros(2)
            x2 = np.array([0.0, period])
        elif 0.5 * period < radius:
            x1 = np.array([0.0, -0.5 * period])
            x2 = np.array([0.0, 0.5 * period])
        else:
            return _random_pair_search(f, radius, cfg)
        gap = float(np.linalg.norm(f.apply(x1) - f.apply(x2)))
        return Witness(x1=x1, x2=x2, image_gap=gap,
                       containment_radius=float(max(np.linalg.norm(x1),
                                                    np.linalg.norm(x2))))

    if isinstance(f, Winding):
        pair = _winding_pair_in_ball(f, radius)
        if pair is not None:
            x1, x2 = pair
            gap = float(np.linalg.norm(f.apply(x1) - f.apply(x2)))
            return Witness(x1=x1, x2=x2, image_gap=gap,
                           containment_radius=float(max(np.linalg.norm(x1),
                                                        np.linalg.norm(x2))))
        return _random_pair_search(f, radius, cfg)

    if isinstance(f, Composition) and len(f.maps) == 2 and \
            isinstance(f.maps[0], Winding) and \
            isinstance(f.maps[1], RadialStretch):
        wind, stretch = f.maps
        image_radius = float(stretch.rho(radius))
        pair = _winding_pair_in_ball(wind, image_radius)
        if pair is not None:
            y1, y2 = pair
            w = float(np.linalg.norm(y1))
            r_dom = float(stretch.rho_inverse(w))
            x1 = y1 * (r_dom / w)
            x2 = y2 * (r_dom / w)
            gap = float(np.linalg.norm(f.apply(x1) - f.apply(x2)))
            if gap < cfg.witness_tol:
                return Witness(x1=x1, x2=x2, image_gap=gap,
                               containment_radius=float(
                                   max(np.linalg.norm(x1),
                                       np.linalg.norm(x2))))
        return _random_pair_search(f, radius, cfg)

    return _random_pair_search(f, radius, cfg)


# ---------------------------------------------------------------------------
# Equicontinuity probe
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class ProbeTable:
    radii: np.ndarray
    sup_chordal: np.ndarray      # cumulative over growing balls
    per_map: np.ndarray          # (len(family), len(radii)) sphere sups


def equicontinuity_probe(family, x0, radii, cfg: RunConfig | None = None) -> ProbeTable:
    """Chordal modulus-of-continuity table for a family of maps.

    For each probe radius s the table holds the supremum, over the family
    and over sampled |x - x0| <= s, of h(f(x), f(x0)); cumulative maxima
    over the sorted radii make the table monotone by construction.
    """
    cfg = cfg or RunConfig()
    family = list(family)
    if not family:
        raise ValueError("empty family")
    x0 = as_point(x0)
    radii = np.sort(np.asarray(radii, dtype=float))
    if radii[0] <= 0:
        raise ValueError("probe radii must be positive")
    n = family[0].n
    if len(x0) != n:
        raise ValueError("x0 dimension mismatch")
    count = max(64, min(1024, cfg.sample_count // 16))
    rng = cfg.rng("probe")
    dirs = rng.normal(size=(count, n))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]

    per_map = np.zeros((len(family), len(radii)))
    for mi, f in enumerate(family):
        f_x0 = f.apply(x0)
        for si, s in enumerate(radii):
            pts = x0 + s * dirs
            vals = [chordal_distance(f.apply(p), f_x0) for p in pts]
            per_map[mi, si] = max(vals)
    sup = np.maximum.accumulate(per_map.max(axis=0))
    return ProbeTable(radii=radii, sup_chordal=sup, per_map=per_map)


# ---------------------------------------------------------------------------
# CLI map-spec mini-language
# ---------------------------------------------------------------------------

def parse_mapspec(spec: str, n: int, cfg: RunConfig | None = None) -> MapSpec:
    """Parse 'stretch:<q>', 'winding:k,...', 'exp2d:m', 'compose:a;b'."""
    from .qfield import parse_qspec
    cfg = cfg or RunConfig()
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    if kind == "stretch":
        return radial_stretch_from_q(parse_qspec(rest), n, cfg)
    if kind == "exp2d":
        if n != 2:
            raise ValueError("exp2d is a planar map (need --n 2)")
        return exp2d_map(int(rest))
    if kind == "winding":
        parts = rest.split(",")
        k = int(parts[0])
        if len(parts) == 1 or parts[1] == "auto":
            dist = float(parts[2]) if len(parts) > 2 else cfg.axis_distance
            return Winding(k=k, axis=WindingAxis.default(n, dist), n=n)
        nums = [float(p) for p in parts[1:]]
        if n == 2 and len(nums) == 2:
            axis = WindingAxis(point=np.array(nums),
                               plane=np.array([[1.0, 0.0], [0.0, 1.0]]))
            return Winding(k=k, axis=axis, n=2)
        if n == 3 and len(nums) == 6:
            axis = WindingAxis.from_line(np.array(nums[:3]),
                                         np.array(nums[3:]))
            return Winding(k=k, axis=axis, n=3)
        raise ValueError(
            "winding axis: give 'auto[,distance]', a point (n=2), or "
            "point+direction (n=3)")
    if kind == "compose":
        return Composition([parse_mapspec(p, n, cfg)
                            for p in rest.split(";") if p.strip()])
    raise ValueError(f"bad map spec {spec!r}")


def split_mapspec_list(s: str) -> list[str]:
    """Split a comma-separated family where specs may contain commas."""
    prefixes = ("stretch:", "winding:", "exp2d:", "compose:")
    parts = []
    current = []
    for token in s.split(","):
        if current and any(token.strip().startswith(p) for p in prefixes):
            parts.append(",".join(current))
            current = [token]
        else:
            current.append(token)
    if current:
        parts.append(",".join(current))
    return [p.strip() for p in parts if p.strip()]
