"""Dimension constants, chordal metric, exact ring moduli and the
two-point spherical-cap dichotomy certificate.

Points are numpy vectors; the point at infinity is the tagged sentinel
``INFINITY`` and is accepted only by the chordal operations.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import KorSearchError

SQRT3 = math.sqrt(3.0)
LOG_SQRT3 = 0.5 * math.log(3.0)


class _Infinity:
    """Tag for the point at infinity of the extended space."""

    __slots__ = ()

    def __repr__(self):
        return "INFINITY"


INFINITY = _Infinity()


def as_point(x) -> np.ndarray:
    p = np.asarray(x, dtype=float)
    if p.ndim != 1:
        raise ValueError("a point must be a 1-d coordinate vector")
    return p


@dataclasses.dataclass(frozen=True)
class DimensionConstants:
    """Area of the unit sphere and volume of the unit ball in R^n."""

    n: int
    omega: float   # area of S^{n-1}
    volume: float  # volume of B^n


def constants(n: int) -> DimensionConstants:
    """Closed forms via the Gamma function; requires n >= 2."""
    if int(n) != n or n < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {n}")
    n = int(n)
    omega = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    return DimensionConstants(n=n, omega=omega, volume=omega / n)


def chordal_distance(x, y) -> float:
    """Chordal metric on R^n ∪ {∞} (stereographic sphere of radius 1/2)."""
    x_inf = isinstance(x, _Infinity)
    y_inf = isinstance(y, _Infinity)
    if x_inf and y_inf:
        return 0.0
    if x_inf or y_inf:
        p = as_point(y if x_inf else x)
        return 1.0 / math.sqrt(1.0 + float(p @ p))
    p, q = as_point(x), as_point(y)
    if p.shape != q.shape:
        raise ValueError("points live in different dimensions")
    num = float(np.linalg.norm(p - q))
    return num / (math.sqrt(1.0 + float(p @ p)) * math.sqrt(1.0 + float(q @ q)))


def chordal_diameter(points) -> float:
    """Max pairwise chordal distance over a finite, nonempty point set."""
    pts = list(points)
    if not pts:
        raise ValueError("chordal_diameter of an empty set")
    best = 0.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            best = max(best, chordal_distance(pts[i], pts[j]))
    return best


@dataclasses.dataclass(frozen=True)
class Annulus:
    """Spherical ring A(center, r1, r2) with 0 < r1 < r2."""

    center: np.ndarray
    r1: float
    r2: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not 0.0 < self.r1 < self.r2:
            raise ValueError(f"need 0 < r1 < r2, got ({self.r1}, {self.r2})")


def ring_modulus(ann: Annulus, n: int) -> float:
    """Exact conformal modulus of the curve family joining the boundary
    spheres of a concentric ring: omega_{n-1} * (log(r2/r1))^{1-n}."""
    dc = constants(n)
    return dc.omega * math.log(ann.r2 / ann.r1) ** (1 - n)


# ---------------------------------------------------------------------------
# Two-point dichotomy on a sphere (certificate for the cap argument)
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class KorCertificate:
    """Sampled verification that balls B(p, t) separate {0, b} from a
    (branch 1) or {a, b} from 0 (branch 2) for t in (r/2, sqrt(3) r/2)."""

    p: np.ndarray
    r: float
    a: np.ndarray
    b: np.ndarray
    branch: list  # per sample: 1, 2, or 0 (neither)
    t_samples: np.ndarray
    all_pass: bool


def kor_t_grid(r: float, t_count: int) -> np.ndarray:
    """Strictly interior samples of the open interval (r/2, sqrt(3) r/2)."""
    if t_count < 1:
        raise ValueError("t_count must be >= 1")
    k = np.arange(t_count)
    return r / 2.0 + (SQRT3 - 1.0) * (r / 2.0) * (k + 0.5) / t_count


def _check_sphere_pair(a, b, r):
    a, b = as_point(a), as_point(b)
    if a.shape != b.shape:
        raise ValueError("a and b live in different dimensions")
    if r <= 0:
        raise ValueError("sphere radius must be positive")
    for name, p in (("a", a), ("b", b)):
        if abs(np.linalg.norm(p) - r) > 1e-9 * max(r, 1.0):
            raise ValueError(f"|{name}| must equal r={r}")
    if np.array_equal(a, b):
        raise ValueError("need a != b")
    return a, b


def kor_verify(p, a, b, r: float, t_count: int = 64) -> KorCertificate:
    """Check the exclusive ball dichotomy on a t sample grid."""
    a, b = _check_sphere_pair(a, b, r)
    p = as_point(p)
    ts = kor_t_grid(r, t_count)
    dp = np.linalg.norm(p)
    da = np.linalg.norm(a - p)
    db = np.linalg.norm(b - p)
    branch = []
    for t in ts:
        one = dp < t and db < t and da >= t
        two = da < t and db < t and dp >= t
        branch.append(1 if one else (2 if two else 0))
    branch_arr = branch
    return KorCertificate(p=p, r=r, a=a, b=b, branch=branch_arr,
                          t_samples=ts, all_pass=all(x != 0 for x in branch))


def kor_point(a, b, r: float, t_count: int = 64, seed: int = 0,
              search_budget: int = 4000) -> np.ndarray:
    """Point p realizing the dichotomy for a, b on S(0, r).

    Deterministic candidates first: p = b/2 works when the angle between a
    and b is at least 60 degrees (then |p| = |p-b| = r/2 < t while
    |a - b/2| >= sqrt(3) r/2), and p = (a+b)/2 when it is smaller (then
    |p - a| = |p - b| < r/2 while |p| > sqrt(3) r/2).  A seeded verified
    search backs them up.
    """
    a, b = _check_sphere_pair(a, b, r)
    cos_gamma = float(a @ b) / r ** 2
    candidates = [b / 2.0, (a + b) / 2.0] if cos_gamma <= 0.5 \
        else [(a + b) / 2.0, b / 2.0]
    candidates += [0.75 * b, 0.25 * b, 0.5 * (0.5 * (a + b) + 0.5 * b)]
    best_p, best_frac = None, -1.0
    for p in candidates:
        cert = kor_verify(p, a, b, r, t_count)
        if cert.all_pass:
            return p
        frac = sum(1 for x in cert.branch if x != 0) / len(cert.branch)
        if frac > best_frac:
            best_p, best_frac = p, frac

    rng = np.random.Generator(np.random.Philox(key=seed))
    for _ in range(search_budget):
        p = rng.normal(size=a.shape)
        p *= (r * rng.uniform() ** (1.0 / len(a))) / np.linalg.norm(p)
        cert = kor_verify(p, a, b, r, t_count)
        if cert.all_pass:
            return p
        frac = sum(1 for x in cert.branch if x != 0) / len(cert.branch)
        if frac > best_frac:
            best_p, best_frac = p, frac
    raise KorSearchError(
        f"no certificate found (best pass fraction {best_frac:.3f})",
        best_point=best_p, best_fraction=best_frac)
