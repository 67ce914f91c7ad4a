"""Figure rendering for CLI reports.

Each renderer writes PNG files next to the delimited output and returns the
written paths.  Figures are a viewing aid; the JSON report remains the
deterministic artifact.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_DPI = 130


def _finish(fig, outdir, name):
    path = os.path.join(outdir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_profile(radii, q0_values, itail_values, outdir, i_target=None):
    """q0(r) and the tail integral I(r, r_max) on log-r axes."""
    paths = []
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.loglog(radii, q0_values, "o-", ms=3, lw=1)
    ax.set_xlabel("r")
    ax.set_ylabel(r"$q_0(r)$")
    ax.set_title("spherical average of Q")
    ax.grid(True, which="both", alpha=0.3)
    paths.append(_finish(fig, outdir, "q_profile.png"))

    finite = [(r, v) for r, v in zip(radii, itail_values) if math.isfinite(v)]
    if finite:
        fig, ax = plt.subplots(figsize=(5.2, 3.6))
        rs, vs = zip(*finite)
        ax.semilogx(rs, vs, "o-", ms=3, lw=1)
        if i_target is not None and math.isfinite(i_target):
            ax.axhline(i_target, color="crimson", lw=1, ls="--",
                       label=r"$I_{target}$")
            ax.legend()
        ax.set_xlabel("r")
        ax.set_ylabel(r"$I(r, r_{max})$")
        ax.set_title("controlling tail integral")
        ax.grid(True, which="both", alpha=0.3)
        paths.append(_finish(fig, outdir, "tail_integral.png"))
    return paths


def render_divergence(partials, outdir, verdict=""):
    finite = [(e, v) for e, v in partials if math.isfinite(v)]
    if not finite:
        return []
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    eps, vals = zip(*finite)
    ax.semilogx(eps, vals, "s-", ms=3, lw=1)
    ax.invert_xaxis()
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel(r"$I(\varepsilon, c)$")
    ax.set_title(f"dyadic partial integrals ({verdict})")
    ax.grid(True, which="both", alpha=0.3)
    return [_finish(fig, outdir, "divergence_partials.png")]


def render_ring_checks(checks, outdir):
    """lhs vs rhs scatter with the equality diagonal."""
    if not checks:
        return []
    lhs = [c.lhs_modulus for _, c in checks]
    rhs = [c.rhs_bound for _, c in checks]
    fig, ax = plt.subplots(figsize=(4.4, 4.4))
    lo = min(min(lhs), min(rhs)) * 0.8
    hi = max(max(lhs), max(rhs)) * 1.25
    ax.loglog([lo, hi], [lo, hi], "k--", lw=1, label="equality")
    for label in sorted({lab for lab, _ in checks}):
        xs = [c.lhs_modulus for lab, c in checks if lab == label]
        ys = [c.rhs_bound for lab, c in checks if lab == label]
        ax.loglog(xs, ys, "o", ms=4, label=label)
    ax.set_xlabel("image ring modulus (lhs)")
    ax.set_ylabel(r"$\omega_{n-1}/I^{n-1}$ (rhs)")
    ax.set_title("ring inequality checks")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    return [_finish(fig, outdir, "ring_checks.png")]


def render_witness(plan, outdir):
    """Domain and image sections of the sharpness construction in the
    rotation plane (first two coordinates)."""
    fig, axes = plt.subplots(1, 2, figsize=(8.6, 4.2))
    th = [i * 2 * math.pi / 256 for i in range(257)]
    cos, sin = [math.cos(t) for t in th], [math.sin(t) for t in th]

    ax = axes[0]
    for radius, style, label in [(plan.domain_radius, "k-", "domain"),
                                 (plan.delta, "b--", "delta")]:
        ax.plot([radius * c for c in cos], [radius * s for s in sin],
                style, lw=1, label=label)
    ax.plot([plan.witness.x1[0], plan.witness.x2[0]],
            [plan.witness.x1[1], plan.witness.x2[1]], "r*", ms=10,
            label="witness pair")
    ax.set_title("domain section")
    ax.set_aspect("equal")
    ax.legend(fontsize=8)

    ax = axes[1]
    for radius, style, label in [(1.0, "k-", "image ball"),
                                 (plan.sigma, "b--", "sigma")]:
        ax.plot([radius * c for c in cos], [radius * s for s in sin],
                style, lw=1, label=label)
    y1 = plan.stretch.apply(plan.witness.x1)
    y2 = plan.stretch.apply(plan.witness.x2)
    ax.plot([y1[0], y2[0]], [y1[1], y2[1]], "r*", ms=10,
            label="pair before winding")
    ax.plot([plan.axis.point[0]], [plan.axis.point[1]], "g^", ms=9,
            label="winding axis")
    ax.set_title(f"image section (k={plan.k})")
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    return [_finish(fig, outdir, "sharpness_witness.png")]


def render_probe(table, outdir):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for i in range(table.per_map.shape[0]):
        ax.plot(table.radii, table.per_map[i], "o--", ms=3, lw=0.8, alpha=0.6)
    ax.plot(table.radii, table.sup_chordal, "k-", lw=1.8, label="family sup")
    ax.set_xlabel("probe radius s")
    ax.set_ylabel("sup chordal distance")
    ax.set_title("equicontinuity probe")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    return [_finish(fig, outdir, "probe.png")]


def render_kor(cert, outdir):
    fig, ax = plt.subplots(figsize=(5.2, 3.0))
    ax.step(cert.t_samples, cert.branch, where="mid")
    ax.set_yticks([0, 1, 2])
    ax.set_yticklabels(["neither", "0,b in / a out", "a,b in / 0 out"])
    ax.set_xlabel("t")
    ax.set_title(f"dichotomy branches (all_pass={cert.all_pass})")
    ax.grid(True, alpha=0.3)
    return [_finish(fig, outdir, "kor_branches.png")]


def render_stretch(stretch, outdir):
    import numpy as np
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    r = np.exp(stretch.log_radii)
    ax.loglog(r, np.exp(stretch.log_rho), lw=1.2)
    ax.set_xlabel("r")
    ax.set_ylabel(r"$\rho(r)$")
    ax.set_title("radial stretch profile")
    ax.grid(True, which="both", alpha=0.3)
    return [_finish(fig, outdir, "stretch_profile.png")]
