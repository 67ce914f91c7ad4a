import math

import numpy as np
import pytest

from ringinj import (QField, RadialProfile, RunConfig, classify_divergence,
                     constants, eta_normalize, fubini_rhs, integrate_I,
                     psi_canonical, psi_from_field, psi_fmo, upper_anchor)
CFG = RunConfig()


class TestPsiShapes:
    def test_unit_field_gives_one_over_t(self):
        psi = psi_from_field(QField.const(1), 3, 0.1, 0.9)
        t = np.array([0.2, 0.5, 0.8])
        np.testing.assert_allclose(psi.eval(t), 1.0 / t, rtol=1e-14)

    def test_constant_field_root(self):
        psi = psi_from_field(QField.const(9), 3, 0.1, 0.9)
        assert psi.eval(0.5) == pytest.approx(1 / (0.5 * 3.0), rel=1e-14)

    def test_log_square_collapses(self):
        psi = psi_from_field(QField.log_power(1, 2), 3, 0.01, 0.9)
        t = 0.2
        assert psi.eval(t) == pytest.approx(1 / (t * math.log(1 / t)), rel=1e-13)

    def test_zero_outside_support(self):
        psi = psi_from_field(QField.const(1), 3, 0.2, 0.4)
        assert psi.eval(0.1) == 0.0
        assert psi.eval(0.5) == 0.0

    def test_profile_coverage_enforced(self):
        prof = RadialProfile(np.array([0.2, 0.5]), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            psi_canonical(prof, 3, 0.1, 0.5)


class TestIntegrateI:
    def test_one_over_t_log_ratio(self):
        psi = psi_from_field(QField.const(1), 3, 0.0, 1.0)
        res = integrate_I(psi, math.exp(-2), math.exp(-1), CFG)
        assert res.value == pytest.approx(1.0, rel=1e-12)

    def test_constant_four_against_scipy(self):
        from scipy.integrate import quad
        psi = psi_from_field(QField.const(4), 3, 0.0, 1.0)
        res = integrate_I(psi, 0.1, 1.0, CFG)
        oracle, _ = quad(lambda t: 1 / (t * math.sqrt(4.0)), 0.1, 1.0)
        assert res.value == pytest.approx(oracle, rel=1e-8)
        assert res.value == pytest.approx(math.log(10) / 2, rel=1e-12)

    def test_fmo_weight_loglog(self):
        psi = psi_fmo(1.0, 3)
        res = integrate_I(psi, math.exp(-math.e), math.exp(-1), CFG)
        assert res.value == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("spec,n", [("const:3", 3), ("logpow:1,2", 3),
                                        ("logpow:2,4", 3), ("powr:1", 3),
                                        ("powr:-1", 2), ("logpow:1,1", 4)])
    def test_closed_forms_match_adaptive(self, spec, n):
        from ringinj.qfield import parse_qspec
        q = parse_qspec(spec)
        r1, r2 = 0.05, 0.7
        exact = integrate_I(psi_from_field(q, n, 0.0, 1.0), r1, r2, CFG)
        # independent route: profile-backed weight, adaptive quadrature
        radii = np.exp(np.linspace(math.log(r1 * 0.9), math.log(r2 * 1.05),
                                   4000))
        prof = RadialProfile(radii, q.eval_radial(radii))
        numeric = integrate_I(psi_canonical(prof, n, r1, r2), r1, r2, CFG)
        assert numeric.value == pytest.approx(exact.value, rel=5e-6)

    def test_additivity(self):
        psi = psi_from_field(QField.log_power(1, 2), 3, 0.0, 1.0)
        a, b, c = 0.02, 0.2, 0.8
        whole = integrate_I(psi, a, c, CFG)
        parts = integrate_I(psi, a, b, CFG).value + \
            integrate_I(psi, b, c, CFG).value
        assert whole.value == pytest.approx(parts, rel=1e-10)

    def test_lower_tail_strict_monotonicity(self):
        # I(eps1, c) > I(eps3, c) whenever eps1 < eps3
        psi = psi_from_field(QField.const(2), 3, 0.0, 1.0)
        c = 0.5
        values = [integrate_I(psi, eps, c, CFG).value
                  for eps in (0.01, 0.05, 0.2)]
        assert values[0] > values[1] > values[2] > 0

    def test_divergence_flags(self):
        psi = psi_from_field(QField.const(1), 3, 0.0, 1.0)
        res = integrate_I(psi, 0.0, 0.5, CFG)
        assert res.value == math.inf and res.diverged_at == "lower"
        psi2 = psi_from_field(QField.log_power(1, 2), 3, 0.0, 1.0)
        res2 = integrate_I(psi2, 0.5, 1.0, CFG)
        assert res2.value == math.inf and res2.diverged_at == "upper"

    def test_truncated_field_closed_form(self):
        q = QField.truncated(0.25, 0.3, QField.const(4))
        psi = psi_from_field(q, 3, 0.0, 1.0)
        got = integrate_I(psi, 0.1, 0.9, CFG).value
        expected = 2.0 * math.log(0.3 / 0.1) + 0.5 * math.log(0.9 / 0.3)
        assert got == pytest.approx(expected, rel=1e-12)


class TestUpperAnchor:
    def test_regular_kinds_reach_one(self):
        assert upper_anchor(QField.const(2), 3, CFG) == 1.0
        assert upper_anchor(QField.radial_power(1.0), 3, CFG) == 1.0
        assert upper_anchor(QField.log_power(1, 1), 3, CFG) == 1.0  # beta=1/2

    def test_singular_log_power_capped(self):
        assert upper_anchor(QField.log_power(1, 2), 3, CFG) == CFG.r_max
        assert upper_anchor(QField.log_power(1, 4), 3, CFG) == CFG.r_max

    def test_table_anchor(self):
        prof = RadialProfile(np.array([0.1, 0.6]), np.array([1.0, 1.0]))
        assert upper_anchor(QField.from_table(prof), 3, CFG) == 0.6


class TestClassify:
    @pytest.mark.parametrize("spec,n,verdict", [
        ("const:1", 3, "divergent"),
        ("const:16", 3, "divergent"),
        ("logpow:1,2", 3, "divergent"),    # p = n-1
        ("logpow:1,4", 3, "convergent"),   # p > n-1
        ("logpow:1,3", 4, "divergent"),    # p = n-1
        ("powr:1", 3, "divergent"),
        ("powr:-1", 3, "convergent"),
        ("trunc:4,0.2,logpow:1,4", 3, "divergent"),  # inner constant rules
    ])
    def test_catalog_exact(self, spec, n, verdict):
        from ringinj.qfield import parse_qspec
        assert classify_divergence(parse_qspec(spec), n, CFG).verdict == verdict

    def test_partials_monotone(self):
        d = classify_divergence(QField.const(1), 3, CFG)
        vals = [v for _, v in d.partial_values]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_tabulated_convergent(self):
        radii = np.exp(np.linspace(math.log(1e-8), math.log(0.6), 600))
        q = QField.from_table(RadialProfile(radii,
                                            np.log(1 / radii) ** 4))
        out = classify_divergence(q, 3, CFG)
        assert out.verdict == "convergent"

    def test_tabulated_shallow_inconclusive(self):
        radii = np.exp(np.linspace(math.log(0.01), math.log(0.6), 60))
        q = QField.from_table(RadialProfile(radii, np.ones(60)))
        assert classify_divergence(q, 3, CFG).verdict == "inconclusive"


class TestFubini:
    def test_unit_field_shell_value(self):
        q = QField.const(1)
        psi = psi_from_field(q, 3, math.exp(-1), 1.0)
        got = fubini_rhs(q, psi, math.exp(-1), 1.0, 3, CFG)
        assert got == pytest.approx(4 * math.pi, rel=1e-8)

    def test_unit_field_against_volume_monte_carlo(self):
        q = QField.const(1)
        r1, r2 = math.exp(-1), 1.0
        psi = psi_from_field(q, 3, r1, r2)
        got = fubini_rhs(q, psi, r1, r2, 3, CFG)
        rng = np.random.default_rng(424242)
        m = 400_000
        pts = rng.uniform(-1, 1, size=(m, 3))
        radii = np.linalg.norm(pts, axis=1)
        mask = (radii > r1) & (radii < r2)
        vals = np.zeros(m)
        vals[mask] = radii[mask] ** -3  # psi(t)^3 = t^{-3}
        cube = 8.0
        est = vals.mean() * cube
        se = vals.std() * cube / math.sqrt(m)
        assert abs(got - est) < 3 * se

    def test_zero_field(self):
        q = QField.const(0)
        psi = psi_from_field(QField.const(1), 3, 0.1, 0.9)
        assert fubini_rhs(q, psi, 0.1, 0.9, 3, CFG) == 0.0

    @pytest.mark.parametrize("spec", ["const:1", "const:8", "logpow:1,2",
                                      "powr:1"])
    def test_identity_with_canonical_weight(self, spec):
        from ringinj.qfield import parse_qspec
        q = parse_qspec(spec)
        n = 3
        r1, r2 = 0.05, 0.8
        psi = psi_from_field(q, n, r1, r2)
        lhs = fubini_rhs(q, psi, r1, r2, n, CFG)
        rhs = constants(n).omega * integrate_I(psi, r1, r2, CFG).value
        assert lhs == pytest.approx(rhs, rel=1e-6)


class TestEta:
    def test_already_normalized(self):
        psi = psi_from_field(QField.const(1), 3, math.exp(-1), 1.0)
        eta = eta_normalize(psi, math.exp(-1), 1.0, CFG)
        assert eta.I == pytest.approx(1.0, rel=1e-12)
        assert eta.eval(0.5) == pytest.approx(psi.eval(0.5), rel=1e-12)

    def test_halving(self):
        psi = psi_from_field(QField.const(1), 3, math.exp(-2), 1.0)
        eta = eta_normalize(psi, math.exp(-2), 1.0, CFG)
        assert eta.eval(0.5) == pytest.approx(1.0 / (2 * 0.5), rel=1e-12)

    def test_unit_mass(self):
        psi = psi_from_field(QField.log_power(1, 2), 3, 0.0, 1.0)
        eta = eta_normalize(psi, 0.05, 0.7, CFG)
        got = integrate_I(psi, 0.05, 0.7, CFG).value / eta.I
        assert got == pytest.approx(1.0, rel=1e-10)

    def test_infinite_mass_rejected(self):
        psi = psi_from_field(QField.const(1), 3, 0.0, 1.0)
        with pytest.raises(ValueError):
            eta_normalize(psi, 0.0, 0.5, CFG)
