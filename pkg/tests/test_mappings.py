import math

import numpy as np
import pytest

from ringinj import (Composition, QField, RunConfig, WindingAxis,
                     axis_clearance, chordal_distance,
                     equicontinuity_probe, exp2d_map, map_eval,
                     noninjectivity_witness, parse_mapspec,
                     radial_stretch_from_q, verify_ring_inequality,
                     winding_map)
from ringinj.errors import UnsupportedMapError
from ringinj.mappings import split_mapspec_list

CFG = RunConfig()


def sample_ball(count, n, seed=5, radius=0.999):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(count, n))
    u /= np.linalg.norm(u, axis=1)[:, None]
    return u * (radius * rng.uniform(size=count) ** (1 / n))[:, None]


class TestRadialStretch:
    def test_unit_field_is_identity(self):
        f = radial_stretch_from_q(QField.const(1), 3, CFG)
        for x in sample_ball(200, 3):
            np.testing.assert_allclose(map_eval(f, x), x, atol=1e-12)

    def test_constant_eight_power_law(self):
        f = radial_stretch_from_q(QField.const(8), 3, CFG)
        e = 8 ** -0.5
        for r in (0.05, 0.2, 0.5, 0.9):
            assert f.rho(r) == pytest.approx(r ** e, rel=1e-10)
        x = np.array([0.0, 0.3, 0.0])
        assert np.linalg.norm(map_eval(f, x)) == pytest.approx(0.3 ** e,
                                                               rel=1e-10)

    def test_truncated_field_continuous_at_delta(self):
        q = QField.truncated(0.5, 0.3, QField.const(4))
        f = radial_stretch_from_q(q, 3, CFG)
        below = f.rho(0.3 * (1 - 1e-9))
        above = f.rho(0.3 * (1 + 1e-9))
        assert below == pytest.approx(above, rel=1e-6)

    def test_spheres_to_spheres(self):
        f = radial_stretch_from_q(QField.log_power(1, 2), 3, CFG)
        rng = np.random.default_rng(2)
        for r in (0.05, 0.3, 0.7):
            rho = f.rho(r)
            for _ in range(20):
                u = rng.normal(size=3)
                u /= np.linalg.norm(u)
                assert np.linalg.norm(map_eval(f, r * u)) == \
                    pytest.approx(rho, abs=1e-12)

    def test_rho_inverse(self):
        f = radial_stretch_from_q(QField.const(8), 3, CFG)
        for r in (0.01, 0.3, 0.9):
            assert f.rho_inverse(f.rho(r)) == pytest.approx(r, rel=1e-9)

    def test_divergent_interior_rejected(self):
        # a field vanishing identically makes psi = inf everywhere
        with pytest.raises(ValueError):
            radial_stretch_from_q(QField.const(0), 3, CFG)


class TestMapEval:
    def test_winding_doubles_angle(self):
        g = winding_map(2, WindingAxis.from_line(np.zeros(3),
                                                 np.array([0, 0, 1.0])), 3)
        x = np.array([0.2 * math.cos(math.pi / 2),
                      0.2 * math.sin(math.pi / 2), 0.1])
        y = map_eval(g, x)
        # angle doubled from pi/2 to pi, radius and height kept
        assert np.allclose(y, [0.2 * math.cos(math.pi),
                               0.2 * math.sin(math.pi), 0.1], atol=1e-12)

    def test_exp2d_at_origin(self):
        f = exp2d_map(7)
        np.testing.assert_allclose(map_eval(f, np.zeros(2)), [1.0, 0.0],
                                   atol=1e-15)

    def test_composition_right_to_left(self):
        stretch = radial_stretch_from_q(QField.const(8), 2, CFG)
        g = winding_map(2, WindingAxis(np.zeros(2), np.eye(2)), 2)
        comp = Composition([g, stretch])
        x = np.array([0.0, 0.25])      # angle pi/2
        y = map_eval(comp, x)
        rho = stretch.rho(0.25)
        assert np.allclose(y, [-rho, 0.0], atol=1e-12)  # angle doubled to pi

    def test_domain_checks(self):
        f = radial_stretch_from_q(QField.const(1), 3, CFG)
        with pytest.raises(ValueError):
            map_eval(f, np.array([1.5, 0, 0]))


class TestRingInequality:
    def test_identity_equality(self):
        f = radial_stretch_from_q(QField.const(1), 3, CFG)
        chk = verify_ring_inequality(f, QField.const(1), 0.1, 0.5, 3, CFG)
        expected = 4 * math.pi / math.log(5.0) ** 2
        assert chk.lhs_modulus == pytest.approx(expected, rel=1e-10)
        assert chk.rhs_bound == pytest.approx(expected, rel=1e-10)
        assert chk.passed

    def test_larger_field_gives_slack(self):
        f = radial_stretch_from_q(QField.const(1), 3, CFG)
        chk = verify_ring_inequality(f, QField.const(2), 0.1, 0.5, 3, CFG)
        assert chk.passed
        assert chk.slack > 0

    @pytest.mark.parametrize("n", [2, 3, 4])
    @pytest.mark.parametrize("spec", ["const:1", "const:8", "powr:1"])
    def test_equality_property(self, n, spec):
        from ringinj.qfield import parse_qspec
        q = parse_qspec(spec)
        f = radial_stretch_from_q(q, n, CFG)
        for r1, r2 in [(0.05, 0.3), (0.2, 0.9), (0.5, 0.7)]:
            chk = verify_ring_inequality(f, q, r1, r2, n, CFG)
            assert chk.lhs_modulus == pytest.approx(chk.rhs_bound, rel=1e-6)

    def test_rejects_non_radial(self):
        g = winding_map(2, WindingAxis.default(3, 2.0), 3)
        with pytest.raises(UnsupportedMapError):
            verify_ring_inequality(g, QField.const(1), 0.1, 0.5, 3, CFG)


class TestWinding:
    def test_order_validation(self):
        with pytest.raises(ValueError):
            winding_map(1, WindingAxis.default(3, 2.0), 3)

    def test_angle_pair_same_image(self):
        g = winding_map(2, WindingAxis.from_line(np.zeros(3),
                                                 np.array([0, 0, 1.0])), 3)
        rng = np.random.default_rng(8)
        for _ in range(10):
            s, th, z = rng.uniform(0.1, 1), rng.uniform(0, 2 * math.pi), \
                rng.uniform(-1, 1)
            x1 = np.array([s * math.cos(th), s * math.sin(th), z])
            x2 = np.array([s * math.cos(th + math.pi),
                           s * math.sin(th + math.pi), z])
            assert np.linalg.norm(g.apply(x1) - g.apply(x2)) < 1e-12

    def test_fixed_ray(self):
        g = winding_map(3, WindingAxis.from_line(np.zeros(3),
                                                 np.array([0, 0, 1.0])), 3)
        x = np.array([0.4, 0.0, -0.2])  # theta = 0
        np.testing.assert_allclose(g.apply(x), x, atol=1e-14)

    @pytest.mark.parametrize("n,k", [(2, 3), (3, 2), (3, 5), (4, 3)])
    def test_distortion_is_k_to_n_minus_1(self, n, k):
        # finite-difference operator norm and Jacobian at generic points
        g = winding_map(k, WindingAxis.default(n, 3.0), n)
        rng = np.random.default_rng(4)
        h = 1e-6
        for _ in range(5):
            x = rng.uniform(-0.5, 0.5, size=n)
            J = np.empty((n, n))
            for j in range(n):
                dx = np.zeros(n)
                dx[j] = h
                J[:, j] = (g.apply(x + dx) - g.apply(x - dx)) / (2 * h)
            op_norm = np.linalg.svd(J, compute_uv=False)[0]
            jac = abs(np.linalg.det(J))
            assert op_norm ** n / jac == pytest.approx(k ** (n - 1), rel=1e-3)


class TestAxisClearance:
    def test_examples(self):
        axis = WindingAxis.from_line(np.array([1.0, 0, 0]),
                                     np.array([0, 0, 1.0]))
        assert axis_clearance(axis, np.zeros(3), 0.5) == pytest.approx(0.5)
        through_origin = WindingAxis.from_line(np.zeros(3),
                                               np.array([0, 0, 1.0]))
        assert axis_clearance(through_origin, np.zeros(3), 0.5) == 0.0
        far = WindingAxis.from_line(np.array([3.0, 0, 0]),
                                    np.array([0, 0, 1.0]))
        assert axis_clearance(far, np.zeros(3), 1.0) == pytest.approx(2.0)


class TestWitness:
    def test_winding_after_stretch_analytic(self):
        stretch = radial_stretch_from_q(QField.const(2), 3, CFG)
        g = winding_map(2, WindingAxis.from_line(np.zeros(3),
                                                 np.array([0, 0, 1.0])), 3)
        w = noninjectivity_witness(Composition([g, stretch]), 0.5, CFG)
        assert w is not None
        assert w.containment_radius < 0.5
        assert w.image_gap < 1e-12

    def test_identity_has_none(self):
        f = radial_stretch_from_q(QField.const(1), 3, CFG)
        assert noninjectivity_witness(f, 0.8, CFG) is None

    def test_exp2d_period(self):
        w = noninjectivity_witness(exp2d_map(7), 1.0, CFG)
        assert w.containment_radius == pytest.approx(2 * math.pi / 7,
                                                     abs=1e-12)
        assert w.image_gap < 1e-12

    def test_exp2d_small_order_no_witness_in_disk(self):
        # period 2 pi / 3 exceeds any chord budget inside the unit disk
        assert noninjectivity_witness(exp2d_map(1), 1.0, CFG) is None

    def test_outside_axis_order_two_has_no_pair(self):
        # an order-2 winding about an axis clear of the ball is injective
        # on the ball: the analytic shortcut must fail and the random
        # search must come up empty
        g = winding_map(2, WindingAxis.default(3, 1.5), 3)
        assert noninjectivity_witness(g, 0.9, CFG) is None


class TestProbe:
    def test_closed_form_family_sup(self):
        # constants c^2 make the n=3 stretch exponent K^{-1/2} equal 1/c
        family = [radial_stretch_from_q(QField.const(c * c), 3, CFG)
                  for c in (1.0, 1.5, 2.0)]
        table = equicontinuity_probe(family, np.zeros(3), [0.25], CFG)
        # sup over the family of |x|^{1/c} at s = 0.25 is 0.5 (c = 2)
        expected = chordal_distance(np.array([0.5, 0, 0]), np.zeros(3))
        assert expected == pytest.approx(0.4472135955, abs=1e-9)
        assert table.sup_chordal[0] == pytest.approx(expected, rel=1e-9)

    def test_identity_matches_euclidean_gap(self):
        family = [radial_stretch_from_q(QField.const(1), 3, CFG)]
        s = 0.3
        table = equicontinuity_probe(family, np.zeros(3), [s], CFG)
        assert table.sup_chordal[0] == pytest.approx(
            chordal_distance(np.array([s, 0, 0]), np.zeros(3)), rel=1e-12)

    def test_monotone_and_vanishing(self):
        family = [radial_stretch_from_q(QField.const(c), 3, CFG)
                  for c in (1.0, 4.0)]
        radii = [0.4, 0.05, 0.2, 0.1, 0.01]
        table = equicontinuity_probe(family, np.zeros(3), radii, CFG)
        assert np.all(np.diff(table.sup_chordal) >= 0)
        assert table.sup_chordal[0] < 0.35  # s -> 0 end stays small

    def test_empty_family_rejected(self):
        with pytest.raises(ValueError):
            equicontinuity_probe([], np.zeros(3), [0.1], CFG)


class TestSpecParsing:
    def test_stretch_spec(self):
        f = parse_mapspec("stretch:const:8", 3, CFG)
        assert f.rho(0.5) == pytest.approx(0.5 ** (8 ** -0.5), rel=1e-10)

    def test_winding_auto(self):
        g = parse_mapspec("winding:3,auto,1.5", 3, CFG)
        assert g.k == 3
        assert g.axis.point[0] == 1.5

    def test_compose(self):
        f = parse_mapspec("compose:winding:2,auto;stretch:const:1", 3, CFG)
        assert isinstance(f, Composition)
        assert len(f.maps) == 2

    def test_exp2d_needs_plane(self):
        with pytest.raises(ValueError):
            parse_mapspec("exp2d:7", 3, CFG)

    def test_family_splitting(self):
        specs = split_mapspec_list(
            "stretch:const:1,stretch:logpow:1,2,winding:2,auto")
        assert specs == ["stretch:const:1", "stretch:logpow:1,2",
                         "winding:2,auto"]
