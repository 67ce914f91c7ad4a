import math

import numpy as np
import pytest

from ringinj import (INFINITY, Annulus, chordal_diameter, chordal_distance,
                     constants, kor_point, kor_verify, ring_modulus)
from ringinj.errors import KorSearchError
from ringinj.geometry import SQRT3, kor_t_grid

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])


class TestConstants:
    def test_low_dimensions(self):
        assert constants(2).omega == pytest.approx(2 * math.pi, abs=1e-12)
        assert constants(3).omega == pytest.approx(4 * math.pi, abs=1e-12)
        # 2 pi^{n/2} / Gamma(n/2) at n=4 evaluated by hand: Gamma(2) = 1
        assert constants(4).omega == pytest.approx(2 * math.pi ** 2, rel=1e-14)

    @pytest.mark.parametrize("n", range(2, 9))
    def test_omega_is_n_volume(self, n):
        dc = constants(n)
        assert dc.omega == pytest.approx(n * dc.volume, rel=1e-14)

    @pytest.mark.parametrize("n", [1, 0, -3])
    def test_rejects_low_dimension(self, n):
        with pytest.raises(ValueError):
            constants(n)


class TestChordal:
    def test_infinity(self):
        assert chordal_distance(np.zeros(3), INFINITY) == pytest.approx(1.0)
        assert chordal_distance(INFINITY, INFINITY) == 0.0

    def test_identity_and_unit(self):
        x = np.array([0.3, -0.2, 0.9])
        assert chordal_distance(x, x) == 0.0
        assert chordal_distance(np.zeros(3), E1) == pytest.approx(1 / math.sqrt(2))

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            x, y = rng.normal(size=3) * 3, rng.normal(size=3) * 3
            d = chordal_distance(x, y)
            assert d == chordal_distance(y, x)
            assert 0.0 <= d <= 1.0

    def test_triangle_inequality_including_infinity(self):
        rng = np.random.default_rng(11)
        pts = [rng.normal(size=3) * rng.uniform(0, 5) for _ in range(40)]
        pts.append(INFINITY)
        for _ in range(300):
            a, b, c = (pts[i] for i in rng.integers(0, len(pts), size=3))
            assert chordal_distance(a, c) <= \
                chordal_distance(a, b) + chordal_distance(b, c) + 1e-12

    def test_diameter(self):
        assert chordal_diameter([np.zeros(3), INFINITY]) == pytest.approx(1.0)
        assert chordal_diameter([E1]) == 0.0
        pts = [np.zeros(3), E1, INFINITY]
        expected = max(chordal_distance(pts[i], pts[j])
                       for i in range(3) for j in range(i + 1, 3))
        assert chordal_diameter(pts) == pytest.approx(expected)
        assert expected == pytest.approx(1.0)
        with pytest.raises(ValueError):
            chordal_diameter([])


class TestRingModulus:
    def test_unit_log_ratio(self):
        ann = Annulus(np.zeros(3), math.exp(-1), 1.0)
        assert ring_modulus(ann, 3) == pytest.approx(4 * math.pi, rel=1e-12)

    def test_planar(self):
        ann = Annulus(np.zeros(2), 1.0, math.exp(2))
        assert ring_modulus(ann, 2) == pytest.approx(math.pi, rel=1e-12)

    def test_generic_plug_in(self):
        # independent plug-in: omega_2 * (log(r2/r1))^{-2}
        expected = 4 * math.pi / math.log(0.9 / 0.1) ** 2
        ann = Annulus(np.zeros(3), 0.1, 0.9)
        assert ring_modulus(ann, 3) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(2.6030, abs=1e-4)

    def test_invalid_annulus(self):
        with pytest.raises(ValueError):
            Annulus(np.zeros(3), 0.9, 0.1)
        with pytest.raises(ValueError):
            Annulus(np.zeros(3), 0.0, 0.5)

    def test_scale_invariance(self):
        m1 = ring_modulus(Annulus(np.zeros(3), 0.2, 0.7), 3)
        # power-of-two scaling keeps the radius ratio bit-exact
        m2 = ring_modulus(Annulus(np.zeros(3), 0.2 * 4, 0.7 * 4), 3)
        assert m1 == m2
        m3 = ring_modulus(Annulus(np.zeros(3), 0.2 * 0.3, 0.7 * 0.3), 3)
        assert m3 == pytest.approx(m1, rel=1e-14)

    def test_strictly_decreasing_in_ratio(self):
        mods = [ring_modulus(Annulus(np.zeros(3), 0.1, r2), 3)
                for r2 in (0.2, 0.4, 0.8)]
        assert mods[0] > mods[1] > mods[2]

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_log_additivity(self, n):
        r1, r, r2 = 0.05, 0.3, 0.8
        def inv_root(m):
            return m ** (-1.0 / (n - 1))
        whole = inv_root(ring_modulus(Annulus(np.zeros(n), r1, r2), n))
        parts = inv_root(ring_modulus(Annulus(np.zeros(n), r1, r), n)) + \
            inv_root(ring_modulus(Annulus(np.zeros(n), r, r2), n))
        assert whole == pytest.approx(parts, abs=1e-12)


class TestKor:
    def test_antipodal_candidate(self):
        cert = kor_verify(-E1 / 2, E1, -E1, 1.0, 64)
        assert cert.all_pass
        assert all(b == 1 for b in cert.branch)  # 0,b inside; a outside

    def test_origin_fails(self):
        cert = kor_verify(np.zeros(3), E1, -E1, 1.0, 64)
        assert not cert.all_pass
        assert all(b == 0 for b in cert.branch)

    def test_t_grid_strictly_interior(self):
        ts = kor_t_grid(2.0, 17)
        assert np.all(ts > 1.0) and np.all(ts < SQRT3)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            kor_verify(np.zeros(3), E1, E1, 1.0, 8)
        with pytest.raises(ValueError):
            kor_verify(np.zeros(3), E1, -E1, 1.0, 0)
        with pytest.raises(ValueError):
            kor_point(E1, E1, 1.0)

    def test_antipodal_point_matches_halved_b(self):
        p = kor_point(E1, -E1, 1.0)
        assert np.allclose(p, -E1 / 2)

    def test_close_pair_uses_midpoint(self):
        b = np.array([math.cos(0.3), math.sin(0.3), 0.0])
        p = kor_point(E1, b, 1.0)
        assert kor_verify(p, E1, b, 1.0, 128).all_pass

    def test_orthogonal_pair(self):
        p = kor_point(E1, E2, 1.0)
        cert = kor_verify(p, E1, E2, 1.0, 64)
        assert cert.all_pass

    def test_branches_exclusive_when_passing(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            r = rng.uniform(0.5, 2.0)
            a = rng.normal(size=3)
            a *= r / np.linalg.norm(a)
            b = rng.normal(size=3)
            b *= r / np.linalg.norm(b)
            try:
                p = kor_point(a, b, r)
            except (ValueError, KorSearchError):
                continue
            cert = kor_verify(p, a, b, r, 64)
            assert cert.all_pass
            # branch 1 requires |p| < t, branch 2 requires |p| >= t
            dp = np.linalg.norm(cert.p)
            for t, br in zip(cert.t_samples, cert.branch):
                assert br in (1, 2)
                assert (dp < t) == (br == 1)
