import math

import numpy as np
import pytest

from risloc import (Box3D, ConfigError, GeometryError, Position3D, UpaConfig,
                    direction_angles, grid_positions, synth_mu_ris_paths,
                    synth_ris_ap_paths)
from conftest import small_scene

YZ_ARRAY = UpaConfig(4, 4, 0.5, Position3D(0, 0, 0), axis_a="Y", axis_b="Z")


class TestDirectionAngles:
    def test_parallel_to_axis_a(self):
        ang = direction_angles(Position3D(0, 0, 0), Position3D(0, 1, 0), YZ_ARRAY)
        assert ang.elevation == pytest.approx(0.0)
        assert ang.azimuth == pytest.approx(math.pi / 2)  # convention

    def test_parallel_to_axis_b(self):
        ang = direction_angles(Position3D(0, 0, 0), Position3D(0, 0, 1), YZ_ARRAY)
        assert ang.elevation == pytest.approx(math.pi / 2)
        assert ang.azimuth == pytest.approx(0.0)

    def test_diagonal_direction(self):
        s = 1.0 / math.sqrt(3.0)
        ang = direction_angles(Position3D(0, 0, 0), Position3D(s, s, s), YZ_ARRAY)
        # independent oracle: direct vector arithmetic
        el = math.acos(s)
        az = math.acos(s / math.sin(el))
        assert ang.elevation == pytest.approx(el, abs=1e-12)
        assert ang.azimuth == pytest.approx(az, abs=1e-12)
        assert ang.elevation == pytest.approx(0.9553, abs=1e-4)
        assert ang.azimuth == pytest.approx(0.7854, abs=1e-4)

    def test_coincident_positions_raise(self):
        with pytest.raises(GeometryError, match="degenerate"):
            direction_angles(Position3D(1, 2, 3), Position3D(1, 2, 3), YZ_ARRAY)

    def test_projection_identities_random(self):
        # cos(el) = k.a and sin(el) cos(az) = k.b whenever sin(el) >= 1e-9
        rng = np.random.default_rng(42)
        a_hat, b_hat = YZ_ARRAY.axis_a_vector(), YZ_ARRAY.axis_b_vector()
        for _ in range(300):
            frm = Position3D(*rng.uniform(-10, 10, 3))
            to = Position3D(*rng.uniform(-10, 10, 3))
            d = to.as_array() - frm.as_array()
            k = d / np.linalg.norm(d)
            ang = direction_angles(frm, to, YZ_ARRAY)
            assert math.cos(ang.elevation) == pytest.approx(k @ a_hat, abs=1e-12)
            if math.sin(ang.elevation) >= 1e-9:
                assert (math.sin(ang.elevation) * math.cos(ang.azimuth)
                        == pytest.approx(k @ b_hat, abs=1e-12))


class TestPathSynthesis:
    def test_single_path_is_direct(self):
        scene = small_scene(n_paths_mu_ris=1)
        mu = Position3D(-10.0, 2.0, 1.5)
        paths = synth_mu_ris_paths(scene, mu, np.random.default_rng(0))
        assert len(paths) == 1
        d = np.linalg.norm(mu.as_array() - scene.ris.center.as_array())
        assert abs(paths[0].gain) == pytest.approx(
            scene.wavelength / (4 * math.pi * d), rel=1e-12)

    def test_determinism(self):
        scene = small_scene(n_paths_mu_ris=5)
        mu = Position3D(-9.0, 3.0, 1.5)
        p1 = synth_mu_ris_paths(scene, mu, np.random.default_rng(7))
        p2 = synth_mu_ris_paths(scene, mu, np.random.default_rng(7))
        assert p1 == p2
        q1 = synth_ris_ap_paths(scene, np.random.default_rng(9))
        q2 = synth_ris_ap_paths(scene, np.random.default_rng(9))
        assert q1 == q2

    def test_bounce_paths_weaker_than_direct(self):
        # d_bounce >= d_direct by the triangle inequality and the reflection
        # factor is < 1, so every bounce gain is strictly smaller.
        scene = small_scene(n_paths_mu_ris=5)
        mu = Position3D(-9.0, 3.0, 1.5)
        paths = synth_mu_ris_paths(scene, mu, np.random.default_rng(7))
        assert len(paths) == 5
        direct = abs(paths[0].gain)
        for p in paths[1:]:
            assert abs(p.gain) < direct

    def test_ris_ap_direct_angles(self):
        scene = small_scene(n_paths_ris_ap=1)
        paths = synth_ris_ap_paths(scene, np.random.default_rng(0))
        assert len(paths) == 1
        assert paths[0].departure_at_ris == direction_angles(
            scene.ris.center, scene.ap.center, scene.ris)
        assert paths[0].arrival_at_ap == direction_angles(
            scene.ap.center, scene.ris.center, scene.ap)

    def test_angles_in_range_many_seeds(self):
        scene = small_scene(n_paths_ris_ap=3, n_paths_mu_ris=3)
        mu = Position3D(-8.0, 1.0, 1.0)
        for seed in range(1000):
            rng = np.random.default_rng(seed)
            for p in synth_ris_ap_paths(scene, rng):
                for ang in (p.departure_at_ris, p.arrival_at_ap):
                    assert 0.0 <= ang.elevation <= math.pi
                    assert 0.0 <= ang.azimuth <= math.pi
            for p in synth_mu_ris_paths(scene, mu, rng):
                assert 0.0 <= p.arrival_at_ris.elevation <= math.pi
                assert 0.0 <= p.arrival_at_ris.azimuth <= math.pi

    def test_mu_outside_bounds_raises(self):
        scene = small_scene()
        with pytest.raises(GeometryError, match="bounds"):
            synth_mu_ris_paths(scene, Position3D(50, 50, 50),
                               np.random.default_rng(0))

    def test_invalid_path_counts(self):
        with pytest.raises(ConfigError):
            small_scene(n_paths_mu_ris=0)
        with pytest.raises(ConfigError):
            small_scene(n_paths_ris_ap=0)


class TestGridPositions:
    def test_reference_grid_count(self):
        pts = grid_positions(9.6, 5.8, 0.2, (1.4, 1.5, 1.6), Position3D(0, 0, 0))
        assert len(pts) == 49 * 30 * 3 == 4410

    def test_single_point(self):
        pts = grid_positions(0.0, 0.0, 0.2, (1.5,), Position3D(1, 2, 0))
        assert pts == [Position3D(1.0, 2.0, 1.5)]

    def test_enumeration_order(self):
        pts = grid_positions(0.4, 0.2, 0.2, (1.0,), Position3D(0, 0, 0))
        expected = [Position3D(i * 0.2, j * 0.2, 1.0)
                    for i in range(3) for j in range(2)]
        assert len(pts) == 6
        for got, want in zip(pts, expected):
            assert got.as_array() == pytest.approx(want.as_array(), abs=1e-12)

    def test_count_formula_random(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            length = float(rng.uniform(0, 3))
            width = float(rng.uniform(0, 3))
            spacing = float(rng.uniform(0.05, 0.5))
            n_h = int(rng.integers(1, 4))
            pts = grid_positions(length, width, spacing, [1.0] * n_h,
                                 Position3D(0, 0, 0))
            ni = math.floor(length / spacing + 1e-9) + 1
            nj = math.floor(width / spacing + 1e-9) + 1
            assert len(pts) == ni * nj * n_h

    def test_invalid_spacing(self):
        with pytest.raises(ConfigError):
            grid_positions(1.0, 1.0, 0.0, (1.0,), Position3D(0, 0, 0))


class TestConfigTypes:
    def test_upa_validation(self):
        with pytest.raises(ConfigError):
            UpaConfig(0, 4, 0.5, Position3D(0, 0, 0))
        with pytest.raises(ConfigError):
            UpaConfig(4, 4, -1.0, Position3D(0, 0, 0))
        with pytest.raises(ConfigError):
            UpaConfig(4, 4, 0.5, Position3D(0, 0, 0), axis_a="Y", axis_b="Y")

    def test_box_validation(self):
        with pytest.raises(ConfigError):
            Box3D(Position3D(1, 0, 0), Position3D(0, 1, 1))

    def test_position_finite(self):
        with pytest.raises(GeometryError):
            Position3D(float("nan"), 0, 0)
