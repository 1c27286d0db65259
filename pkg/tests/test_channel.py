import math

import numpy as np
import pytest

from risloc import (AnglePair, ChannelError, MuRisPath, Position3D,
                    RisApPath, UpaConfig, estimate_stcrv, mu_ris_channel,
                    received_signal, ris_ap_channel, stcrv, upa_response)

WAVELENGTH = 1.0


def make_array(ca, cb, spacing=0.5, axis_a="Y", axis_b="Z"):
    return UpaConfig(ca, cb, spacing, Position3D(0, 0, 0), axis_a, axis_b)


def random_angles(rng):
    return AnglePair(float(rng.uniform(0, math.pi)), float(rng.uniform(0, math.pi)))


def response_oracle(array, angles, wavelength):
    """Entry-by-entry evaluation of both factors, no Kronecker shortcut."""
    out = np.empty(array.size, dtype=np.complex128)
    for n in range(array.count_a):
        for m in range(array.count_b):
            ph_e = -2 * math.pi * n * array.spacing * math.cos(angles.elevation) / wavelength
            ph_a = (-2 * math.pi * m * array.spacing * math.sin(angles.elevation)
                    * math.cos(angles.azimuth) / wavelength)
            out[n * array.count_b + m] = np.exp(1j * ph_e) * np.exp(1j * ph_a)
    return out


class TestUpaResponse:
    def test_broadside_all_ones(self):
        arr = make_array(2, 2)
        v = upa_response(arr, AnglePair(math.pi / 2, math.pi / 2), WAVELENGTH)
        assert v == pytest.approx(np.ones(4))

    def test_endfire_half_wavelength(self):
        arr = make_array(2, 2, spacing=WAVELENGTH / 2)
        v = upa_response(arr, AnglePair(0.0, math.pi / 2), WAVELENGTH)
        assert v == pytest.approx(np.array([1, 1, -1, -1], dtype=complex), abs=1e-12)

    def test_matches_elementwise_oracle(self):
        rng = np.random.default_rng(0)
        arr = make_array(4, 3)
        for _ in range(20):
            ang = random_angles(rng)
            got = upa_response(arr, ang, WAVELENGTH)
            want = response_oracle(arr, ang, WAVELENGTH)
            np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)

    def test_unit_modulus_and_leading_entry(self):
        rng = np.random.default_rng(1)
        arr = make_array(5, 4)
        for _ in range(200):
            v = upa_response(arr, random_angles(rng), WAVELENGTH)
            assert v[0] == 1.0
            np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)

    def test_kronecker_index_law(self):
        rng = np.random.default_rng(2)
        arr = make_array(4, 3)
        for _ in range(50):
            ang = random_angles(rng)
            v = upa_response(arr, ang, WAVELENGTH)
            e = upa_response(make_array(4, 1), ang, WAVELENGTH)
            a = upa_response(make_array(1, 3), ang, WAVELENGTH)
            for n in range(4):
                for m in range(3):
                    assert v[n * 3 + m] == pytest.approx(e[n] * a[m], abs=1e-12)

    def test_elevation_reflection_conjugates(self):
        # cos(pi - t) = -cos(t): the elevation factor conjugates.
        rng = np.random.default_rng(3)
        line = make_array(6, 1)
        for _ in range(50):
            ang = random_angles(rng)
            v1 = upa_response(line, ang, WAVELENGTH)
            v2 = upa_response(line, AnglePair(math.pi - ang.elevation, ang.azimuth),
                              WAVELENGTH)
            np.testing.assert_allclose(v2, np.conj(v1), atol=1e-12)


class TestLinkChannels:
    def test_single_unit_path(self):
        arr = make_array(3, 3)
        ang = AnglePair(1.0, 2.0)
        path = MuRisPath(gain=1.0 + 0j, arrival_at_ris=ang)
        np.testing.assert_allclose(
            mu_ris_channel([path], arr, WAVELENGTH),
            upa_response(arr, ang, WAVELENGTH))

    def test_opposite_gains_cancel(self):
        arr = make_array(3, 3)
        ang = AnglePair(1.0, 2.0)
        c = 0.3 - 0.8j
        g = mu_ris_channel([MuRisPath(c, ang), MuRisPath(-c, ang)], arr, WAVELENGTH)
        np.testing.assert_allclose(g, 0.0, atol=1e-15)

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(4)
        arr = make_array(4, 3)
        paths = [MuRisPath(complex(rng.normal(), rng.normal()), random_angles(rng))
                 for _ in range(5)]
        got = mu_ris_channel(paths, arr, WAVELENGTH)
        want = np.zeros(arr.size, dtype=complex)
        for p in paths:
            resp = response_oracle(arr, p.arrival_at_ris, WAVELENGTH)
            for k in range(arr.size):
                want[k] += p.gain * resp[k]
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_empty_paths_raise(self):
        arr = make_array(2, 2)
        with pytest.raises(ChannelError):
            mu_ris_channel([], arr, WAVELENGTH)
        with pytest.raises(ChannelError):
            ris_ap_channel([], arr, arr, WAVELENGTH)

    def test_single_path_rank_one(self):
        ris, ap = make_array(3, 3), make_array(2, 2, axis_a="X")
        path = RisApPath(1.0 + 0j, AnglePair(0.7, 1.1), AnglePair(2.0, 0.4))
        H = ris_ap_channel([path], ris, ap, WAVELENGTH)
        assert np.linalg.matrix_rank(H) == 1
        assert H[0, 0] == pytest.approx(1.0)

    def test_frobenius_norm_single_path(self):
        ris, ap = make_array(3, 4), make_array(4, 2, axis_a="X")
        beta = 0.2 + 0.9j
        path = RisApPath(beta, AnglePair(0.7, 1.1), AnglePair(2.0, 0.4))
        H = ris_ap_channel([path], ris, ap, WAVELENGTH)
        assert np.linalg.norm(H) == pytest.approx(
            abs(beta) * math.sqrt(ris.size * ap.size), rel=1e-12)

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(5)
        ris, ap = make_array(3, 3), make_array(2, 3, axis_a="X")
        paths = [RisApPath(complex(rng.normal(), rng.normal()),
                           random_angles(rng), random_angles(rng))
                 for _ in range(3)]
        got = ris_ap_channel(paths, ris, ap, WAVELENGTH)
        want = np.zeros((ap.size, ris.size), dtype=complex)
        for p in paths:
            a_ap = response_oracle(ap, p.arrival_at_ap, WAVELENGTH)
            a_ris = response_oracle(ris, p.departure_at_ris, WAVELENGTH)
            for r in range(ap.size):
                for c in range(ris.size):
                    want[r, c] += p.gain * a_ap[r] * np.conj(a_ris[c])
        np.testing.assert_allclose(got, want, rtol=1e-12)


class TestStcrv:
    def test_coherent_combining_identity_phase_matrix(self):
        # matching RIS angles on both links: inner product = element count
        ris, ap = make_array(3, 3), make_array(2, 2, axis_a="X")
        ris_ang, ap_ang = AnglePair(0.9, 1.3), AnglePair(1.8, 0.2)
        alpha, beta = 0.5 + 0.1j, -0.3 + 0.7j
        g = mu_ris_channel([MuRisPath(alpha, ris_ang)], ris, WAVELENGTH)
        H = ris_ap_channel([RisApPath(beta, ris_ang, ap_ang)], ris, ap, WAVELENGTH)
        h = stcrv(H, np.eye(ris.size), g)
        expected = alpha * beta * ris.size * upa_response(ap, ap_ang, WAVELENGTH)
        np.testing.assert_allclose(h, expected, rtol=1e-12)

    def test_zero_input_vector(self):
        H = np.ones((4, 3), dtype=complex)
        np.testing.assert_array_equal(stcrv(H, np.eye(3), np.zeros(3)), np.zeros(4))

    def test_matches_chain_oracle(self):
        rng = np.random.default_rng(6)
        M, N = 12, 9
        H = rng.normal(size=(M, N)) + 1j * rng.normal(size=(M, N))
        psi = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
        g = rng.normal(size=N) + 1j * rng.normal(size=N)
        got = stcrv(H, psi, g)
        want = np.zeros(M, dtype=complex)
        for r in range(M):
            for c in range(N):
                for k in range(N):
                    want[r] += H[r, c] * psi[c, k] * g[k]
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_dimension_mismatch_names_pair(self):
        with pytest.raises(ChannelError, match="H columns"):
            stcrv(np.ones((4, 3)), np.eye(2), np.ones(2))
        with pytest.raises(ChannelError, match="psi columns"):
            stcrv(np.ones((4, 3)), np.ones((3, 2)), np.ones(3))

    def test_linearity(self):
        rng = np.random.default_rng(7)
        H = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
        psi = np.diag(np.exp(1j * rng.uniform(0, 2 * math.pi, 4)))
        g1 = rng.normal(size=4) + 1j * rng.normal(size=4)
        g2 = rng.normal(size=4) + 1j * rng.normal(size=4)
        np.testing.assert_allclose(
            stcrv(H, psi, g1 + g2), stcrv(H, psi, g1) + stcrv(H, psi, g2),
            rtol=1e-12)


class TestReceiver:
    def test_noise_free_scaling(self):
        h = np.array([1 + 1j, 2 - 1j, 0.5j])
        y = received_signal(h, 4.0, 1.0, 0.0, np.random.default_rng(0))
        np.testing.assert_allclose(y, 2.0 * h, rtol=1e-15)

    def test_noise_variance_monte_carlo(self):
        rng = np.random.default_rng(1)
        h = np.zeros(100, dtype=complex)
        draws = np.concatenate([
            received_signal(h, 1.0, 1.0, 0.25, rng) for _ in range(1000)])
        var = np.mean(np.abs(draws) ** 2)
        assert var == pytest.approx(0.25, rel=0.05)

    def test_pilot_phase_rotation_invertible(self):
        h = np.array([1 + 2j, -0.5 + 0.25j])
        s = np.exp(1j * math.pi / 4)
        y = received_signal(h, 9.0, s, 0.0, np.random.default_rng(0))
        np.testing.assert_allclose(y / (3.0 * s), h, rtol=1e-15)

    def test_pilot_must_be_unit_modulus(self):
        with pytest.raises(ChannelError):
            received_signal(np.ones(2, dtype=complex), 1.0, 2.0, 0.0,
                            np.random.default_rng(0))

    def test_estimate_single_slot_noiseless(self):
        h = np.array([0.3 - 0.4j, 1.0 + 0j])
        y = received_signal(h, 4.0, 1.0, 0.0, np.random.default_rng(0))
        np.testing.assert_allclose(estimate_stcrv([y], [1.0], 4.0), h, rtol=1e-15)

    def test_estimate_residual_variance(self):
        rng = np.random.default_rng(2)
        h = np.zeros(64, dtype=complex)
        tau, p, d2 = 64, 2.0, 0.5
        pilots = np.exp(1j * rng.uniform(0, 2 * math.pi, tau))
        residuals = []
        for _ in range(500):
            obs = [received_signal(h, p, s, d2, rng) for s in pilots]
            residuals.append(estimate_stcrv(obs, pilots, p))
        var = np.mean(np.abs(np.concatenate(residuals)) ** 2)
        assert var == pytest.approx(d2 / (tau * p), rel=0.10)

    def test_round_trip_identity_repeated_slots(self):
        h = np.array([1 + 1j, -2j, 0.7])
        pilots = [1.0, 1j, -1.0, -1j]
        obs = [received_signal(h, 2.0, s, 0.0, np.random.default_rng(0))
               for s in pilots]
        np.testing.assert_allclose(estimate_stcrv(obs, pilots, 2.0), h,
                                   rtol=1e-14, atol=1e-15)

    def test_constant_observations_unit_pilots(self):
        y = np.array([2 + 2j, 4.0])
        est = estimate_stcrv([y, y, y], [1.0, 1.0, 1.0], 4.0)
        np.testing.assert_allclose(est, y / 2.0, rtol=1e-15)

    def test_empty_observations_raise(self):
        with pytest.raises(ChannelError):
            estimate_stcrv([], [], 1.0)
