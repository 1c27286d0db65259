"""Walk through the channel model: from geometry to a position fingerprint.

Synthesizes the two-hop channel for a single user, inspects the gains and
angles of each propagation path, and then shows the property that makes
fingerprint positioning work at all: nearby positions produce correlated
space-time channel response vectors, distant ones do not.

Run with:  python3 demos/fingerprint_scene.py
"""
import numpy as np

from risloc import (Position3D, SceneConfig, dbm_to_watts, estimate_stcrv,
                    mu_ris_channel, received_signal, ris_ap_channel, stcrv,
                    synth_mu_ris_paths, synth_ris_ap_paths)


def describe_paths(scene, user):
    rng = np.random.default_rng(42)
    paths = synth_mu_ris_paths(scene, user, rng)
    print(f"user at ({user.x}, {user.y}, {user.z}) m, "
          f"{len(paths)} path(s) to the reflecting surface:")
    for i, p in enumerate(paths):
        kind = "direct" if i == 0 else "scattered"
        ang = p.arrival_at_ris
        print(f"  path {i}: {kind:9s} |gain| = {abs(p.gain):.3e}, "
              f"elevation = {np.degrees(ang.elevation):6.1f} deg, "
              f"azimuth = {np.degrees(ang.azimuth):6.1f} deg")
    return paths


def noisy_fingerprint(scene, H, psi, user, rng):
    """Pilot round trip: transmit, observe, and average the estimates."""
    g = mu_ris_channel(synth_mu_ris_paths(scene, user, rng), scene.ris,
                       scene.wavelength)
    h = stcrv(H, psi, g)
    p_w = dbm_to_watts(scene.tx_power_dbm)
    n_w = dbm_to_watts(scene.noise_power_dbm)
    pilots = [1.0 + 0.0j] * scene.pilot_length
    obs = [received_signal(h, p_w, s, n_w, rng) for s in pilots]
    return estimate_stcrv(obs, pilots, p_w)


def correlation(a, b):
    return abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))


def main():
    scene = SceneConfig()
    print("=== propagation paths ===")
    user = Position3D(-10.0, 2.9, 1.5)
    user_paths = describe_paths(scene, user)

    print("\n=== channel matrices ===")
    rng = np.random.default_rng(scene.rng_seed)
    surface_paths = synth_ris_ap_paths(scene, rng)
    H = ris_ap_channel(surface_paths, scene.ris, scene.ap, scene.wavelength)
    g = mu_ris_channel(user_paths, scene.ris, scene.wavelength)
    n_elements = scene.ris.count_a * scene.ris.count_b
    psi = np.eye(n_elements, dtype=complex)    # surface left un-steered
    h = stcrv(H, psi, g)
    print(f"surface->receiver channel H: {H.shape} "
          f"({len(surface_paths)} paths across a {n_elements}-element surface)")
    print(f"user->surface channel g: {g.shape}")
    print(f"fingerprint h = H Psi g: {h.shape}, |h| mean = {abs(h).mean():.3e}")

    print("\n=== fingerprints separate nearby from distant positions ===")
    print("correlation of noisy fingerprint estimates vs. displacement:")
    base = noisy_fingerprint(scene, H, psi, user, np.random.default_rng(0))
    for dx in (0.05, 0.2, 1.0, 3.0):
        other = Position3D(user.x + dx, user.y, user.z)
        est = noisy_fingerprint(scene, H, psi, other, np.random.default_rng(1))
        print(f"  displacement {dx:4.2f} m -> correlation "
              f"{correlation(base, est):.3f}")
    m = scene.ap.count_a * scene.ap.count_b
    print("\nThe decay of this curve is the spatial signature the regression")
    print(f"network learns to invert; the receiver sees a {m}-antenna array,")
    print("so each fingerprint reshapes into a 2-channel image of that response.")


if __name__ == "__main__":
    main()
