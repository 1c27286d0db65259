"""End-to-end positioning on a reduced scene: generate, train, evaluate.

Uses 8x8 arrays and a coarse 3-height grid so the whole run takes well
under a minute, then prints the learning curve and the final localization
error, overall and per axis.

Run with:  python3 demos/train_positioning.py
"""
import numpy as np

from risloc import (GridSpec, NetworkSpec, Position3D, SceneConfig,
                    TrainConfig, UpaConfig, build_dataset, build_network,
                    evaluate_rmse, predict, train)


def main():
    base = SceneConfig()
    scene = SceneConfig(
        wavelength=base.wavelength,
        ap=UpaConfig(8, 8, 0.2, base.ap.center, axis_a="X", axis_b="Z"),
        ris=UpaConfig(8, 8, 0.2, base.ris.center, axis_a="Y", axis_b="Z"),
        n_paths_mu_ris=base.n_paths_mu_ris,
        n_paths_ris_ap=base.n_paths_ris_ap,
        scatter_bounds=base.scatter_bounds,
        tx_power_dbm=base.tx_power_dbm,
        noise_power_dbm=base.noise_power_dbm,
        pilot_length=base.pilot_length,
        rng_seed=0,
    )
    grid = GridSpec(length=4.0, width=3.0, spacing=0.4,
                    heights=(1.4, 1.5, 1.6), origin=Position3D(-12.0, 1.0, 0.0))

    print("synthesizing the labeled grid ...")
    train_set, test_set, manifest = build_dataset(scene, grid, 0.8, seed=0)
    print(f"  {manifest.sample_count} fingerprints "
          f"({manifest.train_count} train / "
          f"{manifest.sample_count - manifest.train_count} test), "
          f"input shape {manifest.input_shape}")

    spec = NetworkSpec(variant="rcnr", block_count=4,
                       input_shape=manifest.input_shape)
    model = build_network(spec, seed=0)
    print(f"\ntraining the {spec.block_count}-block residual network ...")
    cfg = TrainConfig(epochs=25, eval_every=5)
    model, history = train(model, train_set, test_set, manifest, cfg)
    for row in history:
        print(f"  epoch {row.epoch:3d}: train loss {row.train_loss:.4f}, "
              f"test loss {row.test_loss:.4f}, "
              f"test RMSE {row.test_rmse_m:.3f} m")

    rmse = evaluate_rmse(model, test_set, manifest)
    preds = predict(model, test_set.inputs, manifest)
    truth = manifest.denormalize_label(test_set.labels.astype(np.float64))
    per_axis = np.sqrt(((preds - truth) ** 2).mean(axis=0))
    print(f"\nfinal test RMSE: {rmse:.3f} m")
    for axis, err in zip("xyz", per_axis):
        print(f"  {axis}-axis RMSE: {err:.3f} m")
    print(f"(grid spans {grid.length} x {grid.width} m at "
          f"{grid.spacing} m spacing)")


if __name__ == "__main__":
    main()
