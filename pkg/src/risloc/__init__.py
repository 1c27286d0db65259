"""RIS-aided mmWave fingerprint positioning: synthetic space-time channel
response fingerprints and a residual convolution regression network, built
on numpy with from-scratch backpropagation."""

from .geometry import (AnglePair, Box3D, ConfigError, GeometryError,
                       MuRisPath, Position3D, RisApPath, SceneConfig,
                       UpaConfig, dbm_to_watts, direction_angles,
                       grid_positions, synth_mu_ris_paths, synth_ris_ap_paths)
from .channel import (ChannelError, estimate_stcrv, mu_ris_channel,
                      received_signal, ris_ap_channel, stcrv, upa_response)
from .config import GridSpec, RunConfig, load_run_config
from .dataset import (Dataset, DatasetError, DatasetManifest, Sample,
                      assemble_sample, build_dataset, decompose_complex,
                      deserialize, reshape_to_stcrm, serialize)
from .layers import finite_diff_gradcheck, mse_loss
from .network import (NetworkSpec, build_network, load_checkpoint, predict,
                      save_checkpoint)
from .training import (MetricsRow, TrainConfig, evaluate_rmse,
                       export_metrics, train)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
