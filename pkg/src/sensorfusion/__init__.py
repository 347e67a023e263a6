"""Multi-sensor ptychography: off-axis propagation, simulation and reconstruction."""

from .errors import NumericalError, PositionError, ValidationError
from .evaluation import (LineSetRegion, VisibilityReport, detection_na, fringe_visibility,
                         normalize_transmittance, theoretical_resolution)
from .forward import Dataset, SceneModel, SensorSpec, exit_field, predict_dataset, predict_intensity
from .grid import ComplexField, GridSpec, RealField, fft2_centered, ifft2_centered, total_energy
from .optimization import (LossReport, OptimizerState, ReconstructionConfig, adam_step,
                           loss_gradient, mixed_loss, mse, reconstruct)
from .propagation import (BandLimit, PropagationPlan, band_limit, propagate_asm,
                          propagate_padded_oracle, propagate_shifted_asm, transfer_function)
from .estimator import FusionReconstructor
from .scan import ScanPattern, overlap_fraction, poisson_disk
from .simulator import (LineSet, NoiseSpec, TargetSpec, make_probe, make_resolution_target,
                        simulate_dataset)

__version__ = "0.1.0"
