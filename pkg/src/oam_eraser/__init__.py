"""Simulation of a quantum eraser built on OAM phase structure.

A single photon crosses a Mach-Zehnder interferometer whose lower arm holds
a spiral phase plate. The plate tags the path with orbital angular momentum,
and laterally shifted plates at the outputs can erase that tag again.
"""

from .analysis import (SCENARIOS, CosineFit, SweepConfig, SweepResult, calibrate_to_visibility,
                       fit_cosine, run_sweep, visibility)
from .detection import (CountingConfig, ProjectorSpec, coincidence_rate, photon_spacing,
                        projection_probability, simulate_counts)
from .elements import (ElementOp, ShiftedSppSpec, beam_splitter, compose, mirror, phase_shifter,
                       spp_centered, spp_shifted_ideal)
from .errors import (CalibrationError, ConfigError, DomainError, FitError, OamSimError,
                     TruncationError)
from .field_oracle import (FieldGrid, GridParams, LgSpec, apply_spp_mask, azimuthal_spectrum,
                           calibrate_shifted_spp, lg_mode, overlap)
from .interferometer import MziConfig, OutputStates, apply_eraser, propagate
from .mode_core import ModeState, TwoPortState, basis_state, inner_product, norm, normalize

__version__ = "0.1.0"
