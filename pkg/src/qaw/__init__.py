"""qaw: a desk-scale workbench for Q-switched dye-laser kinetics, barrier
tunnelling, adiabatic global optimization, and a Bethe-lattice DMFT loop."""

from .config import (DmftSettings, OptimizeSettings, RunConfig,
                     TunnelSettings, load_config, parse_config,
                     serialize_config)
from .csvio import emit_csv, format_float
from .dmft import (DmftState, HubbardParams, MatsubaraGreen, bath_update,
                   lattice_green, matsubara_grid, self_consistency_loop,
                   solve_impurity, weiss_field)
from .laser import (DerivedParams, LaserConfig, PulseMetrics, PulseTrace,
                    RateState, derive_params, euler_step, pulse_metrics,
                    simulate, sweep_energy, sweep_timestep)
from .optimizer import (AdiabaticSchedule, CandidateList, EnergyModel,
                        GapCandidate, IsingSpec, OptimizerReport, ScalingRow,
                        WorkingGap, enumerate_candidates, evolve,
                        greedy_descent, make_barrier_map, map_schedule,
                        reduce, scaling_experiment, select_best, select_gap)
from .reproduce import ManifestEntry, ReproManifest, reproduce
from .tunneling import (ELECTRON_MASS, EV_J, HBAR, TunnelBarrier,
                        TunnelResult, average_electron_energy,
                        barrier_height_bohr, transmission)

__version__ = "0.1.0"
