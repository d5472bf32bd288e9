"""Numerical laboratory for the normalized Sasaki-Ricci flow on U(1)-symmetric models."""

from .errors import (ConfigurationError, EigensolverError, FitUnavailableError,
                     GridMismatchError, InadmissiblePotentialError,
                     PathTerminationError, RenormalizationUnavailableError,
                     SasakiflowError, StiffStepError)
from .spectral import Field, Grid, differentiate, gauss_legendre_rule, integrate, make_grid
from .geometry import (BackgroundGeometry, GeometryConfig, MetricState, SasakiScalars,
                       density, dhomothety, einstein_normalizing_factor, grad_norm_sq,
                       make_background, moment_map, reconstruct_sasaki_curvature,
                       ricci_potential, transverse_diameter, validate_state)
from .functionals import (DiagnosticsRow, EnergyReport, bochner_kodaira_residual,
                          diagnostics, dirichlet_y, energy_functionals, futaki,
                          poincare_slack, y_evolution_residual)
from .stability import (ConditionFlags, SpectrumReport, assemble_L, condition_flags,
                        eigen_spectrum, equivalence_monitor, fit_decay_rate, shi_monitor)
from .flow import (FlowConfig, Renormalization, Snapshot, Trajectory, Verdict,
                   detect_limit, renormalize_initial, run, step)
from .continuity import (ContinuityPath, NewtonConfig, path_monotonicity, solve_path)

__version__ = "0.1.0"
