"""Remote and remotest projections onto families of closed convex sets,
the Weak Greedy Algorithm, and diagnostics for their convergence."""
from .hilbert import axpy, inner, norm
from .sets import (Ball, Box, ConvexSet, HalfSpace, Hyperplane, AffineHyperplane, Line,
                   Slab, Subspace, distance, estimate_quasi_symmetry, project)
from .schedules import (Schedule, build_extremal_witness, check_window_condition,
                        partial_sum_diagnostics, t_at)
from .engine import SelectionPolicy, Trace, effective_weakness, run_remote, run_wga
from .diagnostics import (check_energy, check_rate_bound, check_sin_summability,
                          detect_convergence)
from .scenarios import ScenarioConfig, ball_interior, cap_lines, quasi_periodic, stripe_example

__version__ = "0.1.0"
