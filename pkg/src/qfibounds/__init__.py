"""Gauge-optimised upper bounds on the quantum Fisher information of channel strategies."""

__version__ = "0.1.0"

from .bounds import ALL_KINDS, BoundKind, BoundSeries, compute_bounds  # noqa: E402
from .channel import Channel, build_model, load_channel  # noqa: E402
from .errors import InfeasibleError, InvalidInputError, SolverError, UnsupportedError  # noqa: E402
from .gauge import GTable, brute_force_g, compute_l, compute_r, g_of_b, g_table  # noqa: E402
from .qfi import qfi_mixed, qfi_pure, simulate_intro  # noqa: E402

__all__ = [
    "ALL_KINDS", "BoundKind", "BoundSeries", "compute_bounds", "Channel", "build_model",
    "load_channel", "InfeasibleError", "InvalidInputError", "SolverError", "UnsupportedError",
    "GTable", "brute_force_g", "compute_l", "compute_r", "g_of_b", "g_table",
    "qfi_mixed", "qfi_pure", "simulate_intro",
]
