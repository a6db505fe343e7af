"""collapsesim: simulation and closed-form analysis of model collapse.

A discrete next-token distribution is recursively re-estimated from samples
of its own predecessors.  This package simulates that Markov chain on the
simplex under several training-data schedules, computes the matching
closed-form predictions and concentration bounds, and ships a CLI that
reproduces the reference experiments as CSV tables and self-contained SVG
plots.
"""

__version__ = "0.1.0"

from . import analytics, cli_io, dist_core, schedules, simulate, softmax_check  # noqa: F401
from .backends import available as available_backends  # noqa: F401
from .backends import default_name as default_backend  # noqa: F401
