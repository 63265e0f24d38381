"""Solvers for the fractional wave extension problem.

The degenerate wave equation ``u_tt + ((1 - 2σ)/t) u_t = -L u`` is solved
three independent ways (oscillatory subordination, Bessel spectral
multipliers, ball kernels) and the results are cross-checked.
"""

__version__ = "0.1.0"
