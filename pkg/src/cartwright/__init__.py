"""Numerical companion to two-sided growth estimates for harmonic functions in the ball.

Modules: ``ball`` (kernel averages and extensions), ``weights`` (weight
families and their regularity conditions), ``surface`` (the auxiliary
surface and v_a), ``verifier`` (end-to-end checks over depth grids),
``extremal`` (the log-polynomial sharpness example) and ``cli``.
"""
__version__ = "0.1.0"
