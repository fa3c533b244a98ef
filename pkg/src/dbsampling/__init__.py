"""Sampling theory in de Branges spaces built from regular Schrodinger operators.

The package computes the Neumann wave solutions xi(x, z) of -u'' + V u = z u,
the spectra of the selfadjoint realizations on [0, s], the reproducing kernels
of the associated spaces of entire functions, and the three sampling schemes
that live on top of them: plain Kramer-type reconstruction, noise-robust
oversampling with a weighted kernel, and aliasing-controlled undersampling.
"""

from .numerics import (Grid, NoiseSample, NumericsError, Tolerances,
                       find_root_bracketed, integrate, make_grid, uniform_noise)
from .schrodinger import (Potential, SolverError, WaveField, greens, wave_table,
                          xi_picard, xi_solve)

__all__ = [
    "Grid", "NoiseSample", "NumericsError", "Tolerances", "find_root_bracketed",
    "integrate", "make_grid", "uniform_noise",
    "Potential", "SolverError", "WaveField", "greens", "wave_table",
    "xi_picard", "xi_solve",
]

__version__ = "0.1.0"
