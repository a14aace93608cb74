"""Numerical workbench for (4+1)-dimensional Yang-Mills fields.

Modules: algebra (Lie kernel), grid (4D grid/FFT), gaugefield (connections,
curvature, topology), heatflow (gradient flow, caloric machinery), tangent
(linearized flow, div-curl), wave (temporal-gauge evolution), spectral
(Littlewood-Paley, energy dispersion, null-form symbol), morawetz (weighted
energy monotonicity), data (initial-data factory), workbench (CLI, I/O).
"""

__version__ = "0.1.0"
