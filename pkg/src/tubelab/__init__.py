"""Numerical laboratory for thin tubes in quotients of hyperbolic space.

Submodules:

* ``hyperbolic``, ``rotations``: hyperboloid model, loxodromic isometries, rotation normal forms
* ``tube``, ``torus``: Margulis tubes, orbit counting, the flat torus model
* ``grids``, ``warped``: warped-product metrics on (r, t) grids and their curvature operators
* ``newton``: Newton solver for the gauged Einstein equation
* ``spectral``: spectral gap, weighted identity, cutoffs, norms, transfer and conditioning checks
* ``experiments``, ``reports``, ``cli``: sweeps and deterministic output
"""
__version__ = "0.1.0"
