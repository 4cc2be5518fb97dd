"""Unified-transform spectral analysis of the Chen-Lee-Liu derivative NLS
equation on the half-line.

The package is organised by stage of the pipeline:

``core``       2x2 algebra, spectral phases, region classification, the 1-form
``potential``  direct solver and the sampled potential field
``volterra``   eigenfunctions of the gauge-transformed Lax pair
``spectral``   scattering data, sectional matrix, jumps, zeros, global relation
``inverse``    reconstruction of the potential and its boundary values
``cli``        batch front end
"""

__version__ = "0.1.0"
