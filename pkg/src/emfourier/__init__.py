"""Multi-frequency inverse source reconstruction for time-harmonic Maxwell sources.

A current ``J = p f + p x grad g`` supported in a cube is recovered from
tangential electric traces on a sphere at a finite set of wavenumbers by
explicit formulas for its Fourier coefficients.
"""

__version__ = "0.1.0"
