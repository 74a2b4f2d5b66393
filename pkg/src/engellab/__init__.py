"""Exact and numerical tools for the Engel group: group/Lie arithmetic,
the Montgomery spectral family, dispersion-curve critical points, the
unitary dual with its group Fourier transform, and semiclassical
wave-packet propagation experiments."""

__version__ = "0.1.0"
