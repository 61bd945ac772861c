"""Zeros of derivatives of iterated polynomials and the harmonic measure.

Submodules: ``polycore`` (polynomial arithmetic), ``jets`` (Taylor jets
through iteration), ``rootfinder`` (Aberth iteration), ``potential`` (Green
function, Brolin sampling, grid potentials), ``bell`` (composition
polynomials), ``linearize`` (Koenigs and Fatou coordinates), ``equidist``
(end-to-end checks) and ``cli``.
"""

__version__ = "0.1.0"
