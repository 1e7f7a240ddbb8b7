"""Affine thickness of compact sets in R^n under diagonal contractions.

Submodules: ``geometry`` (boxes, sizes, bridging thresholds), ``thickness``,
``carpets``, ``game``, ``certificates``, ``gaplemma`` and ``cli``.
"""

__version__ = "0.1.0"
