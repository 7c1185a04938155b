"""Numerical laboratory for the quantitative orbit method on small groups.

Symbols on duals of low-dimensional Lie algebras, the symbol-to-operator map
Op_h, star products and their asymptotic expansions, coadjoint-orbit measures
with the Kirillov trace identity, branching-pair stability with its torsor
geometry, and relative-character asymptotics, all at exactly checkable desk
scale.
"""
__all__ = ["liecore", "symbols", "starprod", "orbits", "quantize", "ggp", "relchar",
           "config", "experiments", "figures", "cli"]

__version__ = "0.1.0"
