"""
Fidelity Hierarchy Engine - symmetry-reduced SDP upper bounds on channel fidelity

Assembles and solves the level-n semidefinite relaxation of the channel
fidelity problem in the permutation-invariant orbit basis, with a dense
reference construction for small levels.
"""

__version__ = "2.0.0"
