"""Relative extremal functions in a Hartogs domain: geometry, witness
function, and a discrete envelope solver.
"""

__version__ = "0.1.0"
