"""Exact verification engine for the level -1/2 Fock representation of the
quantum N-toroidal algebra of type C_n."""

__version__ = "0.1.0"
