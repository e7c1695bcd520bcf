"""Symmetry analysis and numerics for u_t = [G(x) A(u) u_x]_x + W(t)."""

__version__ = "0.1.0"
