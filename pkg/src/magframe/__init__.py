"""Magnetic Gabor frames and magnetic Weyl (super) operator calculus on grids."""
__version__ = "0.1.0"
