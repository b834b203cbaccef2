"""Gabor pulse design, lattice OFDM transceivers, WSSUS channels and weighted kernel algebras."""

__version__ = "0.1.0"
