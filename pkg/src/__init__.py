"""asappp-sir - SIR distributions of cellular networks and the ASAPPP approximation."""

__version__ = "1.0.0"
