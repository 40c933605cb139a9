"""Arrow of time for a continuously monitored qubit."""
__version__ = "0.1.0"
