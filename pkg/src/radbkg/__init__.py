"""Natural radiation background rates in superconducting-device substrates."""

__version__ = "0.1.0"
