"""Multi-tier supply chain simulator with name-your-own-price procurement."""

__version__ = "0.1.0"
