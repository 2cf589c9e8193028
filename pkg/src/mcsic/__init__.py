"""Link-level Monte Carlo simulator for multicarrier DS-CDMA SIC receivers."""

__version__ = "0.1.0"
