"""
DLA-1D Test Suite

- Unit tests for samplers, models and estimators
- Integration tests for ensembles and the command line
- End-to-end acceptance runs (marked slow)
"""

__version__ = "1.0.0"
