"""
DLA-1D - One-dimensional diffusion-limited aggregation simulator

Event-driven simulation of a moving front fed by random walkers, its two
caricatures, and the statistics used to read growth laws off ensembles.
"""

__version__ = "1.0.0"
__description__ = "Simulate and check growth laws of one-dimensional DLA"
