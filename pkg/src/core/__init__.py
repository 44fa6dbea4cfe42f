"""
DLA-1D Core Components

This package contains the simulation and estimation components:
- rng: seeded substreams and exact samplers
- field: Poisson initial field and window sizing
- dla: the true model with exact and fast (sleep/wake) modes
- caricature: Caricature I (red recruitment) and Caricature II (relative positions)
- lyapunov: L~, Q~, regenerations, speed and drift estimators, FKG check
- stats / ensemble: cross-run summaries and growth-law estimators
- outputs: CSV and JSON result files
"""
