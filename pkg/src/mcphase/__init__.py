"""Multi-qubit controlled phase gates: synthesis, NMR pulse compilation and simulated benchmarks."""

__version__ = "0.1.0"
