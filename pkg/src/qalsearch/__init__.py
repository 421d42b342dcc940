"""Kernel-surrogate active learning for dopant placement in clusters.

Classical (DotProduct + White, Constant * RBF) and simulated quantum
(fidelity and projected) kernels drive a Gaussian-process agent that picks
which homotops to evaluate next.
"""
from ._backend import BACKEND
from .config import AlConfig, load_config
from .driver import aggregate_runs, prepare, run_experiment

__version__ = "0.1.0"

__all__ = ["AlConfig", "BACKEND", "aggregate_runs", "load_config", "prepare", "run_experiment"]
