"""Template matching with ranks for 1-periodic signals."""
from ._backend import BACKEND
from .matcher import (ConstantTemplate, DegenerateSignal, EstimateResult, Method, RefineOpts,
                      correlate_grid, estimate, objective_rank)
from .noise import CAUCHY, GAUSSIAN, T3, NoiseModel
from .sampling import Signal, generate_signal, rank_transform
from .templates import TEMPLATE_A, TEMPLATE_B, TEMPLATE_C, Template, get_template, piecewise_linear

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CAUCHY", "ConstantTemplate", "DegenerateSignal", "EstimateResult", "GAUSSIAN",
    "Method", "NoiseModel", "RefineOpts", "Signal", "T3", "TEMPLATE_A", "TEMPLATE_B",
    "TEMPLATE_C", "Template", "correlate_grid", "estimate", "generate_signal", "get_template",
    "objective_rank", "piecewise_linear", "rank_transform",
]
