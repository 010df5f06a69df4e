"""Preimage counting, pseudo-lemniscate classification and Blaschke models."""
from .errors import *  # noqa: F401,F403
from .expr import INF, FunctionDef, parse
from .geometry import JordanCurve, circle, rounded_polygon
from .config import ToleranceConfig, DEFAULT_TOLERANCES
from .counting import count_preimages, count_on_grid, PreimageCountReport
from .analysis import SamplePlan, classify, non_jordan_test, sample_faces

__version__ = "0.1.0"
