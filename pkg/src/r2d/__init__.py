"""Exact finite-depth computations for rank-2 shift models: patterns, bimodules, groupoids and K-theory."""
from .errors import R2DError, ValidationError
from .models import (FiberMeasureSystem, ModelHandle, Rank2Graph, RectPattern, SftSpec, build_model,
                     enumerate_patterns, ledrappier_spec, single_vertex_graph)

__all__ = ["R2DError", "ValidationError", "FiberMeasureSystem", "ModelHandle", "Rank2Graph", "RectPattern",
           "SftSpec", "build_model", "enumerate_patterns", "ledrappier_spec", "single_vertex_graph"]
