"""Dynamical Brownian last passage percolation: simulation and measurement."""
from ._accel import BACKEND
from .grid import (BrownianField, FieldDelta, GridSpec, apply_delta, dump_field, load_field,
                   reflect, resample_block, revert_delta, sample_field, scaled_copy)
from .lpp import (DPForward, Point, RoutedProfile, Staircase, disjoint_passage, geodesic,
                  line_ensemble_point, passage_time, peak_set, q_linear, routed_profile,
                  staircase_weight, twin_peak_event)
from .coarse import ExtentMeasures, IntervalSet, Rect, coarse_set, extent, mset
from .dynamics import (InvariantViolation, Tracker, excursion_decompose, loc_classify, replay,
                       run_pair_dynamics, switch_delta)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BrownianField", "FieldDelta", "GridSpec", "apply_delta", "dump_field", "load_field",
    "reflect", "resample_block", "revert_delta", "sample_field", "scaled_copy",
    "DPForward", "Point", "RoutedProfile", "Staircase", "disjoint_passage", "geodesic",
    "line_ensemble_point", "passage_time", "peak_set", "q_linear", "routed_profile",
    "staircase_weight", "twin_peak_event",
    "ExtentMeasures", "IntervalSet", "Rect", "coarse_set", "extent", "mset",
    "InvariantViolation", "Tracker", "excursion_decompose", "loc_classify", "replay",
    "run_pair_dynamics", "switch_delta",
]
