"""Experiment campaigns, addressed by name from the command line."""
from .common import ExperimentConfig, ExperimentOutput, FitResult, fit_linear, fit_loglog, write_outputs
from .hitsets import exp_hit_probability, exp_hitset
from .static import exp_basin, exp_peak_count, exp_transversal, exp_twin_peaks
from .stationarity import exp_stationarity
from .switching import exp_switch_scaling

REGISTRY = {
    "switch-scaling": exp_switch_scaling,
    "transversal": exp_transversal,
    "twin-peaks": exp_twin_peaks,
    "peak-count": exp_peak_count,
    "hitset": exp_hitset,
    "hit-probability": exp_hit_probability,
    "basin": exp_basin,
    "stationarity": exp_stationarity,
}


def run_experiment(name: str, config: ExperimentConfig, jobs: int = 1) -> ExperimentOutput:
    try:
        fn = REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown experiment {name!r}; choose from {', '.join(REGISTRY)}") from None
    return fn(config, jobs)


__all__ = ["REGISTRY", "run_experiment", "ExperimentConfig", "ExperimentOutput", "FitResult",
           "fit_loglog", "fit_linear", "write_outputs"]
