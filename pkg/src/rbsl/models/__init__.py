from rbsl.models.base import CountingModel, SimulatorModel
from rbsl.models.ma1 import (
    MA1Model,
    ma1_limit,
    simulate_ma1,
    simulate_sv,
    summary_autocov,
    sv_limit,
)
from rbsl.models.normal import (
    NormalModel,
    contamination_scale,
    generate_contaminated,
    simulate_normal,
    standardize_to_moments,
    summary_normal,
)
from rbsl.models.stable import sample_stable
from rbsl.models.toad import ToadModel, simulate_toads, summary_toads

MODELS = {"normal": NormalModel, "ma1": MA1Model, "toad": ToadModel}

__all__ = [
    "CountingModel",
    "MA1Model",
    "MODELS",
    "NormalModel",
    "SimulatorModel",
    "ToadModel",
    "contamination_scale",
    "generate_contaminated",
    "ma1_limit",
    "sample_stable",
    "simulate_ma1",
    "simulate_normal",
    "simulate_sv",
    "simulate_toads",
    "standardize_to_moments",
    "summary_autocov",
    "summary_normal",
    "summary_toads",
    "sv_limit",
]
