"""Stabilizer simulation: circuit IR, CHP tableau and Pauli-frame sampler."""

from .circuit import AllOf, AllZero, Binding, Circuit, DecodeCheck, FeedForward, Gate, PairCheck, Repeat
from .frame import FrameRecord, count_sites, reference_slots, sample
from .noise import NOISELESS, NoiseModel
from .tableau import RunRecord, Tableau, outcome_distribution, simulate

__all__ = [
    "AllOf", "AllZero", "Binding", "Circuit", "DecodeCheck", "FeedForward", "Gate", "PairCheck",
    "Repeat", "FrameRecord", "count_sites", "reference_slots", "sample", "NOISELESS", "NoiseModel", "RunRecord",
    "Tableau", "outcome_distribution", "simulate",
]
