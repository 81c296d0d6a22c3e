"""Small-target detection in frame sequences by low-rank + sparse + noise tensor decomposition."""

__version__ = "0.1.0"

from .solver import Decomposition, SolverParams, decompose
from .pipeline import FrameSequence, detect, segment
from .synth import SceneSpec, TargetSpec, generate

__all__ = [
    "Decomposition",
    "SolverParams",
    "decompose",
    "FrameSequence",
    "detect",
    "segment",
    "SceneSpec",
    "TargetSpec",
    "generate",
]
