"""Frame grouping, per-group decomposition, reconstruction and segmentation."""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .metrics import label_components, max_normalize
from .solver import SolverParams, decompose

__all__ = [
    "SequenceTooShort",
    "FrameSequence",
    "Component",
    "Segmentation",
    "GroupRecord",
    "DetectionResult",
    "group_starts",
    "group_frames",
    "reconstruct",
    "segment",
    "detect",
    "default_threads",
]


class SequenceTooShort(ValueError):
    pass


@dataclass
class FrameSequence:
    """Grayscale frames of equal size with intensities in ``[0, 1]``."""

    frames: list
    paths: list = field(default_factory=list)
    bit_depth: int = 0

    def __post_init__(self):
        if not self.frames:
            raise ValueError("empty frame sequence")
        self.frames = [np.asarray(f, dtype=np.float64) for f in self.frames]
        shape = self.frames[0].shape
        for f in self.frames:
            if f.ndim != 2 or f.shape != shape:
                raise ValueError("frames must be 2-D and share one shape")
            if not np.all(np.isfinite(f)) or f.min() < 0.0 or f.max() > 1.0:
                raise ValueError("frame intensities must lie in [0, 1]")

    def __len__(self):
        return len(self.frames)

    @property
    def shape(self):
        return self.frames[0].shape


def group_starts(n_frames, L):
    """First frame index of every group.

    Groups are consecutive and disjoint; when ``L`` does not divide
    ``n_frames`` the last group is the final ``L`` frames.
    """
    if L < 2:
        raise ValueError("L must be >= 2")
    if n_frames < L:
        raise SequenceTooShort(f"{n_frames} frames, need at least L={L}")
    starts = list(range(0, n_frames - L + 1, L))
    if starts[-1] + L < n_frames:
        starts.append(n_frames - L)
    return starts


def group_frames(seq, L):
    """Stack each group of ``L`` frames into an ``(h, w, L)`` tensor."""
    frames = seq.frames if isinstance(seq, FrameSequence) else list(seq)
    return [np.stack(frames[s:s + L], axis=2) for s in group_starts(len(frames), L)]


def reconstruct(decomps, starts, n_frames):
    """Per-frame ``(fB, fT, fN)`` lists from group decompositions.

    A frame covered by two groups takes its slices from the earlier group.
    """
    fb, ft, fn = [None] * n_frames, [None] * n_frames, [None] * n_frames
    for dec, s in zip(decomps, starts):
        for k in range(dec.B.shape[2]):
            i = s + k
            if i < n_frames and fb[i] is None:
                fb[i] = dec.B[:, :, k]
                ft[i] = dec.T[:, :, k]
                fn[i] = dec.N[:, :, k]
    if any(f is None for f in fb):
        raise ValueError("groups do not cover every frame")
    return fb, ft, fn


@dataclass
class Component:
    row: float
    col: float
    pixels: int
    peak: float


@dataclass
class Segmentation:
    mask: np.ndarray
    components: list
    threshold: float


def segment(ft, k=3.0, vmin=0.85):
    """Adaptive threshold ``max(vmin, mean + k * std)`` on the max-normalized target image.

    Pixels strictly above the threshold form the mask; components use
    8-connectivity.
    """
    ft = np.asarray(ft, dtype=np.float64)
    norm = max_normalize(ft)
    thr = max(vmin, float(norm.mean() + k * norm.std()))
    mask = norm > thr
    comps = [
        Component(r, c, len(pix), float(ft[pix[:, 0], pix[:, 1]].max()))
        for r, c, pix in label_components(mask)
    ]
    return Segmentation(mask, comps, thr)


@dataclass
class GroupRecord:
    start: int
    iterations: int
    final_residual: float
    converged: bool


@dataclass
class DetectionResult:
    background: list
    target: list
    noise: list
    segmentations: list
    groups: list
    wall_time: float = 0.0

    @property
    def masks(self):
        return [s.mask for s in self.segmentations]


def default_threads():
    env = os.environ.get("STTD_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def detect(seq, params=None, k=3.0, vmin=0.85, threads=None):
    """Group, decompose, reconstruct and segment a whole sequence.

    Groups are solved in a thread pool of ``threads`` workers; results do
    not depend on the worker count.
    """
    params = params or SolverParams()
    if not isinstance(seq, FrameSequence):
        seq = FrameSequence(list(seq))
    t0 = time.perf_counter()
    starts = group_starts(len(seq), params.L)
    tensors = group_frames(seq, params.L)
    threads = threads or default_threads()
    if threads > 1 and len(tensors) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            decomps = list(pool.map(lambda d: decompose(d, params), tensors))
    else:
        decomps = [decompose(d, params) for d in tensors]
    fb, ft, fn = reconstruct(decomps, starts, len(seq))
    segs = [segment(t, k, vmin) for t in ft]
    groups = [GroupRecord(s, d.iterations, d.final_residual, d.converged)
              for s, d in zip(starts, decomps)]
    return DetectionResult(fb, ft, fn, segs, groups, time.perf_counter() - t0)
