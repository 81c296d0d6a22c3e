"""Seeded synthetic infrared-like sequences with implanted Gaussian blob targets.

Random numbers come from numpy's PCG64 generator.  Every frame draws
from its own stream seeded with ``(seed, stream, frame)`` so frames can
be generated independently and in any order.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .metrics import Target, WindowGeometry, local_stats

__all__ = [
    "Infeasible",
    "TargetSpec",
    "SceneSpec",
    "frame_rng",
    "make_background",
    "blob",
    "add_noise",
    "generate",
    "parse_scene_spec",
    "format_scene_spec",
    "truth_csv",
    "read_truth_csv",
]

# stream ids for frame_rng
_BG, _NOISE = 1, 2


class Infeasible(ValueError):
    """Requested SCR cannot be reached with amplitude <= 1."""


@dataclass(frozen=True)
class TargetSpec:
    """One target.  Give either ``trajectory`` (one ``(row, col)`` per frame) or
    ``start`` + ``velocity`` (pixels per frame).  Give either ``scr`` or ``amplitude``."""

    start: tuple = (0.0, 0.0)
    velocity: tuple = (0.0, 0.0)
    trajectory: tuple = ()
    a: int = 3
    b: int = 3
    scr: float = None
    amplitude: float = None

    def position(self, k):
        if self.trajectory:
            r, c = self.trajectory[k]
        else:
            r = self.start[0] + self.velocity[0] * k
            c = self.start[1] + self.velocity[1] * k
        return float(r), float(c)


@dataclass(frozen=True)
class SceneSpec:
    height: int = 64
    width: int = 64
    frames: int = 3
    background: str = "flat"
    # flat: level; gradient: low, high, angle (degrees);
    # cloud: level, contrast, scale (smoothing sigma, px), drift (row, col px/frame)
    background_params: dict = field(default_factory=dict)
    targets: tuple = ()
    noise_sigma: float = 0.0
    seed: int = 0
    geometry: WindowGeometry = WindowGeometry()

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.frames < 1:
            raise ValueError("dimensions must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.background not in ("flat", "gradient", "cloud"):
            raise ValueError(f"unknown background kind {self.background!r}")
        for t in self.targets:
            if (t.scr is None) == (t.amplitude is None):
                raise ValueError("each target needs exactly one of scr / amplitude")
            for k in range(self.frames):
                r, c = t.position(k)
                if not (0 <= r < self.height and 0 <= c < self.width):
                    raise ValueError(f"target leaves the image at frame {k}")


def frame_rng(seed, stream, frame):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream, frame])))


def make_background(spec):
    """Background frames, shape ``(frames, height, width)``, values in ``[0, 1]``."""
    h, w, n = spec.height, spec.width, spec.frames
    p = spec.background_params
    if spec.background == "flat":
        bg = np.full((h, w), float(p.get("level", 0.2)))
        return np.repeat(bg[None], n, axis=0)
    if spec.background == "gradient":
        lo, hi = float(p.get("low", 0.1)), float(p.get("high", 0.5))
        ang = np.deg2rad(float(p.get("angle", 0.0)))
        yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
        proj = xx * np.cos(ang) + yy * np.sin(ang)
        span = proj.max() - proj.min()
        t = (proj - proj.min()) / span if span > 0 else np.zeros_like(proj)
        return np.repeat((lo + (hi - lo) * t)[None], n, axis=0)

    level = float(p.get("level", 0.4))
    contrast = float(p.get("contrast", 0.3))
    scale = float(p.get("scale", 6.0))
    dr, dc = (float(v) for v in p.get("drift", (0.0, 0.0)))
    pad = int(np.ceil(max(abs(dr), abs(dc)) * n)) + 1
    rng = frame_rng(spec.seed, _BG, 0)
    field_ = ndimage.gaussian_filter(rng.standard_normal((h + 2 * pad, w + 2 * pad)), scale,
                                     mode="wrap")
    field_ = (field_ - field_.mean()) / (field_.max() - field_.min())
    field_ = level + contrast * field_
    frames = []
    for k in range(n):
        shifted = ndimage.shift(field_, (dr * k, dc * k), order=1, mode="wrap")
        frames.append(shifted[pad:pad + h, pad:pad + w])
    return np.clip(np.stack(frames), 0.0, 1.0)


def blob(h, w, row, col, a, b, amplitude):
    """Truncated Gaussian ``A exp(-(dr^2 + dc^2) / (2 s^2))``, ``s = min(a, b) / 3``.

    The support is the ``a x b`` box centred on ``(row, col)``.
    """
    sg = min(a, b) / 3.0
    out = np.zeros((h, w))
    r0 = int(np.floor(row - (a - 1) / 2.0 + 0.5))
    c0 = int(np.floor(col - (b - 1) / 2.0 + 0.5))
    rr = np.arange(max(r0, 0), min(r0 + a, h))
    cc = np.arange(max(c0, 0), min(c0 + b, w))
    if rr.size == 0 or cc.size == 0:
        return out
    d2 = (rr[:, None] - row) ** 2 + (cc[None, :] - col) ** 2
    out[rr[0]:rr[-1] + 1, cc[0]:cc[-1] + 1] = amplitude * np.exp(-d2 / (2.0 * sg * sg))
    return out


def _noise_field(spec, k):
    if spec.noise_sigma == 0:
        return np.zeros((spec.height, spec.width))
    return frame_rng(spec.seed, _NOISE, k).normal(0.0, spec.noise_sigma, (spec.height, spec.width))


def _compose(base, noise, blobs):
    return np.clip(np.clip(base + blobs, 0.0, 1.0) + noise, 0.0, 1.0)


def _solve_amplitude(base, noise, others, t, row, col, geom, iters=60):
    h, w = base.shape
    g = WindowGeometry(d=geom.d, a=t.a, b=t.b)
    unit = blob(h, w, row, col, t.a, t.b, 1.0)

    def measure(amp):
        st = local_stats(_compose(base, noise, others + amp * unit), row, col, g)
        return abs(st.mu_t - st.mu_b) / st.sigma_b if st.sigma_b > 0 else np.inf

    if measure(1.0) < t.scr:
        raise Infeasible(f"SCR {t.scr} not reachable at ({row:.1f}, {col:.1f})")
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if measure(mid) < t.scr:
            lo = mid
        else:
            hi = mid
    return hi


def generate(spec):
    """Build the frames and ground truth for ``spec``.

    Returns ``(frames, truth)`` where ``frames`` is a list of ``(h, w)``
    arrays in ``[0, 1]`` and ``truth`` a list of :class:`Target`.  When a
    target asks for an SCR, its amplitude is solved per frame by bisection
    on the final noisy frame.
    """
    bgs = make_background(spec)
    frames, truth = [], []
    for k in range(spec.frames):
        noise = _noise_field(spec, k)
        blobs = np.zeros((spec.height, spec.width))
        for t in spec.targets:
            row, col = t.position(k)
            if t.amplitude is not None:
                amp = t.amplitude
            else:
                amp = _solve_amplitude(bgs[k], noise, blobs, t, row, col, spec.geometry)
            blobs = blobs + blob(spec.height, spec.width, row, col, t.a, t.b, amp)
            truth.append(Target(k, row, col, t.a, t.b))
        frames.append(_compose(bgs[k], noise, blobs))
    return frames, truth


def add_noise(frames, sigma, seed):
    """Add i.i.d. ``N(0, sigma^2)`` noise to every frame and clip to ``[0, 1]``."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return [np.array(f, dtype=np.float64) for f in frames]
    return [
        np.clip(f + frame_rng(seed, _NOISE, k).normal(0.0, sigma, np.shape(f)), 0.0, 1.0)
        for k, f in enumerate(frames)
    ]


def _floats(text, n=None):
    vals = tuple(float(v) for v in text.replace(" ", "").split(",") if v)
    if n is not None and len(vals) != n:
        raise ValueError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def parse_scene_spec(text):
    """Build a :class:`SceneSpec` from ``key = value`` text.

    Recognized keys: ``height``, ``width``, ``frames``, ``background``,
    ``background.<param>``, ``noise_sigma`` (or ``noise_sigma_8bit``),
    ``seed``, ``geometry.d`` and per-target ``target.<id>.start``,
    ``.velocity``, ``.size`` (``a,b``), ``.scr`` / ``.amplitude``.
    """
    from .config import parse_kv

    kv = parse_kv(text)
    top, bgp, tgts = {}, {}, {}
    geom = {}
    for key, val in kv.items():
        if key.startswith("background."):
            name = key.split(".", 1)[1]
            nums = _floats(val)
            bgp[name] = nums if name == "drift" else nums[0]
        elif key.startswith("target."):
            _, tid, name = key.split(".", 2)
            tgts.setdefault(tid, {})[name] = val
        elif key.startswith("geometry."):
            geom[key.split(".", 1)[1]] = int(val)
        else:
            top[key] = val

    targets = []
    for tid in sorted(tgts, key=lambda t: (len(t), t)):
        t = tgts[tid]
        kw = {}
        kw["start"] = _floats(t.get("start", "0,0"), 2)
        kw["velocity"] = _floats(t.get("velocity", "0,0"), 2)
        a, b = (int(v) for v in _floats(t.get("size", "3,3"), 2))
        kw["a"], kw["b"] = a, b
        if "scr" in t:
            kw["scr"] = float(t["scr"])
        if "amplitude" in t:
            kw["amplitude"] = float(t["amplitude"])
        targets.append(TargetSpec(**kw))

    sigma = float(top.pop("noise_sigma", 0.0))
    if "noise_sigma_8bit" in top:
        sigma = float(top.pop("noise_sigma_8bit")) / 255.0
    unknown = set(top) - {"height", "width", "frames", "background", "seed"}
    if unknown:
        raise ValueError(f"unknown scene keys: {sorted(unknown)}")
    return SceneSpec(
        height=int(top.get("height", 64)),
        width=int(top.get("width", 64)),
        frames=int(top.get("frames", 3)),
        background=top.get("background", "flat"),
        background_params=bgp,
        targets=tuple(targets),
        noise_sigma=sigma,
        seed=int(top.get("seed", 0)),
        geometry=WindowGeometry(**geom) if geom else WindowGeometry(),
    )


def format_scene_spec(spec):
    lines = [
        f"height = {spec.height}",
        f"width = {spec.width}",
        f"frames = {spec.frames}",
        f"background = {spec.background}",
    ]
    for k in sorted(spec.background_params):
        v = spec.background_params[k]
        v = ",".join(repr(float(x)) for x in v) if isinstance(v, (tuple, list)) else repr(float(v))
        lines.append(f"background.{k} = {v}")
    lines.append(f"noise_sigma = {spec.noise_sigma!r}")
    lines.append(f"seed = {spec.seed}")
    lines.append(f"geometry.d = {spec.geometry.d}")
    for i, t in enumerate(spec.targets, 1):
        if t.trajectory:
            raise ValueError("explicit trajectories cannot be written as a scene file")
        lines.append(f"target.{i}.start = {t.start[0]!r},{t.start[1]!r}")
        lines.append(f"target.{i}.velocity = {t.velocity[0]!r},{t.velocity[1]!r}")
        lines.append(f"target.{i}.size = {t.a},{t.b}")
        if t.scr is not None:
            lines.append(f"target.{i}.scr = {t.scr!r}")
        else:
            lines.append(f"target.{i}.amplitude = {t.amplitude!r}")
    return "\n".join(lines) + "\n"


def truth_csv(truth):
    lines = ["frame,row,col,a,b"]
    lines += [f"{t.frame},{t.row:.6f},{t.col:.6f},{t.a},{t.b}" for t in truth]
    return "\n".join(lines) + "\n"


def read_truth_csv(path):
    import csv

    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [Target(int(r["frame"]), float(r["row"]), float(r["col"]), int(r["a"]), int(r["b"]))
            for r in rows]
