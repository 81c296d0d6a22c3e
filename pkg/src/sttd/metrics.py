"""Local-contrast metrics, detection probability / false-alarm rate and ROC sweeps."""

import csv
import io
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import ndimage

__all__ = [
    "DegenerateBackground",
    "Target",
    "WindowGeometry",
    "LocalStats",
    "local_stats",
    "scr",
    "lsnrg",
    "bsf",
    "scrg",
    "cg",
    "con",
    "frame_metrics",
    "label_components",
    "pd_fa",
    "max_normalize",
    "roc",
    "roc_auc",
    "MetricsReport",
    "evaluate",
]

EIGHT = np.ones((3, 3), dtype=bool)


class DegenerateBackground(ZeroDivisionError):
    """The neighborhood ring has zero standard deviation."""


@dataclass(frozen=True)
class Target:
    frame: int
    row: float
    col: float
    a: int = 3
    b: int = 3


@dataclass(frozen=True)
class WindowGeometry:
    """Target core ``a x b`` (rows x cols) with a border of width ``d`` around it."""

    d: int = 40
    a: int = 9
    b: int = 9

    def __post_init__(self):
        if self.d < 1 or self.a < 1 or self.b < 1:
            raise ValueError("d, a and b must be >= 1")


@dataclass
class LocalStats:
    mu_t: float
    mu_b: float
    sigma_b: float
    p_t: float
    p_b: float
    clipped: bool


def _core_origin(center, size):
    return int(math.floor(center - (size - 1) / 2.0 + 0.5))


def local_stats(image, row, col, geom):
    """Statistics of the ``a x b`` core around ``(row, col)`` and the surrounding ring.

    The ring is the ``(a+2d) x (b+2d)`` window minus the core, clipped to
    the image.  ``clipped`` tells whether any clipping happened.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    r0 = _core_origin(row, geom.a)
    c0 = _core_origin(col, geom.b)
    r1, c1 = r0 + geom.a, c0 + geom.b
    cr0, cc0, cr1, cc1 = max(r0, 0), max(c0, 0), min(r1, h), min(c1, w)
    if cr0 >= cr1 or cc0 >= cc1:
        raise ValueError(f"target at ({row}, {col}) lies outside the image")
    wr0, wc0 = max(r0 - geom.d, 0), max(c0 - geom.d, 0)
    wr1, wc1 = min(r1 + geom.d, h), min(c1 + geom.d, w)
    clipped = (cr0, cc0, cr1, cc1, wr0, wc0, wr1, wc1) != (
        r0, c0, r1, c1, r0 - geom.d, c0 - geom.d, r1 + geom.d, c1 + geom.d)

    core = img[cr0:cr1, cc0:cc1]
    ring_mask = np.ones((wr1 - wr0, wc1 - wc0), dtype=bool)
    ring_mask[cr0 - wr0:cr1 - wr0, cc0 - wc0:cc1 - wc0] = False
    ring = img[wr0:wr1, wc0:wc1][ring_mask]
    if ring.size == 0:
        raise ValueError("empty neighborhood ring")
    return LocalStats(
        mu_t=float(core.mean()),
        mu_b=float(ring.mean()),
        # exact zero for a constant ring; std() can leave rounding residue
        sigma_b=0.0 if ring.min() == ring.max() else float(ring.std()),
        p_t=float(core.max()),
        p_b=float(ring.max()),
        clipped=bool(clipped),
    )


def _ratio(num, den):
    if den == 0.0:
        if num == 0.0:
            return math.nan
        return math.inf
    return num / den


def _scr(st):
    return _ratio(abs(st.mu_t - st.mu_b), st.sigma_b)


def scr(image, row, col, geom=WindowGeometry()):
    """Signal-to-clutter ratio ``|mu_t - mu_b| / sigma_b``."""
    st = local_stats(image, row, col, geom)
    if st.sigma_b == 0.0:
        raise DegenerateBackground(f"zero ring deviation around ({row}, {col})")
    return abs(st.mu_t - st.mu_b) / st.sigma_b


def con(image, row, col, geom=WindowGeometry()):
    st = local_stats(image, row, col, geom)
    return abs(st.mu_t - st.mu_b)


def _gains(s_in, s_out):
    return {
        "lsnrg": _ratio(_ratio(s_out.p_t, s_out.p_b), _ratio(s_in.p_t, s_in.p_b)),
        "bsf": _ratio(s_in.sigma_b, s_out.sigma_b),
        "scrg": _ratio(_scr(s_out), _scr(s_in)),
        "cg": _ratio(abs(s_out.mu_t - s_out.mu_b), abs(s_in.mu_t - s_in.mu_b)),
    }


def _gain(name, inp, out, row, col, geom):
    return _gains(local_stats(inp, row, col, geom), local_stats(out, row, col, geom))[name]


def lsnrg(inp, out, row, col, geom=WindowGeometry()):
    """Ratio of ``P_T / P_B`` (core max over ring max) after and before processing."""
    return _gain("lsnrg", inp, out, row, col, geom)


def bsf(inp, out, row, col, geom=WindowGeometry()):
    """Ring standard deviation before over after; ``inf`` when the output ring is flat."""
    return _gain("bsf", inp, out, row, col, geom)


def scrg(inp, out, row, col, geom=WindowGeometry()):
    return _gain("scrg", inp, out, row, col, geom)


def cg(inp, out, row, col, geom=WindowGeometry()):
    return _gain("cg", inp, out, row, col, geom)


def frame_metrics(inp, out, row, col, geom=WindowGeometry()):
    """All four gains for one target plus a ``clipped`` flag."""
    s_in = local_stats(inp, row, col, geom)
    s_out = local_stats(out, row, col, geom)
    res = _gains(s_in, s_out)
    res["clipped"] = s_in.clipped
    res["degenerate"] = s_in.sigma_b == 0.0 or s_out.sigma_b == 0.0
    return res


def label_components(mask):
    """8-connected components of ``mask`` as a list of ``(centroid_row, centroid_col, pixels)``.

    ``pixels`` is an ``(n, 2)`` integer array of coordinates.  Components
    are ordered by their first pixel in raster order.
    """
    lab, n = ndimage.label(np.asarray(mask, dtype=bool), structure=EIGHT)
    out = []
    for idx in range(1, n + 1):
        pix = np.argwhere(lab == idx)
        cen = pix.mean(axis=0)
        out.append((float(cen[0]), float(cen[1]), pix))
    return out


def _match(components, targets, radius):
    pairs = []
    for ci, (cr, cc, _) in enumerate(components):
        for ti, t in enumerate(targets):
            dist = math.hypot(cr - t.row, cc - t.col)
            if dist <= radius:
                pairs.append((dist, ci, ti))
    pairs.sort()
    used_c, used_t = set(), set()
    for _, ci, ti in pairs:
        if ci in used_c or ti in used_t:
            continue
        used_c.add(ci)
        used_t.add(ti)
    return used_c, used_t


def _group_truth(truth, n_frames):
    per = [[] for _ in range(n_frames)]
    for t in truth:
        if 0 <= t.frame < n_frames:
            per[t.frame].append(t)
    return per


def pd_fa(masks, truth, match_radius=4.0, count="pixels"):
    """Detection probability and false-alarm rate over a set of frames.

    A component is a true detection when its centroid is within
    ``match_radius`` of a still unmatched ground-truth centroid; pairs are
    taken greedily in order of increasing distance.  ``Fa`` is the number
    of pixels in unmatched components divided by the total pixel count, or
    the number of unmatched components with ``count="components"``.
    """
    if count not in ("pixels", "components"):
        raise ValueError("count must be 'pixels' or 'components'")
    masks = [np.asarray(m, dtype=bool) for m in masks]
    per = _group_truth(truth, len(masks))
    n_targets = sum(len(p) for p in per)
    hits = 0
    false = 0
    total = 0
    for mask, targets in zip(masks, per):
        total += mask.size
        comps = label_components(mask)
        used_c, used_t = _match(comps, targets, match_radius)
        hits += len(used_t)
        for ci, (_, _, pix) in enumerate(comps):
            if ci not in used_c:
                false += len(pix) if count == "pixels" else 1
    pd = hits / n_targets if n_targets else 1.0
    fa = false / total if total else 0.0
    return pd, fa


def max_normalize(img):
    """Clip negatives and divide by the maximum; an image without positive values maps to zeros."""
    img = np.maximum(np.asarray(img, dtype=np.float64), 0.0)
    m = img.max() if img.size else 0.0
    if m <= 0.0:
        return np.zeros_like(img)
    return img / m


def roc(target_images, truth, n_points=101, match_radius=4.0, count="pixels"):
    """Threshold sweep over ``[0, 1]`` on max-normalized target images.

    Returns a list of ``(threshold, fa, pd)`` sorted by ``fa`` ascending,
    with ``pd`` replaced by its running maximum.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    norm = [max_normalize(t) for t in target_images]
    raw = []
    for thr in np.linspace(0.0, 1.0, n_points):
        pd, fa = pd_fa([n > thr for n in norm], truth, match_radius, count)
        raw.append((float(thr), fa, pd))
    raw.sort(key=lambda p: (p[1], p[2], -p[0]))
    out = []
    best = 0.0
    for thr, fa, pd in raw:
        best = max(best, pd)
        out.append((thr, fa, best))
    return out


def roc_auc(points, fa_max=None):
    """Area under the ``(fa, pd)`` staircase on ``[0, fa_max]``, divided by ``fa_max``.

    ``fa_max`` defaults to the largest ``fa`` in ``points``; the curve is
    held flat beyond its last point.
    """
    fa = np.array([p[1] for p in points])
    pd = np.array([p[2] for p in points])
    if fa_max is None:
        fa_max = float(fa.max())
    if fa_max <= 0:
        return float(pd.max()) if pd.size else 0.0
    # staircase: pd achieved at fa holds until the next fa
    xs = np.clip(np.concatenate([fa, [fa_max]]), 0.0, fa_max)
    widths = np.diff(xs)
    return min(1.0, float(math.fsum(widths * pd) / fa_max))


@dataclass
class MetricsReport:
    rows: list = field(default_factory=list)
    mean_cg: float = math.nan
    pd: float = math.nan
    fa: float = math.nan
    roc: list = field(default_factory=list)

    def to_json(self):
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            return v

        doc = asdict(self)
        doc["rows"] = [{k: clean(v) for k, v in r.items()} for r in self.rows]
        for k in ("mean_cg", "pd", "fa"):
            doc[k] = clean(doc[k])
        doc["roc"] = [{"threshold": t, "fa": f, "pd": p} for t, f, p in self.roc]
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def rows_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["frame", "row", "col", "lsnrg", "bsf", "scrg", "cg", "clipped"])
        for r in self.rows:
            w.writerow([r["frame"], f"{r['row']:.6f}", f"{r['col']:.6f}",
                        *(_fmt(r[k]) for k in ("lsnrg", "bsf", "scrg", "cg")),
                        int(r["clipped"])])
        return buf.getvalue()

    def roc_csv(self):
        return roc_csv(self.roc)


def _fmt(v):
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.6f}"


def roc_csv(points):
    lines = ["threshold,fa,pd"]
    lines += [f"{t:.6f},{f:.6f},{p:.6f}" for t, f, p in points]
    return "\n".join(lines) + "\n"


def evaluate(inputs, outputs, truth, geom=WindowGeometry(), masks=None,
             match_radius=4.0, n_points=None):
    """Per-target gains plus, optionally, Pd/Fa of ``masks`` and a ROC of ``outputs``."""
    rep = MetricsReport()
    for t in truth:
        m = frame_metrics(inputs[t.frame], outputs[t.frame], t.row, t.col, geom)
        rep.rows.append({"frame": t.frame, "row": t.row, "col": t.col, **m})
    cgs = [r["cg"] for r in rep.rows if not math.isnan(r["cg"])]
    rep.mean_cg = float(np.mean(cgs)) if cgs else math.nan
    if masks is not None:
        rep.pd, rep.fa = pd_fa(masks, truth, match_radius)
    if n_points:
        rep.roc = roc(outputs, truth, n_points, match_radius)
    return rep
