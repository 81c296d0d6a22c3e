"""Circular difference operators, the anisotropic space-time TV norm and
the FFT solver for the background subproblem.

Axis 0 is "h" (rows), axis 1 is "v" (columns), axis 2 is "z" (frames).
All differences wrap around at the last index, which makes ``2I + sum D^T D``
diagonal in the 3-D Fourier basis.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "diff_h",
    "diff_v",
    "diff_z",
    "diff_h_adj",
    "diff_v_adj",
    "diff_z_adj",
    "asttv_norm",
    "DiffSpectra",
    "diff_spectra",
    "solve_b",
    "apply_system",
]


def _diff(x, axis):
    return np.roll(x, -1, axis=axis) - x


def _diff_adj(y, axis):
    return np.roll(y, 1, axis=axis) - y


def diff_h(x):
    return _diff(x, 0)


def diff_v(x):
    return _diff(x, 1)


def diff_z(x):
    return _diff(x, 2)


def diff_h_adj(y):
    return _diff_adj(y, 0)


def diff_v_adj(y):
    return _diff_adj(y, 1)


def diff_z_adj(y):
    return _diff_adj(y, 2)


def asttv_norm(x, delta):
    """``||D_h x||_1 + ||D_v x||_1 + delta * ||D_z x||_1``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return float(
        np.abs(diff_h(x)).sum() + np.abs(diff_v(x)).sum() + delta * np.abs(diff_z(x)).sum()
    )


def apply_system(b, with_tv=True):
    """Apply ``(2I + D_h^T D_h + D_v^T D_v + D_z^T D_z)`` to ``b`` directly."""
    out = 2.0 * b
    if with_tv:
        out = out + diff_h_adj(diff_h(b)) + diff_v_adj(diff_v(b)) + diff_z_adj(diff_z(b))
    return out


@dataclass(frozen=True)
class DiffSpectra:
    """Fourier transfer function of ``2I + Delta`` for one tensor shape.

    ``denominator`` has the full ``(n1, n2, n3)`` shape; ``half`` is the
    slice matching ``numpy.fft.rfftn`` output.
    """

    dims: tuple
    with_tv: bool
    denominator: np.ndarray = field(repr=False)

    @property
    def half(self):
        return self.denominator[:, :, : self.dims[2] // 2 + 1]


def _axis_power(n):
    # |exp(2 pi i f / n) - 1|^2
    return 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(n) / n)


@lru_cache(maxsize=32)
def diff_spectra(dims, with_tv=True):
    """Cached :class:`DiffSpectra` for ``dims``.  ``with_tv=False`` gives the plain ``2I`` system."""
    n1, n2, n3 = (int(d) for d in dims)
    den = np.full((n1, n2, n3), 2.0)
    if with_tv:
        den += _axis_power(n1)[:, None, None]
        den += _axis_power(n2)[None, :, None]
        den += _axis_power(n3)[None, None, :]
    den.setflags(write=False)
    return DiffSpectra((n1, n2, n3), with_tv, den)


def solve_b(rhs, spectra):
    """Solve ``(2I + Delta) B = rhs`` with circular boundaries."""
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape != spectra.dims:
        raise ValueError(f"rhs shape {rhs.shape} does not match spectra {spectra.dims}")
    if not spectra.with_tv:
        return rhs / 2.0
    f = np.fft.rfftn(rhs)
    return np.fft.irfftn(f / spectra.half, s=rhs.shape, axes=(0, 1, 2))
