"""Laplace-weighted singular value thresholding in the Fourier domain."""

from dataclasses import dataclass

import numpy as np

from .tensor import fft_mode3, ifft_mode3

__all__ = [
    "SvtParams",
    "scalar_threshold",
    "laplace_prox",
    "laplace_objective",
    "laplace_svt",
    "tnn_svt",
]


@dataclass(frozen=True)
class SvtParams:
    """Penalty ``eta`` (the ADMM ``mu`` at the call site) and Laplace scale ``eps``."""

    eta: float
    eps: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")


def laplace_grad(s, eps):
    return np.exp(-np.asarray(s, dtype=np.float64) / eps) / eps


def scalar_threshold(s, p):
    """One-step shrinkage ``max(s - exp(-s/eps) / (eta*eps), 0)``.

    The gradient of the Laplace penalty is evaluated at the input value
    ``s`` itself.  Works elementwise on arrays.
    """
    s = np.asarray(s, dtype=np.float64)
    out = np.maximum(s - laplace_grad(s, p.eps) / p.eta, 0.0)
    return out if out.ndim else float(out)


def laplace_objective(sigma, s, p):
    """``1 - exp(-sigma/eps) + eta/2 * (sigma - s)**2``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    return -np.expm1(-sigma / p.eps) + 0.5 * p.eta * (sigma - s) ** 2


def laplace_prox(s, p, max_newton=100):
    """Exact minimizer of ``1 - exp(-sigma/eps) + eta/2 (sigma - s)^2`` over ``sigma >= 0``.

    The objective is concave below ``eps*log(1/(eta*eps^2))`` and convex
    above it, so the only candidates are ``sigma = 0`` and the unique
    stationary point in the convex region.  The stationary point is found
    by Newton's method started at ``s``; the derivative is convex and
    increasing there, so the iterates decrease monotonically to the root.
    """
    s = np.asarray(s, dtype=np.float64)
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    eta, eps = p.eta, p.eps

    lo = max(0.0, eps * np.log(1.0 / (eta * eps * eps))) if eta * eps * eps < 1 else 0.0
    lo = np.minimum(lo, s)

    def g(x):
        return eta * (x - s) + laplace_grad(x, eps)

    has_root = g(lo) < 0
    x = s.copy()
    for _ in range(max_newton):
        gx = g(x)
        dg = eta - np.exp(-x / eps) / (eps * eps)
        step = np.where(has_root & (dg > 0), gx / np.where(dg > 0, dg, 1.0), 0.0)
        x_new = np.clip(x - step, lo, s)
        if np.all(np.abs(x_new - x) <= 1e-15 * np.maximum(1.0, s)):
            x = x_new
            break
        x = x_new

    out = np.where(has_root, x, 0.0)
    f_root = laplace_objective(out, s, p)
    f_zero = 0.5 * eta * s * s
    out = np.where(f_root <= f_zero, out, 0.0)
    return float(out[0]) if scalar else out


def _slice_svt(qf, shrink):
    n3 = qf.shape[2]
    zf = np.empty_like(qf)
    half = n3 // 2 + 1
    for l in range(half):
        sl = qf[:, :, l]
        self_conj = l == 0 or 2 * l == n3
        if self_conj:
            # DC and Nyquist slices of a real tensor are real matrices
            sl = sl.real
        u, s, vh = np.linalg.svd(sl, full_matrices=False)
        zf[:, :, l] = (u * shrink(s)) @ vh
    for l in range(half, n3):
        zf[:, :, l] = np.conj(zf[:, :, n3 - l])
    return zf


def laplace_svt(q, p, mode="exact"):
    """Proximal step of the Laplace rank surrogate.

    Transforms ``q`` along the third mode, shrinks the singular values of
    the first ``n3 // 2 + 1`` Fourier slices, fills the rest by conjugate
    symmetry and transforms back.

    Parameters
    ----------
    q : ndarray, shape (n1, n2, n3)
    p : SvtParams
    mode : {"exact", "one_step"}
        ``"exact"`` maps every singular value to the global minimizer of
        its scalar problem (:func:`laplace_prox`).  ``"one_step"`` applies
        :func:`scalar_threshold`, i.e. a single shrinkage with the gradient
        taken at the current singular value.

    Returns
    -------
    ndarray
        Real tensor of the same shape.
    """
    if mode == "exact":
        shrink = lambda s: laplace_prox(s, p)
    elif mode == "one_step":
        shrink = lambda s: scalar_threshold(s, p)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ifft_mode3(_slice_svt(fft_mode3(q), shrink))


def tnn_svt(q, tau):
    """Singular value soft-thresholding at ``tau`` on every Fourier slice (plain TNN prox)."""
    return ifft_mode3(_slice_svt(fft_mode3(q), lambda s: np.maximum(s - tau, 0.0)))
