"""Dense third-order tensor helpers.

Tensors are plain ``numpy.ndarray`` objects of shape ``(n1, n2, n3)``
(rows, columns, frames).  The transform along the third mode uses the
unnormalized forward DFT; the inverse carries the ``1/n3`` factor.
"""

import numpy as np

__all__ = [
    "SymmetryViolation",
    "as_tensor3",
    "fft_mode3",
    "ifft_mode3",
    "fourier_singular_values",
    "tnn",
    "laplace_norm",
    "unfold",
    "fold",
]

# max |imag| allowed after the inverse transform, relative to max(1, max |real|)
IMAG_TOL = 1e-9


class SymmetryViolation(ValueError):
    """Inverse transform would produce a non-real tensor."""


def as_tensor3(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"expected a 3-D array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("tensor contains NaN or Inf")
    return x


def fft_mode3(x):
    """Length-``n3`` DFT applied to every tube ``x[i, j, :]``."""
    return np.fft.fft(np.asarray(x, dtype=np.float64), axis=2)


def ifft_mode3(xf, tol=IMAG_TOL):
    """Inverse of :func:`fft_mode3`, returning a real tensor.

    Raises
    ------
    SymmetryViolation
        If the imaginary residue exceeds ``tol * max(1, max|re|)``, which
        means the Fourier slices were not conjugate symmetric.
    """
    out = np.fft.ifft(xf, axis=2)
    re = out.real
    scale = max(1.0, float(np.max(np.abs(re)))) if re.size else 1.0
    resid = float(np.max(np.abs(out.imag))) if re.size else 0.0
    if resid > tol * scale:
        raise SymmetryViolation(
            f"imaginary residue {resid:.3e} exceeds {tol:.1e} * {scale:.3e}"
        )
    return np.ascontiguousarray(re)


def fourier_singular_values(x):
    """Singular values of every Fourier-domain frontal slice.

    Returns an array of shape ``(n3, min(n1, n2))``.
    """
    xf = fft_mode3(x)
    return np.stack(
        [np.linalg.svd(xf[:, :, k], compute_uv=False) for k in range(xf.shape[2])]
    )


def tnn(x):
    """Tensor nuclear norm, ``(1/n3) * sum_k ||Xbar_k||_*``."""
    x = np.asarray(x)
    return float(np.sum(fourier_singular_values(x)) / x.shape[2])


def laplace_norm(x, eps):
    """Laplace rank surrogate ``sum_k sum_i (1 - exp(-sigma_i(Xbar_k) / eps))``.

    Unlike :func:`tnn` there is no ``1/n3`` prefactor.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    s = fourier_singular_values(x)
    return float(np.sum(-np.expm1(-s / eps)))


def unfold(x, mode):
    """Mode-``mode`` matricization (1-based mode, Kolda-Bader ordering).

    Column index of entry ``(i1, i2, i3)`` varies fastest in the lowest
    remaining mode, so a ``2 x 3 x 4`` tensor unfolds to ``2 x 12``,
    ``3 x 8`` and ``4 x 6``.
    """
    x = np.asarray(x)
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    ax = mode - 1
    return np.reshape(np.moveaxis(x, ax, 0), (x.shape[ax], -1), order="F")


def fold(m, mode, shape):
    """Inverse of :func:`unfold`."""
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    ax = mode - 1
    full = [shape[ax]] + [s for i, s in enumerate(shape) if i != ax]
    return np.moveaxis(np.reshape(m, full, order="F"), 0, ax)
