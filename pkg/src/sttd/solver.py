"""ADMM decomposition of a frame tensor into background, target and noise."""

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .asttv import (
    diff_h, diff_v, diff_z, diff_h_adj, diff_v_adj, diff_z_adj,
    diff_spectra, solve_b,
)
from .tensor import as_tensor3
from .tsvd import SvtParams, laplace_svt, tnn_svt

__all__ = [
    "DimensionMismatch",
    "SolverParams",
    "SolverState",
    "Decomposition",
    "soft_threshold",
    "update_z",
    "update_b",
    "update_t",
    "update_v",
    "update_n",
    "update_multipliers",
    "residual",
    "decompose",
]

SURROGATES = ("laplace", "plain_tnn")
TV_MODES = ("asttv", "sttv", "none")
SVT_MODES = ("exact", "one_step")


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SolverParams:
    """Scalars of the ADMM iteration.  The sparsity weight is derived, see :meth:`lambda_s`."""

    lambda_tv: float = 0.005
    H: float = 6.0
    lambda3: float = 100.0
    delta: float = 0.5
    eps: float = 0.01
    mu0: float = 1e-2
    mu_max: float = 1e7
    rho: float = 1.5
    zeta: float = 1e-6
    max_iter: int = 500
    L: int = 3
    surrogate: str = "laplace"
    tv_mode: str = "asttv"
    svt_mode: str = "exact"

    def __post_init__(self):
        for name in ("lambda_tv", "H", "lambda3", "eps", "mu0", "zeta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if not self.rho > 1:
            raise ValueError("rho must exceed 1")
        if self.mu_max < self.mu0:
            raise ValueError("mu_max must be >= mu0")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be positive")
        if int(self.L) < 2:
            raise ValueError("L must be at least 2")
        if self.surrogate not in SURROGATES:
            raise ValueError(f"surrogate must be one of {SURROGATES}")
        if self.tv_mode not in TV_MODES:
            raise ValueError(f"tv_mode must be one of {TV_MODES}")
        if self.svt_mode not in SVT_MODES:
            raise ValueError(f"svt_mode must be one of {SVT_MODES}")

    def lambda_s(self, n1, n2):
        return self.H / math.sqrt(max(n1, n2) * self.L)

    @property
    def effective_delta(self):
        # sttv weights the temporal term like the spatial ones
        return 1.0 if self.tv_mode == "sttv" else self.delta

    def to_dict(self):
        return asdict(self)


@dataclass
class SolverState:
    B: np.ndarray
    T: np.ndarray
    N: np.ndarray
    Z: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    V3: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    y3: np.ndarray
    y4: np.ndarray
    y5: np.ndarray
    mu: float
    iter: int = 0
    residual: float = math.inf

    @classmethod
    def zeros(cls, shape, mu):
        z = lambda: np.zeros(shape)
        return cls(z(), z(), z(), z(), z(), z(), z(), z(), z(), z(), z(), z(), mu=mu)


@dataclass
class Decomposition:
    B: np.ndarray
    T: np.ndarray
    N: np.ndarray
    iterations: int
    final_residual: float
    converged: bool
    history: list = field(default_factory=list, repr=False)


def soft_threshold(x, tau):
    """``sign(x) * max(|x| - tau, 0)``, elementwise."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    return out if out.ndim else float(out)


def update_z(state, D, params):
    q = state.B - state.y2 / state.mu
    if params.surrogate == "plain_tnn":
        return tnn_svt(q, 1.0 / state.mu)
    return laplace_svt(q, SvtParams(eta=state.mu, eps=params.eps), mode=params.svt_mode)


def b_rhs(state, D, Z):
    mu = state.mu
    rhs = D - state.T - state.N + state.y1 / mu + Z + state.y2 / mu
    return rhs


def update_b(state, D, params, spectra, Z=None):
    """Background step.  ``Z`` defaults to ``state.Z`` (already updated this iteration)."""
    Z = state.Z if Z is None else Z
    mu = state.mu
    rhs = b_rhs(state, D, Z)
    if params.tv_mode != "none":
        rhs = (
            rhs
            + diff_h_adj(state.V1 + state.y3 / mu)
            + diff_v_adj(state.V2 + state.y4 / mu)
            + diff_z_adj(state.V3 + state.y5 / mu)
        )
    return solve_b(rhs, spectra)


def update_t(state, D, params):
    n1, n2 = D.shape[:2]
    return soft_threshold(D - state.B - state.N + state.y1 / state.mu,
                          params.lambda_s(n1, n2) / state.mu)


def update_v(state, params):
    mu = state.mu
    tau = params.lambda_tv / mu
    B = state.B
    return (
        soft_threshold(diff_h(B) - state.y3 / mu, tau),
        soft_threshold(diff_v(B) - state.y4 / mu, tau),
        soft_threshold(diff_z(B) - state.y5 / mu, params.effective_delta * tau),
    )


def update_n(state, D, params):
    mu = state.mu
    return (mu * (D - state.B - state.T) + state.y1) / (mu + 2.0 * params.lambda3)


def update_multipliers(state, D, with_tv=True):
    mu = state.mu
    B = state.B
    y1 = state.y1 + mu * (D - B - state.T - state.N)
    y2 = state.y2 + mu * (state.Z - B)
    if not with_tv:
        return y1, y2, state.y3, state.y4, state.y5
    y3 = state.y3 + mu * (state.V1 - diff_h(B))
    y4 = state.y4 + mu * (state.V2 - diff_v(B))
    y5 = state.y5 + mu * (state.V3 - diff_z(B))
    return y1, y2, y3, y4, y5


def residual(D, B, T, N, d_norm2=None):
    """``||D - B - T - N||_F^2 / ||D||_F^2`` (0 when ``D`` is zero and the fit is exact)."""
    r2 = float(np.sum((D - B - T - N) ** 2))
    d2 = float(np.sum(D * D)) if d_norm2 is None else d_norm2
    if d2 == 0.0:
        return 0.0 if r2 == 0.0 else math.inf
    return r2 / d2


def decompose(D, params=None, callback=None):
    """Split ``D`` into low-rank background ``B``, sparse target ``T`` and noise ``N``.

    Runs the ADMM iteration (Z, B, T, V, N, multipliers, penalty growth)
    until the relative squared residual drops to ``params.zeta`` or
    ``params.max_iter`` iterations have run.  Non-convergence is reported
    through ``Decomposition.converged``, not raised.

    ``callback(state)`` is invoked after every iteration if given.
    """
    params = params or SolverParams()
    try:
        D = as_tensor3(D)
    except ValueError as exc:
        raise DimensionMismatch(str(exc)) from exc
    if min(D.shape) < 1:
        raise DimensionMismatch(f"empty tensor {D.shape}")

    with_tv = params.tv_mode != "none"
    spectra = diff_spectra(D.shape, with_tv)
    st = SolverState.zeros(D.shape, params.mu0)
    d2 = float(np.sum(D * D))
    history = []

    converged = False
    while st.iter < params.max_iter:
        st.Z = update_z(st, D, params)
        st.B = update_b(st, D, params, spectra)
        st.T = update_t(st, D, params)
        if with_tv:
            st.V1, st.V2, st.V3 = update_v(st, params)
        st.N = update_n(st, D, params)
        st.y1, st.y2, st.y3, st.y4, st.y5 = update_multipliers(st, D, with_tv)
        st.mu = min(params.rho * st.mu, params.mu_max)
        st.iter += 1
        st.residual = residual(D, st.B, st.T, st.N, d2)
        history.append(st.residual)
        if callback is not None:
            callback(st)
        if st.residual <= params.zeta:
            converged = True
            break

    return Decomposition(st.B, st.T, st.N, st.iter, st.residual, converged, history)
