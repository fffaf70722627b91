"""
Quadrature data for the heat-semigroup integral

    (-Δ_B)^s u = 1/Γ(-s) ∫₀^∞ (e^{tΔ_B} u - u) t^{-1-s} dt

sampled at ``t_j = j * dt``: the weights ``beta_j`` multiply ``W^(j) - W^(0)``
and ``beta_inf`` multiplies ``W_∞ - W^(0)``.

The low-order scheme integrates ``t^{-1-s}`` exactly over the midpoint cells
``[t_j - dt/2, t_j + dt/2]``; the high-order scheme integrates it against the
piecewise linear hat functions of the time grid and requires Crank-Nicolson
snapshots.
"""

import dataclasses
import math
import os
from typing import *

import numpy as np
import scipy.special

from ._utils import check_finite, check_integer, check_option, check_positive, freeze
from .errors import *
from .types import *

__all__ = [
    "QuadWeights",
    "gamma_neg",
    "weights_low",
    "weights_high",
    "quad_weights",
    "provisional_beta",
    "choose_nt",
    "adaptive_tail_nt",
    "min_steps",
    "max_nt",
    "DEFAULT_MAX_NT",
]


DEFAULT_MAX_NT = 10**6

# Beyond this index the hat-weighted second difference is summed as a series.
_SERIES_FROM = 8
_SERIES_TERMS = 12

_ROUNDING_FACTOR = 64


def max_nt() -> int:
    """
    The cap on time steps: ``FRACLAP_MAX_NT`` if set, else :data:`DEFAULT_MAX_NT`.
    """
    raw = os.environ.get("FRACLAP_MAX_NT")
    if raw is None or not raw.strip():
        return DEFAULT_MAX_NT
    try:
        value = int(raw)
    except ValueError:
        raise InvalidArgumentError("FRACLAP_MAX_NT", raw) from None
    return check_integer("FRACLAP_MAX_NT", value, 1)


def _check_s(s: float) -> float:
    s = check_finite("s", s)
    if not 0.0 < s < 1.0:
        raise OutOfRange("s", s, "0 < s < 1")
    return s


@dataclasses.dataclass(frozen=True, eq=False)
class QuadWeights:
    scheme: Scheme
    s: float
    dt: float
    n_t: int
    betas: np.ndarray
    beta_inf: float
    gamma_prefactor: float
    t2: float

    def __post_init__(self):
        freeze(self.betas)

    @property
    def total(self) -> float:
        """
        ``sum(betas) + beta_inf``.
        """
        return math.fsum(self.betas) + self.beta_inf

    def __repr__(self) -> str:
        return (
            f"<{type(self).__name__} {self.scheme} s={self.s} dt={self.dt}"
            f" n_t={self.n_t} beta_inf={self.beta_inf:.6g}>"
        )


def gamma_neg(s: float) -> float:
    """
    ``Γ(-s)`` for ``0 < s < 1``, via ``Γ(-s) = Γ(2 - s) / (s (s - 1))``.

    :raises OutOfRange: If ``s`` is not strictly between 0 and 1
    """
    s = _check_s(s)
    return float(scipy.special.gamma(2.0 - s)) / (s * (s - 1.0))


def _low_betas(s: float, dt: float, j: np.ndarray) -> np.ndarray:
    # (j - 1/2)^{-s} - (j + 1/2)^{-s}, without cancellation
    lower = j - 0.5
    difference = -(lower**-s) * np.expm1(-s * np.log1p(1.0 / lower))
    return dt**-s / s * difference


def _second_difference(a: float, j: np.ndarray) -> np.ndarray:
    """
    ``(j+1)^a - 2 j^a + (j-1)^a`` for integers ``j >= 2``.
    """
    j = np.asarray(j, dtype=float)
    direct = (j + 1.0) ** a - 2.0 * j**a + (j - 1.0) ** a

    u = 1.0 / j
    k = np.arange(1, _SERIES_TERMS + 1)
    coefficients = 2.0 * scipy.special.binom(a, 2 * k)
    series = j**a * (u[:, None] ** (2 * k) @ coefficients)

    return np.where(j < _SERIES_FROM, direct, series)


def _high_interior(s: float, dt: float, j: np.ndarray) -> np.ndarray:
    return dt**-s * _second_difference(1.0 - s, j) / (s * (s - 1.0))


def _high_first(s: float, dt: float) -> float:
    # 1/(1-s) - F'(1) + F(2) - F(1)
    return dt**-s * (1.0 / (1.0 - s) + 1.0 / s + math.expm1((1.0 - s) * math.log(2.0)) / (s * (s - 1.0)))


def _high_last(s: float, dt: float, n: int) -> float:
    # F'(N) - F(N) + F(N - 1)
    a = 1.0 - s
    step = -(n**a) * math.expm1(a * math.log1p(-1.0 / n))
    return dt**-s * (-(n**-s) / s + step / (s * a))


def _check_inputs(s: float, dt: float, n_t: int, minimum: int) -> Tuple[float, float, int]:
    return _check_s(s), check_positive("dt", dt), check_integer("n_t", n_t, minimum)


def weights_low(s: float, dt: float, n_t: int) -> QuadWeights:
    """
    Midpoint-cell weights ``beta_j = ∫_{t_j - dt/2}^{t_j + dt/2} t^{-1-s} dt``
    and ``beta_inf = 1 / (s ((n_t + 1/2) dt)^s)``.

    Together they telescope to ``(1/s) (dt/2)^{-s}``.
    """
    s, dt, n_t = _check_inputs(s, dt, n_t, 1)
    j = np.arange(1, n_t + 1, dtype=float)
    t2 = (n_t + 0.5) * dt
    return QuadWeights(
        scheme="low",
        s=s,
        dt=dt,
        n_t=n_t,
        betas=_low_betas(s, dt, j),
        beta_inf=1.0 / (s * t2**s),
        gamma_prefactor=1.0 / gamma_neg(s),
        t2=t2,
    )


def weights_high(s: float, dt: float, n_t: int) -> QuadWeights:
    """
    Hat-function weights ``beta_j = ∫ P(t - t_j) t^{-1-s} dt`` on ``[0, n_t dt]``
    and ``beta_inf = 1 / (s (n_t dt)^s)``.

    With ``F(t) = t^{1-s} / (s (s-1))`` and ``F'(t) = -1 / (s t^s)``, the
    interior weights are ``dt^{-s} (F(j+1) - 2F(j) + F(j-1))``. They are
    evaluated through a binomial series for large ``j``, where the plain
    second difference loses most of its digits.

    :raises OutOfRange: If ``n_t < 2``
    """
    s, dt, n_t = _check_inputs(s, dt, n_t, 2)
    betas = np.empty(n_t)
    betas[0] = _high_first(s, dt)
    betas[1:-1] = _high_interior(s, dt, np.arange(2, n_t, dtype=float))
    betas[-1] = _high_last(s, dt, n_t)

    t2 = n_t * dt
    return QuadWeights(
        scheme="high",
        s=s,
        dt=dt,
        n_t=n_t,
        betas=betas,
        beta_inf=1.0 / (s * t2**s),
        gamma_prefactor=1.0 / gamma_neg(s),
        t2=t2,
    )


def quad_weights(scheme: Scheme, s: float, dt: float, n_t: int) -> QuadWeights:
    check_option("scheme", scheme, get_args(Scheme))
    if scheme == "low":
        return weights_low(s, dt, n_t)
    return weights_high(s, dt, n_t)


def provisional_beta(scheme: Scheme, s: float, dt: float, j: int) -> float:
    """
    Weight of step ``j`` assuming further steps follow. Only the last weight
    of the high-order scheme differs from this once ``n_t`` is fixed.
    """
    check_option("scheme", scheme, get_args(Scheme))
    s = _check_s(s)
    dt = check_positive("dt", dt)
    j = check_integer("j", j, 1)

    if scheme == "low":
        return float(_low_betas(s, dt, np.array([float(j)]))[0])
    if j == 1:
        return _high_first(s, dt)
    return float(_high_interior(s, dt, np.array([float(j)]))[0])


def min_steps(scheme: Scheme) -> int:
    return 1 if scheme == "low" else 2


def choose_nt(scheme: Scheme, s: float, dt: float, lambda_min: float) -> int:
    """
    Smallest ``n_t`` satisfying the scheme's tail rule:
    ``(1 - s) / (lambda_min dt) * log(1/dt)`` for the low-order scheme,
    ``(2 - s) / (lambda_min dt) * log(1/dt)`` for the high-order one.

    :param lambda_min: First nonzero eigenvalue of ``-Δ_B`` or a positive lower bound
    :raises NtRuleUndefined: If ``dt >= 1``
    """
    check_option("scheme", scheme, get_args(Scheme))
    s = _check_s(s)
    dt = check_positive("dt", dt)
    lambda_min = check_positive("lambda_min", lambda_min)
    if dt >= 1.0:
        raise NtRuleUndefined(dt)

    order = 1.0 - s if scheme == "low" else 2.0 - s
    bound = order / (lambda_min * dt) * math.log(1.0 / dt)
    return max(math.ceil(bound), min_steps(scheme))


def adaptive_tail_nt(
    snapshots: Iterable[FieldVector],
    w0: FieldVector,
    w_inf: FieldVector,
    M: CsrMatrix,
    tol_rel: float,
    n_t_max: Optional[int] = None,
    *,
    floor: float = 0.0,
) -> int:
    """
    Consumes heat snapshots ``W^(1), W^(2), ...`` until the first ``j`` with
    ``‖W^(j) - W_∞‖_M <= tol_rel * ‖W^(0) - W_∞‖_M`` and returns that ``j``.

    The threshold never drops below ``floor`` nor below rounding level of
    ``‖W^(0)‖_M``, so data that are already steady stop after one step.

    :raises NtCapExceeded: If no snapshot up to ``n_t_max`` qualifies; the
        error carries the number of snapshots examined
    """
    tol_rel = check_positive("tol_rel", tol_rel)
    cap = max_nt() if n_t_max is None else check_integer("n_t_max", n_t_max, 1)
    w0 = np.asarray(w0, dtype=float)

    def m_norm(v: np.ndarray) -> float:
        return math.sqrt(max(float(v @ (M @ v)), 0.0))

    rounding = _ROUNDING_FACTOR * np.finfo(float).eps * max(m_norm(w0), m_norm(w_inf))
    threshold = max(tol_rel * m_norm(w0 - w_inf), floor, rounding)
    j = 0
    for j, w in enumerate(snapshots, 1):
        if m_norm(w - w_inf) <= threshold:
            return j
        if j >= cap:
            break

    raise NtCapExceeded(j, cap)
