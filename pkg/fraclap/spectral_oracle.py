"""
Closed-form eigenpairs of ``-Δ_B`` on intervals and rectangles.

Exact fractional powers of eigenfunctions, ``(-Δ_B)^s φ = λ^s φ``, are the
reference solutions of the convergence studies.
"""

import dataclasses
import functools
import math
from typing import *

import numpy as np
import scipy.integrate
import scipy.optimize

from ._utils import call_function, check_finite, check_integer, check_positive
from .errors import *
from .fem import BoundaryCondition
from .types import *

__all__ = [
    "EigenPair",
    "eig_1d",
    "robin_root",
    "eig_2d_square",
    "eig_2d_rectangle",
    "exact_fractional",
    "lambda_min",
    "series_fractional_1d",
]


_BRACKET_GUARD = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class EigenPair:
    """
    An eigenvalue ``lam`` with its eigenfunction ``phi``; ``indices`` is
    ``(m,)`` in 1D and ``(m, l)`` in 2D. Calling the pair evaluates ``phi``.
    """

    indices: Tuple[int, ...]
    lam: float
    phi: ScalarFunction
    bc: BoundaryCondition
    normalized: bool = True

    def __call__(self, *coords: np.ndarray) -> np.ndarray:
        return self.phi(*coords)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.bc} indices={self.indices} lambda={self.lam:.10g}>"


def _robin_equation(a: float, kl: float) -> float:
    return (2.0 * a / kl) * math.cos(a) + (1.0 - (a / kl) ** 2) * math.sin(a)


def _robin_derivative(a: float, kl: float) -> float:
    return (
        (2.0 / kl) * math.cos(a)
        - (2.0 * a / kl) * math.sin(a)
        - (2.0 * a / kl**2) * math.sin(a)
        + (1.0 - (a / kl) ** 2) * math.cos(a)
    )


@functools.lru_cache(maxsize=256)
def robin_root(kappa: float, L: float, m: int) -> float:
    """
    The ``m``-th root ``a_m`` of

        (2a / (κL)) cos(a) + (1 - (a / (κL))²) sin(a) = 0

    inside ``((m-1)π, mπ)``. The Robin eigenvalues on ``(0, L)`` are
    ``(a_m / L)²``.

    :raises RootNotBracketed: If the guarded bracket shows no sign change
    """
    kappa = check_positive("kappa", kappa)
    L = check_positive("L", L)
    m = check_integer("m", m, 1)

    kl = kappa * L
    low = (m - 1) * math.pi + _BRACKET_GUARD
    high = m * math.pi - _BRACKET_GUARD
    f_low = _robin_equation(low, kl)
    f_high = _robin_equation(high, kl)
    if f_low * f_high >= 0:
        raise RootNotBracketed(kappa, L, m)

    root = scipy.optimize.brentq(_robin_equation, low, high, args=(kl,), xtol=1e-15, rtol=4e-16)

    derivative = _robin_derivative(root, kl)
    if derivative != 0:
        polished = root - _robin_equation(root, kl) / derivative
        if low < polished < high and abs(_robin_equation(polished, kl)) <= abs(_robin_equation(root, kl)):
            root = polished
    return root


def _robin_factor(kappa: float, L: float, m: int) -> Tuple[float, float]:
    a = robin_root(kappa, L, m)
    return a, a / (kappa * L)


def _eig_1d_raw(bc: BoundaryCondition, L: float, m: int) -> Tuple[float, Callable[[np.ndarray], np.ndarray]]:
    if bc.kind == "dirichlet":
        k = m * math.pi / L
        scale = math.sqrt(2.0 / L)
        return k * k, lambda x: scale * np.sin(k * np.asarray(x, dtype=float))

    if bc.kind == "neumann":
        k = (m - 1) * math.pi / L
        if m == 1:
            value = 1.0 / math.sqrt(L)
            return 0.0, lambda x: np.full(np.shape(x), value)
        scale = math.sqrt(2.0 / L)
        return k * k, lambda x: scale * np.cos(k * np.asarray(x, dtype=float))

    if callable(bc.kappa):
        raise UnsupportedBoundaryCondition("robin with variable kappa", "eig_1d")

    a, ratio = _robin_factor(bc.kappa, L, m)
    k = a / L

    def shape(x):
        x = np.asarray(x, dtype=float)
        return np.sin(k * x) + ratio * np.cos(k * x)

    norm_squared, _ = scipy.integrate.quad(
        lambda x: float(shape(x)) ** 2, 0.0, L, epsabs=0.0, epsrel=1e-13, limit=200
    )
    scale = 1.0 / math.sqrt(norm_squared)
    return k * k, lambda x: scale * shape(x)


def eig_1d(bc: BoundaryCondition, L: float, m: int) -> EigenPair:
    """
    The ``m``-th L²-normalized eigenpair of ``-d²/dx²`` on ``(0, L)``:

    - Dirichlet: ``sin(mπx/L)``, ``λ = (mπ/L)²``
    - Neumann: ``cos((m-1)πx/L)``, ``λ = ((m-1)π/L)²``
    - Robin: ``sin(a x/L) + a/(κL) cos(a x/L)``, ``λ = (a/L)²`` with ``a`` from
      :func:`robin_root`
    """
    L = check_positive("L", L)
    m = check_integer("m", m, 1)
    lam, phi = _eig_1d_raw(bc, L, m)
    return EigenPair((m,), lam, phi, bc)


def eig_2d_rectangle(
    bc: BoundaryCondition, m: int, l: int, width: float = 1.0, height: float = 1.0
) -> EigenPair:
    """
    Tensor-product eigenpair ``φ_m(x) φ_l(y)`` with ``λ = λ_m + λ_l`` on
    ``[0, width] x [0, height]``.

    .. versionadded:: 0.2
    """
    width = check_positive("width", width)
    height = check_positive("height", height)
    m = check_integer("m", m, 1)
    l = check_integer("l", l, 1)

    lam_x, phi_x = _eig_1d_raw(bc, width, m)
    lam_y, phi_y = _eig_1d_raw(bc, height, l)
    return EigenPair((m, l), lam_x + lam_y, lambda x, y: phi_x(x) * phi_y(y), bc)


def eig_2d_square(bc: BoundaryCondition, m: int, l: int) -> EigenPair:
    return eig_2d_rectangle(bc, m, l)


def exact_fractional(pair: EigenPair, s: float) -> ScalarFunction:
    """
    ``x ↦ λ^s φ(x)``.
    """
    s = check_finite("s", s)
    if not 0.0 < s < 1.0:
        raise OutOfRange("s", s, "0 < s < 1")

    factor = pair.lam**s if pair.lam > 0 else 0.0
    return lambda *x: factor * np.asarray(pair.phi(*x), dtype=float)


def lambda_min(bc: BoundaryCondition, lengths: Sequence[float]) -> float:
    """
    First nonzero eigenvalue of ``-Δ_B`` on the interval or rectangle with the
    given side lengths.

    .. versionadded:: 0.2
    """
    lengths = [check_positive("lengths", length) for length in lengths]
    if not 1 <= len(lengths) <= 2:
        raise InvalidArgumentError("lengths", lengths)

    if bc.kind == "neumann":
        return min((math.pi / length) ** 2 for length in lengths)

    return sum(_eig_1d_raw(bc, length, 1)[0] for length in lengths)


def series_fractional_1d(
    u: ScalarFunction,
    bc: BoundaryCondition,
    a: float,
    b: float,
    s: float,
    n_modes: int = 200,
) -> ScalarFunction:
    """
    Truncated eigen-expansion ``Σ_m λ_m^s <u, φ_m> φ_m`` on ``(a, b)``, an
    oracle for data that are not eigenfunctions.

    .. versionadded:: 0.2
    """
    a = check_finite("a", a)
    b = check_finite("b", b)
    if a >= b:
        raise OutOfRange("b", b, "b > a")
    s = check_finite("s", s)
    if not 0.0 < s < 1.0:
        raise OutOfRange("s", s, "0 < s < 1")
    n_modes = check_integer("n_modes", n_modes, 1)

    length = b - a
    modes = []
    for m in range(1, n_modes + 1):
        lam, phi = _eig_1d_raw(bc, length, m)
        if lam == 0:
            continue
        coefficient, _ = scipy.integrate.quad(
            lambda x: float(call_function(u, np.array([[x]]))[0]) * float(phi(x - a)),
            a,
            b,
            epsabs=1e-13,
            limit=400,
        )
        modes.append((lam**s * coefficient, phi))

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return sum((c * phi(x - a) for c, phi in modes), np.zeros_like(x))

    return evaluate
