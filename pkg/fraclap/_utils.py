import functools
import math
from typing import *

import numpy as np
import scipy.special

from .errors import *
from .types import *


def check_finite(parameter: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise OutOfRange(parameter, value, "a finite number")
    return value


def check_positive(parameter: str, value: float) -> float:
    value = check_finite(parameter, value)
    if value <= 0:
        raise OutOfRange(parameter, value, f"{parameter} > 0")
    return value


def check_integer(parameter: str, value: int, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidArgumentError(parameter, value)
    if value < minimum:
        raise OutOfRange(parameter, value, f"{parameter} >= {minimum}")
    return int(value)


def check_option(parameter: str, value: str, options: Iterable[str]) -> str:
    options = tuple(options)
    if value not in options:
        raise InvalidOption(parameter, value, options)
    return value


def call_function(f: ScalarFunction, points: Coordinates) -> np.ndarray:
    """
    Evaluates a user function at an ``(n, dim)`` array of points. The function
    receives one coordinate array per dimension.
    """
    values = np.asarray(f(*points.T), dtype=float)
    return np.array(np.broadcast_to(values, (points.shape[0],)))


@functools.lru_cache(maxsize=None)
def element_rule(dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quadrature on the reference simplex as ``(barycentric, weights)``. The
    weights sum to 1 and get scaled by the element measure.

    1D uses 5-point Gauss-Legendre, 2D the 7-point rule of degree 5.
    """
    if dim == 1:
        x, w = scipy.special.roots_legendre(5)
        xi = 0.5 * (x + 1.0)
        bary = np.column_stack([1.0 - xi, xi])
        weights = 0.5 * w
    else:
        r15 = math.sqrt(15.0)
        a = (6.0 - r15) / 21.0
        b = (6.0 + r15) / 21.0
        wa = (155.0 - r15) / 1200.0
        wb = (155.0 + r15) / 1200.0
        bary = np.array(
            [
                [1 / 3, 1 / 3, 1 / 3],
                [a, a, 1 - 2 * a],
                [a, 1 - 2 * a, a],
                [1 - 2 * a, a, a],
                [b, b, 1 - 2 * b],
                [b, 1 - 2 * b, b],
                [1 - 2 * b, b, b],
            ]
        )
        weights = np.array([9 / 40, wa, wa, wa, wb, wb, wb])

    bary.flags.writeable = False
    weights.flags.writeable = False
    return bary, weights


@functools.lru_cache(maxsize=None)
def edge_rule() -> Tuple[np.ndarray, np.ndarray]:
    """
    2-point Gauss-Legendre on an edge, as ``(barycentric, weights)``.
    """
    x, w = scipy.special.roots_legendre(2)
    xi = 0.5 * (x + 1.0)
    bary = np.column_stack([1.0 - xi, xi])
    weights = 0.5 * w
    bary.flags.writeable = False
    weights.flags.writeable = False
    return bary, weights


def freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array
