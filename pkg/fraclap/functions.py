"""
Built-in input data for experiments and the command line.
"""

import math
from typing import *

import numpy as np

from ._utils import check_finite, check_positive
from .errors import DimensionMismatch
from .types import *

__all__ = ["bump", "plateau_bump", "sine_cosine", "constant"]


def _squared_distance(coords: Sequence[np.ndarray], center: Sequence[float]) -> np.ndarray:
    if len(center) > len(coords):
        raise DimensionMismatch("center", len(coords), len(center))
    if len(center) < len(coords):
        center = tuple(center) + (0.0,) * (len(coords) - len(center))
    return sum((np.asarray(x, dtype=float) - c) ** 2 for x, c in zip(coords, center))


def bump(r: float, center: Sequence[float] = (0.0,), amplitude: float = 1.0) -> ScalarFunction:
    """
    ``A exp(-1 / (r² - |x - c|²))`` inside the ball of radius ``r``, zero outside.

    With ``r = 0.5`` and ``A = e⁴`` this is the porous-medium initial datum,
    which peaks at 1.
    """
    r = check_positive("r", r)
    amplitude = check_finite("amplitude", amplitude)
    center = tuple(float(c) for c in center)

    def f(*coords: np.ndarray) -> np.ndarray:
        gap = r * r - _squared_distance(coords, center)
        inside = gap > 0
        safe = np.where(inside, gap, 1.0)
        return np.where(inside, amplitude * np.exp(-1.0 / safe), 0.0)

    return f


def plateau_bump(r: float, center: Sequence[float] = (0.0,)) -> ScalarFunction:
    """
    ``exp(-ρ² / (r² - ρ²))`` with ``ρ = |x - c|`` inside the ball of radius
    ``r``; equal to 1 at the center.
    """
    r = check_positive("r", r)
    center = tuple(float(c) for c in center)

    def f(*coords: np.ndarray) -> np.ndarray:
        rho2 = _squared_distance(coords, center)
        gap = r * r - rho2
        inside = gap > 0
        safe = np.where(inside, gap, 1.0)
        return np.where(inside, np.exp(-rho2 / safe), 0.0)

    return f


def sine_cosine(amplitude: float = 0.1, kx: float = 2.0, ky: float = 1.0) -> ScalarFunction:
    """
    ``A sin(kx π x) cos(ky π y)``.
    """
    amplitude = check_finite("amplitude", amplitude)
    kx = check_finite("kx", kx)
    ky = check_finite("ky", ky)
    return lambda x, y: amplitude * np.sin(kx * math.pi * x) * np.cos(ky * math.pi * y)


def constant(value: float) -> ScalarFunction:
    value = check_finite("value", value)
    return lambda *coords: np.full(np.shape(coords[0]), value)
