import typing

import numpy as np
import numpy.typing as npt
import scipy.sparse
import sentinel
import typing_extensions


__all__ = [
    "FieldVector",
    "Coordinates",
    "CsrMatrix",
    "ScalarFunction",
    "Scheme",
    "BoundaryKind",
    "AUTO",
    "AutoType",
]


# Marks parameters whose value is derived from the other arguments (or the
# environment) when left alone.
AUTO = sentinel.create("AUTO")
AutoType = type(AUTO)


FieldVector: typing_extensions.TypeAlias = "npt.NDArray[np.float64]"
Coordinates: typing_extensions.TypeAlias = "npt.NDArray[np.float64]"
CsrMatrix: typing_extensions.TypeAlias = scipy.sparse.csr_matrix

# Called with one coordinate array per space dimension, ``f(x)`` in 1D and
# ``f(x, y)`` in 2D. Returns something that broadcasts to the shape of ``x``.
ScalarFunction = typing.Callable[..., npt.ArrayLike]

Scheme = typing.Literal["low", "high"]
BoundaryKind = typing.Literal["dirichlet", "neumann", "robin"]
