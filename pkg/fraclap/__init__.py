"""
Spectral fractional Laplacian on bounded domains via the heat semigroup
"""

__version__ = "0.3.0"

from .mesh import *
from .linalg import *
from .fem import *
from .heat import *
from .fracquad import *
from .fracop import *
from .spectral_oracle import *
from .harness import *
from .pme import *
from .config import *
from .types import *

from . import errors
from . import functions
from . import types

# Make sure a ``from fraclap import *`` doesn't import the ``types``
# submodule
import types as types_

__all__ = [
    name
    for name, obj in globals().items()
    if not isinstance(obj, types_.ModuleType) and not name.startswith("_")
]
del types_
