try:
    from ._version import __version__
except ImportError:  # pragma: no cover
    __version__ = "dev"

from .groups import GroupSpec  # noqa: F401
from .laurent import LaurentPoly, parse, serialize  # noqa: F401
