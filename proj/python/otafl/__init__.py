"""Fluid-antenna over-the-air federated learning simulator and optimizer.

Thin Python wrapper over the C++ core. All names are re-exported from the
compiled module; see the README for an overview of the API surface.
"""

try:
    from ._core import *  # noqa: F401,F403  (installed package layout)
    from . import _core as core  # noqa: F401
except ImportError:  # build-tree layout: the module sits next to the package
    from _core import *  # noqa: F401,F403
    import _core as core  # noqa: F401

__all__ = [name for name in dir(core) if not name.startswith("_")]
