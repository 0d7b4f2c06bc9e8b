"""Four-spin singlet-state simulator."""

try:
    from ._spinsim import *  # noqa: F401,F403
    from ._spinsim import __doc__  # noqa: F401
except ImportError:
    # development layout: extension built out of tree, importable top level
    from _spinsim import *  # noqa: F401,F403
