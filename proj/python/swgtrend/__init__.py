"""Python bindings for the precipitation HMM weather-generator core."""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:  # running against a build tree on PYTHONPATH
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
