"""Multi-modal empathy model: training, evaluation, topic supervision."""

try:
    from ._empnet import *  # noqa: F401,F403  (installed layout)
    from ._empnet import __version__  # noqa: F401
except ImportError:  # build-tree layout: extension on PYTHONPATH
    from _empnet import *  # noqa: F401,F403
    from _empnet import __version__  # noqa: F401
