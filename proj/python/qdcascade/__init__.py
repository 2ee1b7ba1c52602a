"""Monte Carlo simulator and photon-correlation analysis for a quantum-dot
biexciton-exciton cascade photon-pair source."""

from qdcascade._core import *  # noqa: F401,F403
from qdcascade._core import __version__  # noqa: F401
