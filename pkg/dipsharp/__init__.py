# -*- coding: utf-8 -*-
"""Monitored dipole-conserving circuits: charge and dipole sharpening.

Exact and particle-filter simulation of the measurement-conditioned state,
plus numerical evaluation of the effective field theory.

See ``dir(dipsharp)`` and the submodule docstrings for more. The command
line front end is ``dipsharp.cli``.
"""

__version__ = '0.1.0'

from .collections import *  # noqa: F401, F403
from .conditions import *  # noqa: F401, F403
from .dynassign import *  # noqa: F401, F403
from .lattice import *  # noqa: F401, F403
from .gates import *  # noqa: F401, F403
from .exact import *  # noqa: F401, F403
from .particles import *  # noqa: F401, F403
from .fitting import *  # noqa: F401, F403
from .theory import *  # noqa: F401, F403
from .config import *  # noqa: F401, F403
from .harness import *  # noqa: F401, F403
