# -*- coding: utf-8 -*-
"""``python -m dipsharp``"""

import sys

from .cli import main

sys.exit(main())
