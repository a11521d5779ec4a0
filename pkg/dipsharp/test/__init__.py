# -*- coding: utf-8 -*-
"""Unit tests; run them all with ``python3 runtests.py`` from the project root."""
