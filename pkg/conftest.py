# -*- coding: utf-8 -*-
"""pytest wiring for the `dipsharp.test.fixtures` test modules.

The test modules are not pytest-style: each exposes a `runtests()` that runs
its testsets through `dipsharp.test.fixtures` (see ``runtests.py``). Here each
module becomes one pytest item that calls its `runtests()` inside a session,
and fails if the fixtures recorded any failure or error. The names imported
from the fixtures (`test`, `testset`, ...) are not collected as pytest tests.
"""

import os

import pytest

_TESTDIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "dipsharp", "test")

def _is_fixture_test_module(path):
    path = str(path)
    name = os.path.basename(path)
    return (os.path.dirname(os.path.abspath(path)) == _TESTDIR and
            name.startswith("test_") and name.endswith(".py"))

def pytest_pycollect_makeitem(collector, name, obj):
    # Suppress pytest's own collection inside the fixtures-based test modules.
    if _is_fixture_test_module(collector.path):
        return []
    return None

def pytest_collect_file(parent, file_path):
    if _is_fixture_test_module(file_path):
        return FixturesModule.from_parent(parent, path=file_path)
    return None

class FixturesModule(pytest.File):
    def collect(self):
        yield FixturesItem.from_parent(self, name="runtests")

class FixturesItem(pytest.Item):
    def runtest(self):
        from importlib import import_module
        from dipsharp.collections import unbox
        from dipsharp.test.fixtures import session, testset, tests_errored, tests_failed

        modname = "dipsharp.test." + os.path.splitext(self.path.name)[0]
        f0, e0 = unbox(tests_failed), unbox(tests_errored)
        with session(modname):
            with testset(modname):
                mod = import_module(modname)
                mod.runtests()
        failed = unbox(tests_failed) - f0
        errored = unbox(tests_errored) - e0
        if failed or errored:
            raise FixturesFailure(modname, failed, errored)

    def repr_failure(self, excinfo):
        if isinstance(excinfo.value, FixturesFailure):
            return str(excinfo.value)
        return super().repr_failure(excinfo)

    def reportinfo(self):
        return self.path, 0, "{}::runtests".format(self.path.name)

class FixturesFailure(Exception):
    def __init__(self, modname, failed, errored):
        super().__init__("{}: {} failed, {} errored (see captured output)".format(
            modname, failed, errored))
