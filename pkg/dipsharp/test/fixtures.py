# -*- coding: utf-8; -*-
"""dipsharp.test.fixtures, a small testing framework on the condition system.

Failed assertions are *signaled* with `cerror`, not raised, so a testset
reports the failure and resumes with the next check.

**Usage**::

    from dipsharp.test.fixtures import session, testset, test, test_raises

    with session("demo"):
        test(2 + 2 == 4)
        test(2 + 2 == 5, "should be five, no?")

        with testset("lattice"):
            test(lambda: charge(0b01110) == 3)   # a thunk: exceptions inside are caught
            test_raises(GeometryError, lambda: LatticeGeometry((0,)))
            test_signals(EngineOverflow, lambda: run_trajectory(...))

        # Unconditional failure, e.g. a missing optional dependency:
        with testset("integration"):
            fail("blargly not installed")

The asserters:

  - `test(value, message=None)`: `value` truthy. If `value` is callable it
    is called, and any signal or exception from inside it is reported as an
    error of this test.
  - `test_raises(exctype, thunk, message=None)`: `thunk()` raises `exctype`
    (a plain ``raise``).
  - `test_signals(exctype, thunk, message=None)`: `thunk()` signals
    `exctype` (`signal`, `error`, `cerror` or `warn`).
  - `fail(message)`, `warn(message)`.

A condition signaled with `error` counts as *signaled*, so test it with
`test_signals`.

If you want to customize, look at the `postproc` parameter of `testset`,
and the `TestConfig` bunch of constants.
"""

from contextlib import contextmanager
from collections import deque
from enum import Enum
from functools import partial
from traceback import format_tb
from threading import Lock
import sys

from ..conditions import cerror, find_restart, handlers, invoke, restarts
from ..collections import box, unbox

from ..ansicolor import TC, colorize

__all__ = ["session", "testset",
           "terminate",
           "test", "test_raises", "test_signals", "fail", "warn",
           "returns_normally", "catch_signals",
           "TestConfig",
           "tests_run", "tests_failed", "tests_errored", "tests_warned",
           "TestingException", "TestFailure", "TestError", "TestWarning",
           "completed", "signaled", "raised",
           "describe_exception"]

# Global counts since Python last started.
tests_run = box(0)
tests_failed = box(0)
tests_errored = box(0)
tests_warned = box(0)
tests_run.__doc__ = "How many tests have run, in total. Boxed global counter."
tests_failed.__doc__ = "How many tests have failed, in total. Boxed global counter."
tests_errored.__doc__ = "How many tests have errored, in total. Boxed global counter."
tests_warned.__doc__ = """How many tests emitted a warning. Boxed global counter.

Warnings don't count toward the total number of tests run, and do not fail
the suite.
"""
_counter_update_lock = Lock()
def _update(counter, delta):
    with _counter_update_lock:
        counter << unbox(counter) + delta

class Mode(Enum):
    """How a test exited."""
    completed = "completed"
    signaled = "signaled"
    raised = "raised"
completed = Mode.completed
signaled = Mode.signaled
raised = Mode.raised

class TestingException(Exception):
    """Base type for testing-related exceptions.

    Attributes, for runtime inspection by a `postproc`:

    `origin`: which asserter produced this. One of "test", "test_signals",
              "test_raises", "fail", "warn".
    `custom_message`: the user-provided message, or `None`.
    `filename`, `lineno`: where the asserter was called.
    `mode`: `completed`, `signaled` or `raised`.
    `result`: the value of the test, or the condition or exception instance.
    """
    def __init__(self, *args, origin=None, custom_message=None,
                 filename=None, lineno=None, mode=None, result=None):
        super().__init__(*args)
        self.origin = origin
        self.custom_message = custom_message
        self.filename = filename
        self.lineno = lineno
        self.mode = mode
        self.result = result
class TestFailure(TestingException):
    """Exception: a test ran to completion normally, but the test assertion failed.

    May also mean that a test was expected to signal or raise, but it didn't.
    """
class TestError(TestingException):
    """Exception: a test did not run to completion normally.

    This can happen due to an unexpected exception, or an unhandled
    `error` (or `cerror`) condition.
    """
class TestWarning(TestingException):
    """Exception: a human-initiated test warning."""

def maybe_colorize(s, *colors):
    """Colorize `s` if enabled in `TestConfig`; else return `s` as-is."""
    if not TestConfig.use_color:
        return s
    return colorize(s, *colors)

class TestConfig:
    """Global settings for the testing utilities.

    `printer`:          str -> None. Default is to `print` to `sys.stderr`.
    `use_color`:        bool; use ANSI color in `printer` output.
    `postproc`:         Exception -> None; optional. Called with each
                        `TestFailure` or `TestError` after it is printed.
    `indent_per_level`: How much to indent per nesting level of `testset`.
    `CS`:               The color scheme.
    """
    printer = partial(print, file=sys.stderr)
    use_color = True
    postproc = None
    indent_per_level = 2

    class CS:
        """The color scheme. Values from `dipsharp.ansicolor.TC`; a tuple for compound styles."""
        HEADING = TC.LIGHTBLUE
        PASS = TC.GREEN
        FAIL = TC.LIGHTRED
        ERROR = TC.YELLOW
        WARNING = TC.YELLOW
        GREYED_OUT = (TC.DIM, HEADING)
        SUMMARY_OK = TC.GREEN
        SUMMARY_NOTOK = TC.YELLOW

def describe_exception(exc):
    """Human-readable description of `exc`, chained exceptions included, tracebacks dimmed."""
    def describe_instance(instance):
        snippets = []
        if instance.__traceback__ is not None:
            snippets.append(maybe_colorize("\nTraceback (most recent call last):\n" +
                                           "".join(format_tb(instance.__traceback__)), TC.DIM))
        msg = str(instance)
        if msg:
            snippets.append("{}: {}".format(type(instance), msg))
        else:
            snippets.append("{}".format(type(instance)))
        return snippets

    def describe_recursive(exc):
        if isinstance(exc, BaseException):
            snippets = []
            if exc.__cause__ is not None:
                snippets.extend(describe_recursive(exc.__cause__))
                snippets.append("\n\nThe above exception was the direct cause of the following exception:\n")
            elif not exc.__suppress_context__ and exc.__context__ is not None:
                snippets.extend(describe_recursive(exc.__context__))
                snippets.append("\n\nDuring handling of the above exception, another exception occurred:\n")
            snippets.extend(describe_instance(exc))
            return snippets
        else:  # an exception class
            return [str(exc)]

    return "".join(describe_recursive(exc))

def summarize(runs, fails, errors, warns):
    """One-line summary of pass, fail, error and warning counts."""
    passes = runs - fails - errors
    if runs:
        pass_percentage = 100 * passes / runs
    else:
        pass_percentage = 100.0

    snippets = []
    for label, count, color in (("Pass", passes, TestConfig.CS.PASS),
                                ("Fail", fails, TestConfig.CS.FAIL),
                                ("Error", errors, TestConfig.CS.ERROR)):
        color = color if count else TestConfig.CS.GREYED_OUT
        snippets.extend([maybe_colorize(label, TC.BRIGHT, color),
                         " ",
                         maybe_colorize("{}".format(count), color),
                         maybe_colorize(", ", TestConfig.CS.HEADING)])
    color = TestConfig.CS.HEADING if runs else TestConfig.CS.GREYED_OUT
    snippets.extend([maybe_colorize("Total", TC.BRIGHT, color),
                     " ",
                     maybe_colorize("{}".format(runs), color)])
    color = TestConfig.CS.SUMMARY_OK if passes == runs else TestConfig.CS.SUMMARY_NOTOK
    snippets.extend([" ",
                     maybe_colorize("({}% pass)".format(int(pass_percentage)), TC.BRIGHT, color)])
    if warns > 0:
        snippets.extend([" ",
                         maybe_colorize("+ {} Warn".format(warns), TC.BRIGHT, TestConfig.CS.WARNING)])
    return "".join(snippets)

class TestSessionExit(Exception):
    """Exception, raising which terminates the current test session."""
def terminate(exc=None):  # the parameter is ignored
    """Terminate the test session. Usable as a `postproc`."""
    TestConfig.printer(maybe_colorize("** TERMINATING SESSION", TC.BRIGHT, TestConfig.CS.HEADING))
    raise TestSessionExit

def returns_normally(thunk):
    """Assert that `thunk()` runs to completion without raising or signaling.

    Usage::

        test(returns_normally(lambda: run(config)))
    """
    def check():
        thunk()
        return True
    return check

_catch_uncaught_signals = deque([True])
@contextmanager
def catch_signals(state):
    """Whether asserters and testsets catch uncaught signals (default `True`).

    Does not affect exceptions. Blocks nest; the innermost one wins.
    """
    _catch_uncaught_signals.appendleft(state)
    try:
        yield
    finally:
        _catch_uncaught_signals.popleft()

# --------------------------------------------------------------------------------
# Asserters

def _observe(thunk):
    """Run `thunk`; return ``(completed, value)``, ``(signaled, condition)`` or ``(raised, exception)``."""
    def intercept(condition):
        if not _catch_uncaught_signals[0]:
            return
        # our own conditions (nested asserters) go to the enclosing testset
        if isinstance(condition, TestingException):
            return
        invoke("_got_signal", condition)

    try:
        with restarts(_got_signal=lambda exc: exc) as sig:
            with handlers((Exception, intercept)):
                ret = thunk()
            return completed, ret
        return signaled, unbox(sig)
    except Exception as err:
        return raised, err

def _caller(depth=2):
    frame = sys._getframe(depth)
    return frame.f_code.co_filename, frame.f_lineno

def _report(conditiontype, counter, error_msg, origin, message, mode, result, where):
    filename, lineno = where
    _update(counter, +1)
    complete_msg = "[{}:{}] {}".format(filename, lineno, error_msg)
    cerror(conditiontype(complete_msg, origin=origin, custom_message=message,
                         filename=filename, lineno=lineno, mode=mode, result=result))

def _custom(message):
    return ", with message '{}'".format(message) if message is not None else ""

def test(value, message=None):
    """Assert that `value` (or `value()`, if callable) is truthy."""
    where = _caller()
    _update(tests_run, +1)
    if callable(value):
        mode, result = _observe(value)
    else:
        mode, result = completed, value
    if mode is completed:
        if result:
            return
        _report(TestFailure, tests_failed,
                "Test failed{}: got {!r}".format(_custom(message), result),
                "test", message, mode, result, where)
    else:
        what = "signal" if mode is signaled else "exception"
        _report(TestError, tests_errored,
                "Test errored{}: unexpected {}: {}".format(_custom(message), what, describe_exception(result)),
                "test", message, mode, result, where)

def test_signals(exctype, thunk, message=None):
    """Assert that `thunk()` signals a condition of type `exctype`."""
    where = _caller()
    mode, result = _observe(thunk)
    _update(tests_run, +1)
    expected = describe_exception(exctype)
    if mode is signaled and isinstance(result, exctype):
        return
    if mode is completed:
        _report(TestFailure, tests_failed,
                "Test failed{}, expected signal: {}, nothing was signaled.".format(_custom(message), expected),
                "test_signals", message, mode, result, where)
    else:
        what = "signal" if mode is signaled else "exception"
        _report(TestError, tests_errored,
                "Test errored{}, expected signal: {}, got unexpected {}: {}".format(_custom(message), expected,
                                                                                  what, describe_exception(result)),
                "test_signals", message, mode, result, where)

def test_raises(exctype, thunk, message=None):
    """Assert that `thunk()` raises an exception of type `exctype`."""
    where = _caller()
    mode, result = _observe(thunk)
    _update(tests_run, +1)
    expected = describe_exception(exctype)
    if mode is raised and isinstance(result, exctype):
        return
    if mode is completed:
        _report(TestFailure, tests_failed,
                "Test failed{}, expected exception: {}, nothing was raised.".format(_custom(message), expected),
                "test_raises", message, mode, result, where)
    else:
        what = "signal" if mode is signaled else "exception"
        _report(TestError, tests_errored,
                "Test errored{}, expected exception: {}, got unexpected {}: {}".format(_custom(message), expected,
                                                                                     what, describe_exception(result)),
                "test_raises", message, mode, result, where)

def fail(message):
    """Unconditional failure, e.g. for a line that should be unreachable."""
    _update(tests_run, +1)
    _report(TestFailure, tests_failed, "Failure: {}".format(message),
            "fail", message, completed, None, _caller())

def warn(message):
    """A human-initiated warning. Does not count as a test."""
    where = _caller()
    _update(tests_warned, +1)
    from ..conditions import warn as warn_condition
    filename, lineno = where
    warn_condition(TestWarning("[{}:{}] Warning: {}".format(filename, lineno, message),
                               origin="warn", custom_message=message,
                               filename=filename, lineno=lineno, mode=completed))

# --------------------------------------------------------------------------------
# Sessions and testsets

_nesting_level = 0
@contextmanager
def session(name=None):
    """A test session: an implicit top-level testset plus an exit point for `terminate`."""
    if _nesting_level > 0:
        raise RuntimeError("A test `session` cannot be nested inside a `testset`.")

    title = maybe_colorize("SESSION", TC.BRIGHT, TestConfig.CS.HEADING)
    if name is not None:
        title += maybe_colorize(" '{}'".format(name), TC.ITALIC, TestConfig.CS.HEADING)
    TestConfig.printer(maybe_colorize("{} ".format(title), TestConfig.CS.HEADING) +
                       maybe_colorize("BEGIN", TC.BRIGHT, TestConfig.CS.HEADING))
    try:
        with testset("top level"):
            yield
    except TestSessionExit:
        pass
    TestConfig.printer(maybe_colorize("{} ".format(title), TestConfig.CS.HEADING) +
                       maybe_colorize("END", TC.BRIGHT, TestConfig.CS.HEADING))

_postproc_stack = deque()
@contextmanager
def testset(name=None, postproc=None):
    """A named group of tests; prints a summary when it ends.

    `postproc` overrides `TestConfig.postproc` for this testset and the
    testsets inside it.
    """
    def counters():
        return tuple(unbox(b) for b in (tests_run, tests_failed, tests_errored, tests_warned))
    r1, f1, e1, w1 = counters()

    def makeindent(level):
        indent = "*" * (TestConfig.indent_per_level * level)
        if len(indent):
            indent += " "
        return indent

    global _nesting_level
    indent = makeindent(_nesting_level)
    errmsg_indent = makeindent(_nesting_level + 1)
    _nesting_level += 1

    title = "{}Testset".format(indent)
    if name is not None:
        title += maybe_colorize(" '{}'".format(name), TC.ITALIC)
    TestConfig.printer(maybe_colorize("{} ".format(title), TestConfig.CS.HEADING) +
                       maybe_colorize("BEGIN", TC.BRIGHT, TestConfig.CS.HEADING))

    def print_and_proceed(condition):
        if isinstance(condition, TestFailure):
            msg = maybe_colorize("{}FAIL: ".format(errmsg_indent),
                                 TC.BRIGHT, TestConfig.CS.FAIL) + str(condition)
        elif isinstance(condition, TestError):
            msg = maybe_colorize("{}ERROR: ".format(errmsg_indent),
                                 TC.BRIGHT, TestConfig.CS.ERROR) + str(condition)
        elif isinstance(condition, TestWarning):
            msg = maybe_colorize("{}WARNING: ".format(errmsg_indent),
                                 TC.BRIGHT, TestConfig.CS.WARNING) + str(condition)
        else:
            if not _catch_uncaught_signals[0]:
                return
            _update(tests_run, +1)
            _update(tests_errored, +1)
            msg = maybe_colorize("{}Testset received signal outside test(): ".format(errmsg_indent),
                                 TC.BRIGHT, TestConfig.CS.ERROR) + describe_exception(condition)
        TestConfig.printer(msg)

        if _postproc_stack:
            r = _postproc_stack[0]
        elif TestConfig.postproc is not None:
            r = TestConfig.postproc
        else:
            r = None
        if r is not None:
            r(condition)

        p = find_restart("proceed")
        if not p:
            # dipsharp.conditions.warn provides "_proceed" so the warning stops here
            p = find_restart("_proceed")
        if p is not None:
            invoke(p)

    if postproc is not None:
        _postproc_stack.appendleft(postproc)

    try:
        with handlers((Exception, print_and_proceed)):
            yield
    except TestSessionExit:
        if postproc is not None:
            _postproc_stack.popleft()
        _nesting_level -= 1
        raise
    except Exception as err:
        _update(tests_run, +1)
        _update(tests_errored, +1)
        msg = maybe_colorize("{}Testset terminated by exception outside test(): ".format(errmsg_indent),
                             TC.BRIGHT, TestConfig.CS.ERROR)
        msg += describe_exception(err)
        TestConfig.printer(msg)

    if postproc is not None:
        _postproc_stack.popleft()
    _nesting_level -= 1
    assert _nesting_level >= 0

    r2, f2, e2, w2 = counters()
    msg = (maybe_colorize("{} ".format(title), TestConfig.CS.HEADING) +
           maybe_colorize("END", TC.BRIGHT, TestConfig.CS.HEADING) +
           maybe_colorize(": ", TestConfig.CS.HEADING) +
           summarize(r2 - r1, f2 - f1, e2 - e1, w2 - w1))
    TestConfig.printer(msg)
