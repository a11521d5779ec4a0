# -*- coding: utf-8 -*-
"""Resumable error handling for the simulators: a small condition system.

A simulation run has decisions that belong at a different level of the call
stack than the place where the trouble is detected. The exact engine notices
that its support grew past the cap, but only the harness knows whether the
run may continue with the particle filter. A quadrature routine notices that
grid doubling did not converge, but only the caller knows whether the value
is good enough for a trend plot.

Exceptions unwind the stack before anybody gets to decide, so we use
conditions instead, in the style of Common Lisp:

  - Low-level code establishes *restarts* (`with restarts(...)`), i.e. named
    recovery strategies, and then *signals* a condition.
  - High-level code installs *handlers* (`with handlers(...)`). A handler
    receives the condition instance while the signaling frame is still
    alive, and may `invoke` one of the restarts in scope. Invoking a restart
    unwinds to the `with restarts` block that defined it.
  - A handler that returns normally declines, and the next (outer) handler
    for the same type gets its turn.

Protocols on top of `signal`:

  - `error`: if no handler invokes a restart, the condition is raised as a
    plain exception. Code that does not use handlers at all therefore just
    sees an ordinary `except`-able exception.
  - `cerror`: like `error`, but establishes a `proceed` restart that makes
    `cerror` return normally.
  - `warn`: establishes a `muffle` restart; if unhandled, emits a Python
    warning and continues.

Any exception instance (or class) can be signaled; there is no separate
condition base class.

This follows `unpythonic.conditions` by Juha Jeronen, which in turn is based
on python-cl-conditions by Alexander Artemenko. See also *Practical Common
Lisp*, chapter 19.
"""

__all__ = ["signal", "error",
           "cerror", "proceed",
           "warn", "muffle",
           "find_restart", "invoke", "use_value", "invoker",
           "available_restarts", "available_handlers",
           "restarts", "with_restarts", "handlers",
           "ControlError"]

import contextlib
import inspect
import sys
import threading
import types
import warnings
from collections import deque, namedtuple
from functools import partial
from operator import itemgetter

from .collections import box, unbox

_stacks = threading.local()
def _ensure_stacks():  # per-thread init
    for x in ("restarts", "handlers"):
        if not hasattr(_stacks, x):
            setattr(_stacks, x, deque())

class ControlError(Exception):
    """Misuse of the condition system itself.

    For example, invoking a restart that is not in scope, or signaling
    something that is not an exception.
    """

def _accepts_arg(f):
    try:
        sig = inspect.signature(f)
    except (TypeError, ValueError):  # pragma: no cover, builtins without a signature
        return True
    try:
        sig.bind(None)
        return True
    except TypeError:
        return False

def _equip_with_traceback(exc, depth):
    """Attach a traceback starting `depth` frames up from the caller.

    A signaled condition is never raised at the signaling site, so without
    this it would carry no traceback at all.
    """
    frames = []
    frame = sys._getframe(depth)
    while frame is not None:
        frames.append(frame)
        frame = frame.f_back
    tb = None
    for frame in frames:
        tb = types.TracebackType(tb, frame, frame.f_lasti, frame.f_lineno)
    return exc.with_traceback(tb)

def signal(condition):
    """Signal a condition.

    Handlers bound to the type of `condition` run from dynamically innermost
    to outermost, until one of them invokes a restart. Then the caller of
    `signal` exits nonlocally, and execution resumes after the `with
    restarts` block that defined the invoked restart.

    If no handler invokes a restart, `signal` returns `None` normally.

    `condition` may be an exception instance or an exception class (which is
    then instantiated with no arguments, like `raise` does).
    """
    if isinstance(condition, type) and issubclass(condition, BaseException):
        condition = condition()
    if not isinstance(condition, BaseException):
        error(ControlError("Only exceptions and subclasses of Exception can be signaled; got {} with value '{}'.".format(type(condition), condition)))

    if condition.__traceback__ is None:
        condition = _equip_with_traceback(condition, depth=2)

    for handler in _find_handlers(type(condition)):
        if _accepts_arg(handler):
            handler(condition)
        else:
            handler()

def invoke(name_or_restart, *args, **kwargs):
    """Invoke a restart currently in scope. Never returns normally.

    `name_or_restart` is a restart name, or an object returned by
    `find_restart`. Any args and kwargs are passed to the restart function;
    whatever it returns becomes the value of the `with restarts` block.
    """
    if isinstance(name_or_restart, str):
        restart = find_restart(name_or_restart)
        if not restart:
            error(ControlError("No such restart: '{}'; available restarts: {}".format(name_or_restart,
                                                                                     [n for n, _ in available_restarts()])))
    elif isinstance(name_or_restart, BoundRestart):
        restart = name_or_restart
    else:
        error(TypeError("Expected str or a return value of find_restart, got {} with value '{}'".format(type(name_or_restart), name_or_restart)))
    raise InvokeRestart(restart, *args, **kwargs)

use_value = partial(invoke, "use_value")
use_value.__doc__ = """Invoke the 'use_value' restart immediately with the given args and kwargs.

Usage::

    with handlers((QuadratureNotConverged, lambda c: use_value(c.value))):
        ...
"""

def invoker(restart_name, *args, **kwargs):
    """Create a handler that just invokes the named restart.

    The args and kwargs are frozen into the handler by closure. The handler
    ignores the condition instance.

    Usage::

        with handlers((EngineOverflow, invoker("use_particle_filter"))):
            ...
    """
    def the_invoker(condition):
        invoke(restart_name, *args, **kwargs)
    the_invoker.__name__ = restart_name
    the_invoker.__qualname__ = restart_name
    the_invoker.__doc__ = "Invoke the '{}' restart.".format(restart_name)
    return the_invoker

class _Stacked:
    def __init__(self, bindings):
        _ensure_stacks()
        self.e = bindings
    def __enter__(self):
        self.dq.appendleft(self.e)
        return self
    def __exit__(self, exctype, excvalue, traceback):
        self.dq.popleft()

class _Restarts(_Stacked):
    def __init__(self, bindings):
        for n, c in bindings.items():
            if not (isinstance(n, str) and callable(c)):
                error(TypeError("Each binding must be of the form name=callable"))
        super().__init__(bindings)
        self.dq = _stacks.restarts

class handlers(_Stacked):
    """Set up condition handlers.

    Usage::

        with handlers((cls, callable), ...):
            ...

    `cls` is a condition type, or a tuple of types, like in `except`. The
    callable may take one positional argument, the condition instance.

    To handle the condition, the handler calls `invoke` (or a restart
    function such as `proceed`, `muffle`, `use_value`). To decline, it
    returns normally; side effects (such as logging) still happen.
    """
    def __init__(self, *bindings):
        for t, c in bindings:
            types_ = t if isinstance(t, tuple) else (t,)
            if not (all(isinstance(x, type) and issubclass(x, BaseException) for x in types_) and callable(c)):
                error(TypeError("Each binding must be of the form (type, callable) or ((t0, ..., tn), callable)"))
        super().__init__(bindings)
        self.dq = _stacks.handlers

class InvokeRestart(Exception):
    def __init__(self, restart, *args, **kwargs):
        self.restart, self.a, self.kw = restart, args, kwargs
        self.args = ("dipsharp.conditions: internal error: uncaught InvokeRestart",)
    def __call__(self):
        return self.restart.function(*self.a, **self.kw)

def _find_handlers(cls):
    _ensure_stacks()
    for e in tuple(_stacks.handlers):
        for t, handler in e:
            if issubclass(cls, t):
                yield handler

BoundRestart = namedtuple("BoundRestart", ["name", "function", "context"])
def find_restart(name):
    """Look up a restart by name.

    Return an opaque object accepted by `invoke`, or `None` if no restart
    of that name is in scope. The dynamically innermost binding wins.
    """
    _ensure_stacks()
    for e in _stacks.restarts:
        if name in e:
            return BoundRestart(name, e[name], e)

def available_restarts():
    """Return a sorted list `[(name, callable), ...]` of restarts in scope.

    For each name, only the innermost binding is listed.
    """
    out = []
    seen = set()
    _ensure_stacks()
    for e in _stacks.restarts:
        for name, restart in e.items():
            if name not in seen:
                seen.add(name)
                out.append((name, restart))
    return list(sorted(out, key=itemgetter(0)))

def available_handlers():
    """Like `available_restarts`, but for handlers: `[(type, callable), ...]`.

    The innermost handler for each type wins. A handler bound to a tuple of
    types is listed once per type.
    """
    out = []
    seen = set()
    _ensure_stacks()
    for e in _stacks.handlers:
        for spec, handler in e:
            for t in (spec if isinstance(spec, tuple) else (spec,)):
                if t not in seen:
                    seen.add(t)
                    out.append((t, handler))
    return list(sorted(out, key=lambda x: x[0].__name__))

@contextlib.contextmanager
def restarts(**bindings):
    """Provide restarts.

    Usage::

        with restarts(use_particle_filter=(lambda: "pf")) as result:
            ...
            result << "exact"
        engine = unbox(result)

    The block binds a `box` for its return value. If one of the restarts
    defined here is invoked, the box receives the restart's return value and
    execution continues after the block.
    """
    b = box(None)
    with _Restarts(bindings):
        try:
            yield b
        except InvokeRestart as exc:
            if exc.restart.context is bindings:
                b << exc()
            else:
                raise

def with_restarts(**bindings):
    """Function form of `restarts`; parametric decorator.

    Returns `call_with_restarts(f)`, which calls `f()` in the scope of the
    given restarts and returns its value, or the value of an invoked restart::

        @with_restarts(use_value=(lambda x: x))
        def value():
            return integrate(...)
        # `value` is now the result, or whatever was passed to use_value
    """
    def call_with_restarts(f):
        with restarts(**bindings) as result:
            result << f()
        return unbox(result)
    return call_with_restarts

def error(condition):
    """Like `signal`, but raise the condition if no handler handles it.

    Handled means a handler actually invoked a restart. This function never
    returns normally.
    """
    if isinstance(condition, type) and issubclass(condition, BaseException):
        condition = condition()
    signal(condition)
    raise condition

def cerror(condition):
    """Like `error`, but a handler may `proceed` to make `cerror` return normally.

    Example::

        with handlers((QuadratureNotConverged, proceed)):
            value = ln_renyi2_integral(...)  # accepts the unconverged value
    """
    with restarts(proceed=(lambda: None)):
        error(condition)

def warn(condition):
    """Like `signal`, but emit a Python warning if the condition is not handled.

    Establishes a `muffle` restart; invoking it suppresses the warning, and
    the caller of `warn` continues normally either way.

    If `condition` is a `Warning`, its type is used as the warning category.
    Otherwise the message is `str(condition)` in the generic category.
    """
    with restarts(muffle=(lambda: None)):
        with restarts(_proceed=(lambda: None)):  # for dipsharp.test.fixtures
            signal(condition)
        if isinstance(condition, Warning):
            warnings.warn(condition, stacklevel=2)
        else:
            warnings.warn(str(condition), category=Warning, stacklevel=2)

proceed = invoker("proceed")
proceed.__doc__ = "Invoke the 'proceed' restart. Restart function for use with `cerror`."

muffle = invoker("muffle")
muffle.__doc__ = "Invoke the 'muffle' restart. Restart function for use with `warn`."
