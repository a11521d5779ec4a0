# -*- coding: utf-8 -*-
"""Dynamic assignment for numeric knobs.

Caps and tolerances (the exact-mode support cap, the resampling threshold,
the number of bootstrap resamples, ...) are read through the singleton
``dyn``. Each module declares its knobs with ``make_dynvar``, which sets
the default; callers override a knob for a dynamic extent::

    from dipsharp.dynassign import dyn

    with dyn.let(exact_support_cap=1 << 16):
        run(config)  # everything called from here sees the smaller cap

Bindings are per thread. A new thread starts from a copy of the main
thread's bindings. Worker processes start from the defaults only, so the
harness passes the values it needs explicitly and rebinds them in the
worker.

Similar to ``parameterize`` in Racket, or special variables in Common Lisp.
"""

__all__ = ["dyn", "make_dynvar"]

import threading
from collections import ChainMap

_global_dynvars = {}

_L = threading.local()

_mainthread_stack = []
_mainthread_lock = threading.RLock()
def _getstack():
    if threading.current_thread() is threading.main_thread():
        return _mainthread_stack
    if not hasattr(_L, "_stack"):
        with _mainthread_lock:
            _L._stack = _mainthread_stack.copy()
    return _L._stack

class _EnvBlock:
    def __init__(self, bindings):
        self.bindings = bindings
    def __enter__(self):
        if self.bindings:
            _getstack().append(self.bindings)
    def __exit__(self, t, v, tb):
        if self.bindings:
            _getstack().pop()

class _Dyn:
    """Dynamic variables. See the module docstring."""
    def _resolve(self, name):
        for scope in reversed(_getstack()):
            if name in scope:
                return scope
        if name in _global_dynvars:
            return _global_dynvars
        raise AttributeError("dynamic variable '{:s}' is not defined".format(name))

    def __getattr__(self, name):
        scope = self._resolve(name)
        return scope[name]

    def __setattr__(self, name, value):
        """Update an existing binding in the closest scope that has it.

        Raises ``AttributeError`` if ``name`` is not bound anywhere.
        """
        scope = self._resolve(name)
        scope[name] = value

    def let(self, **bindings):
        """Introduce dynamic bindings. Usage: ``with dyn.let(name=value, ...):``"""
        return _EnvBlock(bindings)

    def __contains__(self, name):
        try:
            getattr(self, name)
            return True
        except AttributeError:
            return False

    def asdict(self):
        """Return a snapshot of all visible bindings as a ``ChainMap``."""
        return ChainMap(*reversed(_getstack()), _global_dynvars)

    def snapshot(self, *names):
        """Current values of `names` as a plain dict, e.g. to rebind them in a worker process.

        With no names, every visible binding.
        """
        names = names or tuple(self)
        return {name: getattr(self, name) for name in names}

    def __iter__(self):
        return iter(self.asdict())

    def items(self):
        return self.asdict().items()

    def get(self, k, default=None):
        return self[k] if k in self else default

    def __getitem__(self, k):
        return getattr(self, k)

    def __repr__(self):
        bindings = ["{:s}={}".format(k, repr(self[k])) for k in sorted(self)]
        return "<dyn object at 0x{:x}: {{{:s}}}>".format(id(self), ", ".join(bindings))
dyn = _Dyn()

def make_dynvar(**bindings):
    """Create dynamic variables and set their default values.

    The default is what ``dyn`` returns outside any ``with dyn.let()`` that
    binds the name. Re-running the definition (a module loaded twice) just
    overwrites the default.
    """
    for name in bindings:
        _global_dynvars[name] = bindings[name]
