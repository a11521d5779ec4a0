# -*- coding: utf-8 -*-
"""Small containers used across dipsharp.

`box` is a mutable single-item container. The condition system hands one to
the body of `with restarts` to carry the block's return value, and the test
fixtures keep their global counters in boxes so they can be queried and
reset without yet another single-purpose API.
"""

__all__ = ["box", "unbox"]

class box:
    """Minimalistic, mutable single-item container.

    Usage::

        b = box(17)
        def f(b):
            b << 23
        f(b)
        assert unbox(b) == 23

    If you prefer methods, `b.set(23)` and `b.get()` do the same.

    A box compares equal to the item it contains. A box is not hashable,
    because it is a mutable container.
    """
    def __init__(self, x=None):
        self.x = x
    def __repr__(self):  # pragma: no cover
        return "box({})".format(repr(self.x))
    def __contains__(self, x):
        return self.x == x
    def __iter__(self):
        return (x for x in (self.x,))
    def __len__(self):
        return 1
    def __eq__(self, other):
        return other == self.x
    __hash__ = None
    def set(self, x):
        """Store a new value in the box, replacing the old one. Return the new value."""
        self.x = x
        return x
    def __lshift__(self, x):
        """`b << 42` is the same as `b.set(42)`."""
        return self.set(x)
    def get(self):
        """Return the value currently in the box. Sugar: `unbox(b)`."""
        return self.x

def unbox(b):
    """Return the value from inside the box `b`.

    If `b` is not a `box`, raises `TypeError`.
    """
    if not isinstance(b, box):
        raise TypeError("Expected box, got {} with value '{}'".format(type(b), b))
    return b.get()
