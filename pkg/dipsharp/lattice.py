# -*- coding: utf-8 -*-
"""Lattice geometry, occupation configurations and conserved quantities.

A configuration is a hardcore occupation pattern, one bit per site, packed
into an integer: site ``i`` is bit ``i`` (site 0 is the least significant
bit). In 2D, sites are numbered row-major, ``i = y * Lx + x``, and site ``i``
sits at coordinate ``(x, y)``. Boundaries are open; the dipole moment is
only globally well defined without wraparound, so periodic geometries are
rejected.

The scalar API (`charge`, `dipole`, `sector_key`, `window_pack`, ...) works
on `Configuration` values or on plain ints together with a geometry. The
engines work on numpy arrays of packed configurations (dtype ``int64``)
through the vectorized helpers `charges`, `dipoles`, `bits_matrix`,
`gather_window` and `window_spread`.

Serialized form is a 0/1 string with site 0 first::

    >>> Configuration.from_string("01010").sector_key
    SectorKey(Q=2, P=4)
"""

__all__ = ["LatticeGeometry", "Configuration", "SectorKey", "GeometryError",
           "charge", "dipole", "sector_key",
           "window_pack", "window_unpack", "translate",
           "config_to_string", "config_from_string",
           "charges", "dipoles", "bits_matrix", "gather_window", "window_spread",
           "enumerate_configurations"]

from collections import namedtuple
from itertools import combinations

import numpy as np

from .dynassign import dyn, make_dynvar

make_dynvar(exact_site_cap=24)

MAX_WINDOW = 8

class GeometryError(ValueError):
    """Invalid lattice geometry, or a window that does not fit the lattice."""

SectorKey = namedtuple("SectorKey", ["Q", "P"])
SectorKey.__doc__ = """Conserved quantities of a configuration.

`Q` is the total charge. `P` is the dipole moment: an int in 1D, a pair
``(Px, Py)`` in 2D.
"""

class LatticeGeometry:
    """Open-boundary lattice in one or two dimensions.

    `lengths`: site count per axis, ``(L,)`` or ``(Lx, Ly)``. An int is
    accepted for 1D.
    """
    __slots__ = ("lengths", "boundary", "_coords")

    def __init__(self, lengths, boundary="open"):
        if isinstance(lengths, (int, np.integer)):
            lengths = (lengths,)
        lengths = tuple(int(n) for n in lengths)
        if len(lengths) not in (1, 2):
            raise GeometryError("Expected 1 or 2 axes, got {}".format(len(lengths)))
        if any(n < 1 for n in lengths):
            raise GeometryError("Axis lengths must be positive, got {}".format(lengths))
        if boundary != "open":
            raise GeometryError("Only open boundaries are supported (dipole moment is ill-defined with wraparound), got '{}'".format(boundary))
        if np.prod(lengths) > 62:
            raise GeometryError("At most 62 sites fit a packed configuration, got {}".format(np.prod(lengths)))
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "boundary", boundary)
        xs = np.arange(self.n_sites) % lengths[0]
        if len(lengths) == 1:
            coords = xs[:, None]
        else:
            coords = np.stack([xs, np.arange(self.n_sites) // lengths[0]], axis=1)
        coords = coords.astype(np.int64)
        coords.flags.writeable = False
        object.__setattr__(self, "_coords", coords)

    def __setattr__(self, name, value):
        raise AttributeError("LatticeGeometry is immutable")

    def __reduce__(self):
        return (LatticeGeometry, (self.lengths, self.boundary))

    @property
    def dim(self):
        return len(self.lengths)

    @property
    def n_sites(self):
        return int(np.prod(self.lengths))

    @property
    def coords(self):
        """Read-only ``(n_sites, dim)`` array of site coordinates."""
        return self._coords

    def site(self, x, y=0):
        """Site index of coordinate ``(x, y)``."""
        if not (0 <= x < self.lengths[0]) or (self.dim == 1 and y != 0) or \
           (self.dim == 2 and not (0 <= y < self.lengths[1])):
            raise GeometryError("Coordinate ({}, {}) outside lattice {}".format(x, y, self.lengths))
        return y * self.lengths[0] + x

    def check_exact(self):
        """Raise `GeometryError` if the lattice is too large for exact mode."""
        cap = dyn.exact_site_cap
        if self.n_sites > cap:
            raise GeometryError("Exact mode supports at most {} sites, got {}; use the particle filter".format(cap, self.n_sites))
        return self

    def __eq__(self, other):
        if not isinstance(other, LatticeGeometry):
            return NotImplemented
        return self.lengths == other.lengths and self.boundary == other.boundary

    def __hash__(self):
        return hash((self.lengths, self.boundary))

    def __repr__(self):
        return "LatticeGeometry({})".format("x".join(str(n) for n in self.lengths))

class Configuration:
    """Immutable occupation configuration on a geometry.

    `bits`: packed int, site ``i`` is bit ``i``.
    """
    __slots__ = ("geometry", "bits")

    def __init__(self, geometry, bits):
        bits = int(bits)
        if bits < 0 or bits >> geometry.n_sites:
            raise GeometryError("Configuration {:#x} has bits outside the {} sites of {}".format(bits, geometry.n_sites, geometry))
        object.__setattr__(self, "geometry", geometry)
        object.__setattr__(self, "bits", bits)

    def __setattr__(self, name, value):
        raise AttributeError("Configuration is immutable")

    def __reduce__(self):
        return (Configuration, (self.geometry, self.bits))

    @classmethod
    def from_string(cls, s, geometry=None):
        """Parse a 0/1 string, site 0 first. 1D geometry of matching length if not given."""
        geometry = geometry or LatticeGeometry(len(s))
        return cls(geometry, config_from_string(s, geometry))

    @classmethod
    def from_occupations(cls, occupations, geometry=None):
        return cls.from_string("".join(str(int(n)) for n in occupations), geometry)

    def __str__(self):
        return config_to_string(self.bits, self.geometry)

    def __repr__(self):
        return "Configuration('{}', {})".format(str(self), self.geometry)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.geometry == other.geometry and self.bits == other.bits

    def __hash__(self):
        return hash((self.geometry, self.bits))

    def __int__(self):
        return self.bits

    def __index__(self):
        return self.bits

    @property
    def charge(self):
        return charge(self)

    @property
    def dipole(self):
        return dipole(self)

    @property
    def sector_key(self):
        return sector_key(self)

def _unwrap(config, geometry):
    if isinstance(config, Configuration):
        return config.bits, config.geometry
    return int(config), geometry

def charge(config):
    """Total charge: the population count of the occupation bits."""
    bits, _ = _unwrap(config, None)
    return bin(bits).count("1")

def dipole(config, geometry=None):
    """Dipole moment: coordinate-weighted occupation sum.

    An int in 1D, a tuple ``(Px, Py)`` in 2D. `geometry` is needed when
    `config` is a plain int.
    """
    bits, geometry = _unwrap(config, geometry)
    if geometry is None:
        raise TypeError("dipole of a packed int needs a geometry")
    if geometry.boundary != "open":  # pragma: no cover, rejected at construction
        raise GeometryError("dipole moment is ill-defined on a periodic geometry")
    total = [0] * geometry.dim
    i = 0
    while bits:
        if bits & 1:
            for axis in range(geometry.dim):
                total[axis] += int(geometry.coords[i, axis])
        bits >>= 1
        i += 1
    return total[0] if geometry.dim == 1 else tuple(total)

def sector_key(config, geometry=None):
    """The `SectorKey` ``(Q, P)`` of a configuration."""
    bits, geometry = _unwrap(config, geometry)
    return SectorKey(charge(bits), dipole(bits, geometry))

def _check_window(window, geometry):
    window = tuple(int(s) for s in window)
    if not 1 <= len(window) <= MAX_WINDOW:
        raise GeometryError("Window must have 1..{} sites, got {}".format(MAX_WINDOW, len(window)))
    if min(window) < 0 or max(window) >= geometry.n_sites:
        raise GeometryError("Window {} outside lattice {}".format(window, geometry))
    if len(window) > 1:
        coords = geometry.coords[list(window)]
        steps = np.diff(coords, axis=0)
        along_x = np.all(steps == [1] + [0] * (geometry.dim - 1), axis=1).all()
        along_y = geometry.dim == 2 and np.all(steps == [0, 1], axis=1).all()
        if not (along_x or along_y):
            raise GeometryError("Window {} is not contiguous along one axis of {}".format(window, geometry))
    return window

def window_pack(config, window, geometry=None):
    """Read the bits of `window` (a site list) into a small int.

    Window position ``k`` becomes bit ``k`` of the result, so for a window
    starting at site 0 the packed index equals the low bits of the config.
    """
    bits, geometry = _unwrap(config, geometry)
    window = _check_window(window, geometry)
    index = 0
    for k, s in enumerate(window):
        index |= ((bits >> s) & 1) << k
    return index

def window_unpack(index, window, geometry, base=0):
    """Inverse of `window_pack`: write `index` into the `window` bits of `base`.

    Bits of `base` outside the window are kept; `base` may be a
    `Configuration`, in which case one is returned.
    """
    bits, _ = _unwrap(base, geometry)
    window = _check_window(window, geometry)
    if not 0 <= index < (1 << len(window)):
        raise GeometryError("Window index {} out of range for a {}-site window".format(index, len(window)))
    for k, s in enumerate(window):
        bits = (bits & ~(1 << s)) | (((index >> k) & 1) << s)
    if isinstance(base, Configuration):
        return Configuration(geometry, bits)
    return bits

def translate(config, shift=1):
    """Shift a 1D configuration right by `shift` sites on an enlarged lattice.

    Returns a `Configuration` on a chain that is `shift` sites longer; its
    dipole moment is ``dipole(config) + shift * charge(config)``.
    """
    if config.geometry.dim != 1:
        raise GeometryError("translate is defined for 1D configurations")
    geometry = LatticeGeometry(config.geometry.lengths[0] + shift)
    return Configuration(geometry, config.bits << shift)

def config_to_string(bits, geometry):
    """0/1 string, site 0 first."""
    bits = int(bits)
    return "".join("1" if (bits >> i) & 1 else "0" for i in range(geometry.n_sites))

def config_from_string(s, geometry):
    s = s.strip()
    if len(s) != geometry.n_sites or set(s) - {"0", "1"}:
        raise GeometryError("Expected a 0/1 string of length {}, got '{}'".format(geometry.n_sites, s))
    return sum(1 << i for i, ch in enumerate(s) if ch == "1")

# --------------------------------------------------------------------------------
# Vectorized helpers for the engines.

_POP8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)

def charges(configs):
    """Charges of an array of packed configurations."""
    configs = np.asarray(configs, dtype=np.int64)
    out = np.zeros(configs.shape, dtype=np.int64)
    c = configs.copy()
    while np.any(c):
        out += _POP8[c & 0xFF]
        c >>= 8
    return out

def dipoles(configs, geometry):
    """Dipole moments of an array of packed configurations.

    Shape ``(M,)`` in 1D, ``(M, 2)`` in 2D.
    """
    configs = np.asarray(configs, dtype=np.int64)
    out = np.zeros(configs.shape + (geometry.dim,), dtype=np.int64)
    for i in range(geometry.n_sites):
        b = (configs >> i) & 1
        out += b[..., None] * geometry.coords[i]
    return out[..., 0] if geometry.dim == 1 else out

def bits_matrix(configs, n_sites):
    """``(M, n_sites)`` 0/1 matrix of occupations."""
    configs = np.asarray(configs, dtype=np.int64)
    return ((configs[:, None] >> np.arange(n_sites, dtype=np.int64)) & 1).astype(np.int8)

def gather_window(configs, window):
    """Vectorized `window_pack` over an array of configurations (no checks)."""
    configs = np.asarray(configs, dtype=np.int64)
    out = np.zeros(configs.shape, dtype=np.int64)
    for k, s in enumerate(window):
        out |= ((configs >> s) & 1) << k
    return out

def window_spread(window):
    """Table mapping each packed window index to its global bit mask."""
    size = len(window)
    idx = np.arange(1 << size, dtype=np.int64)
    out = np.zeros(1 << size, dtype=np.int64)
    for k, s in enumerate(window):
        out |= ((idx >> k) & 1) << s
    return out

def enumerate_configurations(geometry, Q=None):
    """All configurations (ascending) of `geometry`, optionally at fixed charge `Q`."""
    n = geometry.n_sites
    if Q is None:
        return np.arange(1 << n, dtype=np.int64)
    if not 0 <= Q <= n:
        return np.zeros(0, dtype=np.int64)
    out = np.fromiter((sum(1 << s for s in sites) for sites in combinations(range(n), Q)),
                      dtype=np.int64)
    out.sort()
    return out
