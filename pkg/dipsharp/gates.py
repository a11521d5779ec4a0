# -*- coding: utf-8 -*-
"""Gate families, window sectors, uniform-mixing kernels and the brickwork.

Each gate acts on a line of five consecutive sites. Averaged over the random
unitaries and followed by complete dephasing, a gate becomes a classical
stochastic kernel: the 32 window states split into connected components of
the gate's move graph, and the gate replaces the window state by a uniformly
random member of its component. A frozen state (component of size 1) is left
alone.

Two move sets are provided:

  - `GateFamily.MINIMAL_PAIR`: only the pair ``(0,1,g,1,0) <-> (1,0,g,0,1)``
    with a spectator ``g`` in the middle.
  - `GateFamily.FULL_MIXING`: every dipole-conserving pair hop inside the
    window (one particle hops +1, another hops -1, hardcore respected).

Every move conserves the window charge and dipole, so every component lies
inside one window ``(Q, P)`` sector. MinimalPair components are subsets of
FullMixing components.

The brickwork places disjoint windows with starts ``s = layer (mod 5)``
(1D). In 2D the layer parity selects the axis (rows along x on even layers,
columns along y on odd layers) and ``(layer // 2) mod 5`` the offset.
Windows that would cross the open boundary are dropped.
"""

__all__ = ["GateFamily", "WindowKernel", "BrickworkSchedule", "EmptySector",
           "ConnectivityReport", "WINDOW_SIZE", "PERIOD",
           "elementary_moves", "connected_components", "kernel_apply",
           "schedule_windows", "global_connectivity", "connectivity_report",
           "window_sector_table", "sector_configurations"]

import logging
from collections import deque, namedtuple
from enum import Enum
from functools import lru_cache

import numpy as np

from .lattice import (dipoles, enumerate_configurations,
                      gather_window, window_spread)

logger = logging.getLogger(__name__)

WINDOW_SIZE = 5
PERIOD = 5

class EmptySector(ValueError):
    """The requested (Q, P) sector has no configurations on this lattice."""

class GateFamily(Enum):
    MINIMAL_PAIR = "minimal-pair"
    FULL_MIXING = "full-mixing"

    @property
    def window_size(self):
        return WINDOW_SIZE

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        for member in cls:
            if name in (member.value, member.name, member.name.lower()):
                return member
        raise ValueError("Unknown gate family '{}'; expected one of {}".format(name, [m.value for m in cls]))

# G flips sites 0, 1, 3, 4 of the window; the middle site is a spectator.
_PAIR_MASK = 0b11011
_PAIR_PATTERNS = (0b01010, 0b10001)

def _window_charge(state):
    return bin(state).count("1")

def _window_dipole(state):
    return sum(k for k in range(WINDOW_SIZE) if (state >> k) & 1)

def elementary_moves(window_state, family=GateFamily.FULL_MIXING):
    """States reachable from `window_state` by one move of `family`.

    Window position ``k`` is bit ``k`` of `window_state`. Returns a frozenset,
    empty when no move applies.
    """
    family = GateFamily.parse(family)
    if not 0 <= window_state < (1 << WINDOW_SIZE):
        raise ValueError("window state {} out of range".format(window_state))
    if family is GateFamily.MINIMAL_PAIR:
        if window_state & _PAIR_MASK in _PAIR_PATTERNS:
            return frozenset({window_state ^ _PAIR_MASK})
        return frozenset()

    occupied = [k for k in range(WINDOW_SIZE) if (window_state >> k) & 1]
    out = set()
    for a in occupied:  # hops +1
        for b in occupied:  # hops -1
            if a == b or a + 1 >= WINDOW_SIZE or b - 1 < 0:
                continue
            rest = window_state & ~(1 << a) & ~(1 << b)
            targets = (a + 1, b - 1)
            if targets[0] == targets[1] or any((rest >> t) & 1 for t in targets):
                continue
            new = rest | (1 << targets[0]) | (1 << targets[1])
            if new != window_state:
                out.add(new)
    return frozenset(out)

class WindowKernel:
    """Partition of the window states into components, with uniform mixing.

    `components`: tuple of ascending tuples of window states, ordered by
    smallest member. `component_of[s]` is the component id of state `s`.
    The flat arrays `members`, `starts`, `sizes` store the same partition for
    vectorized lookups: component ``i`` is ``members[starts[i]:starts[i] + sizes[i]]``.
    """
    def __init__(self, family, components):
        self.family = family
        self.components = tuple(tuple(sorted(c)) for c in sorted(components, key=min))
        n = 1 << WINDOW_SIZE
        component_of = np.full(n, -1, dtype=np.int64)
        for i, comp in enumerate(self.components):
            component_of[list(comp)] = i
        if np.any(component_of < 0):
            raise ValueError("components do not cover all {} window states".format(n))
        self.sizes = np.array([len(c) for c in self.components], dtype=np.int64)
        self.starts = np.concatenate([[0], np.cumsum(self.sizes)[:-1]]).astype(np.int64)
        self.members = np.array([s for c in self.components for s in c], dtype=np.int64)
        self.component_of = component_of
        for a in (self.sizes, self.starts, self.members, self.component_of):
            a.flags.writeable = False

    def __len__(self):
        return len(self.components)

    def component(self, window_state):
        """The component (a tuple of window states) containing `window_state`."""
        return self.components[self.component_of[window_state]]

    def transition_matrix(self):
        """Dense 32x32 column-stochastic matrix of the averaged gate."""
        n = 1 << WINDOW_SIZE
        T = np.zeros((n, n))
        for comp in self.components:
            for s in comp:
                T[list(comp), s] = 1.0 / len(comp)
        return T

    def __repr__(self):
        return "<WindowKernel {}: {} components, largest {}>".format(self.family.value, len(self),
                                                                    int(self.sizes.max()))

@lru_cache(maxsize=None)
def _components(family):
    seen = set()
    components = []
    for start in range(1 << WINDOW_SIZE):
        if start in seen:
            continue
        component = {start}
        queue = deque([start])
        while queue:
            state = queue.popleft()
            for new in elementary_moves(state, family):
                if new not in component:
                    component.add(new)
                    queue.append(new)
        seen |= component
        components.append(component)
    return WindowKernel(family, components)

def connected_components(family=GateFamily.FULL_MIXING):
    """The `WindowKernel` of `family`: BFS closure of its moves over all 32 states.

    Cached; the result is immutable and shareable.
    """
    return _components(GateFamily.parse(family))

def kernel_apply(state, window, kernel, rate=1.0):
    """Apply the averaged gate of `kernel` on `window` to a ProbState.

    For each configuration, its probability is spread uniformly over the
    window component of its window bits; bits outside the window are kept.
    With ``rate < 1`` the gate fires with probability `rate`, i.e. the result
    is ``(1 - rate) * state + rate * mixed``.

    `state` must be normalized (`UnnormalizedState` is signaled otherwise).
    Returns a new state; the input is not modified.
    """
    state.check_normalized()
    if not 0.0 <= rate <= 1.0:
        raise ValueError("gate rate must be in [0, 1], got {}".format(rate))
    if rate == 0.0:
        return state
    window = tuple(window)
    if len(window) != WINDOW_SIZE:
        raise ValueError("gate windows have {} sites, got {}".format(WINDOW_SIZE, len(window)))
    configs, probs = state.configs, state.probs
    spread = window_spread(window)
    winmask = int(spread[-1])
    ncomp = len(kernel)

    cid = kernel.component_of[gather_window(configs, window)]
    base = configs & ~winmask
    keys, inverse = np.unique(base * ncomp + cid, return_inverse=True)
    mass = np.bincount(inverse.ravel(), weights=probs)
    gbase = keys // ncomp
    gcid = keys % ncomp
    counts = kernel.sizes[gcid]

    group = np.repeat(np.arange(len(keys)), counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    member = kernel.members[kernel.starts[gcid][group] + offsets]
    new_configs = gbase[group] | spread[member]
    new_probs = mass[group] / counts[group]

    if rate < 1.0:
        new_configs = np.concatenate([configs, new_configs])
        new_probs = np.concatenate([(1.0 - rate) * probs, rate * new_probs])
        new_configs, inverse = np.unique(new_configs, return_inverse=True)
        new_probs = np.bincount(inverse.ravel(), weights=new_probs)
        return state.replace(new_configs, new_probs)

    order = np.argsort(new_configs, kind="stable")
    return state.replace(new_configs[order], new_probs[order])

def schedule_windows(layer_index, geometry):
    """Disjoint gate windows (tuples of site indices) of brickwork layer `layer_index`."""
    if layer_index < 0:
        raise ValueError("layer index must be nonnegative, got {}".format(layer_index))
    if geometry.dim == 1:
        axis, offset = 0, layer_index % PERIOD
    else:
        axis, offset = layer_index % 2, (layer_index // 2) % PERIOD
    along = geometry.lengths[axis]
    starts = range(offset, along - WINDOW_SIZE + 1, PERIOD)
    if geometry.dim == 1:
        return [tuple(range(s, s + WINDOW_SIZE)) for s in starts]
    Lx, Ly = geometry.lengths
    windows = []
    if axis == 0:
        for y in range(Ly):
            windows.extend(tuple(y * Lx + x for x in range(s, s + WINDOW_SIZE)) for s in starts)
    else:
        for x in range(Lx):
            windows.extend(tuple(y * Lx + x for y in range(s, s + WINDOW_SIZE)) for s in starts)
    return windows

class BrickworkSchedule:
    """The period-5 brickwork of a geometry; `windows(layer)` is cached."""
    def __init__(self, geometry):
        self.geometry = geometry
        self.cycle = PERIOD if geometry.dim == 1 else 2 * PERIOD
        self._layers = tuple(tuple(schedule_windows(k, geometry)) for k in range(self.cycle))

    def windows(self, layer_index):
        if layer_index < 0:
            raise ValueError("layer index must be nonnegative, got {}".format(layer_index))
        return self._layers[layer_index % self.cycle]

    def all_windows(self):
        """Every window used by some layer."""
        return sorted({w for layer in self._layers for w in layer})

def sector_configurations(geometry, Q, P=None):
    """Configurations (ascending) with charge `Q`, and dipole `P` if given."""
    configs = enumerate_configurations(geometry, Q)
    if P is None:
        return configs
    ps = dipoles(configs, geometry)
    if geometry.dim == 1:
        keep = ps == int(P)
    else:
        keep = np.all(ps == np.asarray(P, dtype=np.int64), axis=1)
    return configs[keep]

ConnectivityReport = namedtuple("ConnectivityReport", ["Q", "P", "n_configurations", "n_components", "sizes"])

def global_connectivity(geometry, sector, family=GateFamily.FULL_MIXING):
    """Connected components of a (Q, P) sector under the moves of all brickwork windows.

    `sector`: a `SectorKey` or a ``(Q, P)`` pair. Returns a
    `ConnectivityReport`, component sizes in descending order.
    """
    geometry.check_exact()
    Q, P = sector
    configs = sector_configurations(geometry, Q, P)
    if not len(configs):
        raise EmptySector("Sector Q={}, P={} is empty on {}".format(Q, P, geometry))
    kernel = connected_components(family)
    windows = [(w, window_spread(w)) for w in BrickworkSchedule(geometry).all_windows()]
    index = {int(c): i for i, c in enumerate(configs)}
    label = np.full(len(configs), -1, dtype=np.int64)
    sizes = []
    for i0 in range(len(configs)):
        if label[i0] >= 0:
            continue
        label[i0] = len(sizes)
        size = 1
        queue = deque([int(configs[i0])])
        while queue:
            c = queue.popleft()
            for w, spread in windows:
                state = int(gather_window(np.array([c]), w)[0])
                base = c & ~int(spread[-1])
                for m in kernel.component(state):
                    j = index[base | int(spread[m])]
                    if label[j] < 0:
                        label[j] = len(sizes)
                        size += 1
                        queue.append(base | int(spread[m]))
        sizes.append(size)
    sizes = tuple(sorted(sizes, reverse=True))
    logger.debug("sector Q=%s P=%s on %s: %d configurations, %d components", Q, P, geometry, len(configs), len(sizes))
    return ConnectivityReport(Q, P, len(configs), len(sizes), sizes)

def connectivity_report(geometry, Q, family=GateFamily.FULL_MIXING):
    """`global_connectivity` for every nonempty dipole sector at charge `Q` (1D)."""
    if geometry.dim != 1:
        raise ValueError("connectivity_report enumerates 1D dipole sectors")
    configs = sector_configurations(geometry, Q)
    return [global_connectivity(geometry, (Q, int(P)), family)
            for P in np.unique(dipoles(configs, geometry))]

def window_sector_table(family=GateFamily.FULL_MIXING):
    """Rows ``(window_state, Q, P, component_id, component_size)`` for all 32 states."""
    kernel = connected_components(family)
    rows = []
    for s in range(1 << WINDOW_SIZE):
        cid = int(kernel.component_of[s])
        rows.append({"window_state": s,
                     "Q": _window_charge(s),
                     "P": _window_dipole(s),
                     "component_id": cid,
                     "component_size": int(kernel.sizes[cid])})
    return rows

