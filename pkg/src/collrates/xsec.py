"""Cross-section tables and the microscopic-reversibility symmetrization."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import IncompletePairError, LoadError, MissingTransitionError

log = logging.getLogger(__name__)

# Collision energies (cm^-1) at which the H2O + H2 cross sections were computed.
DEFAULT_ENERGY_GRID = (20.0, 41.28, 84.0, 170.47, 346.41, 703.89,
                       1430.0, 2906.3, 5906.0, 12000.0)


class TransitionKey(NamedTuple):
    """n1 n2 -> n1p n2p; n1 indexes the target, n2 the projectile."""

    n1: int
    n2: int
    n1p: int
    n2p: int

    @property
    def initial(self):
        return (self.n1, self.n2)

    @property
    def final(self):
        return (self.n1p, self.n2p)

    @property
    def is_elastic(self) -> bool:
        return self.initial == self.final

    def reverse(self) -> "TransitionKey":
        return TransitionKey(self.n1p, self.n2p, self.n1, self.n2)

    def canonical(self) -> "TransitionKey":
        """The smaller of the key and its reverse; identifies the pair."""
        return min(self, self.reverse())

    def __str__(self):
        return f"{self.n1} {self.n2} -> {self.n1p} {self.n2p}"


def check_energy_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise LoadError("energy grid needs at least 2 points")
    if not np.all(np.isfinite(grid)) or np.any(grid <= 0):
        raise LoadError("energy grid values must be positive and finite")
    if np.any(np.diff(grid) <= 0):
        raise LoadError("energy grid must be strictly increasing")
    return grid


@dataclass
class CrossSectionTable:
    """sigma(U) in A^2 on a shared energy grid; NaN marks an absent point."""

    grid: np.ndarray
    entries: dict
    levels_target: object = None
    levels_projectile: object = None

    def __post_init__(self):
        self.grid = check_energy_grid(self.grid)
        self.grid.setflags(write=False)
        checked = {}
        for key, values in self.entries.items():
            key = TransitionKey(*key)
            values = np.array(values, dtype=float)
            if values.shape != self.grid.shape:
                raise LoadError(f"transition {key}: {values.size} values for a {self.grid.size}-point grid")
            if np.any(values[~np.isnan(values)] < 0) or np.any(np.isinf(values)):
                raise LoadError(f"transition {key}: cross sections must be finite and non-negative")
            self._check_indices(key)
            values.setflags(write=False)
            checked[key] = values
        self.entries = checked

    def _check_indices(self, key):
        for idx, levels, what in ((key.n1, self.levels_target, "target"),
                                  (key.n1p, self.levels_target, "target"),
                                  (key.n2, self.levels_projectile, "projectile"),
                                  (key.n2p, self.levels_projectile, "projectile")):
            if idx < 0:
                raise LoadError(f"transition {key}: negative {what} state index")
            if levels is not None and idx >= len(levels):
                raise LoadError(f"transition {key}: {what} state {idx} not in level list ({len(levels)} states)")

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return TransitionKey(*key) in self.entries

    def keys(self):
        return sorted(self.entries)

    def degeneracy(self, state) -> int:
        """(2j1+1)(2j2+1) of a combined (n1, n2) state."""
        n1, n2 = state
        return self.levels_target[n1].degeneracy * self.levels_projectile[n2].degeneracy

    def energy(self, state) -> float:
        n1, n2 = state
        return self.levels_target[n1].energy + self.levels_projectile[n2].energy


@dataclass(frozen=True)
class SymmetrizedXsec:
    """Degeneracy-weighted average of both directions of one transition.

    ``pair`` is the canonical key of the pair. ``values`` may hold NaN where
    neither direction had data at that energy.
    """

    pair: TransitionKey
    grid: np.ndarray
    values: np.ndarray
    one_sided: bool = False
    filled_points: int = 0


def symmetrize(table: CrossSectionTable, key, policy="one-sided") -> SymmetrizedXsec:
    """sigma~ = 1/2 [g(initial) sigma(fwd) + g(final) sigma(bwd)], pointwise.

    Under ``one-sided`` a missing direction (whole entry or single point) is
    replaced by the present direction's weighted value, so sigma~ = g*sigma.
    Under ``require-both`` a missing entry raises and a missing single point
    leaves that point absent.
    """
    if policy not in ("one-sided", "require-both"):
        raise ValueError(f"unknown missing-reverse policy {policy!r}")
    key = TransitionKey(*key)
    pair = key.canonical()
    fwd_key, bwd_key = pair, pair.reverse()
    fwd = table.entries.get(fwd_key)
    bwd = table.entries.get(bwd_key)
    if fwd is None and bwd is None:
        raise MissingTransitionError(f"no cross sections for {key} in either direction")
    g_fwd = table.degeneracy(fwd_key.initial)
    g_bwd = table.degeneracy(bwd_key.initial)

    if fwd_key == bwd_key:
        values = g_fwd * fwd
        return SymmetrizedXsec(pair, table.grid, _frozen(values))

    if fwd is None or bwd is None:
        if policy == "require-both":
            missing = fwd_key if fwd is None else bwd_key
            raise IncompletePairError(f"reverse transition {missing} missing for {key}")
        log.warning("transition %s: only one direction present, using it for both", pair)
        present, g = (fwd, g_fwd) if fwd is not None else (bwd, g_bwd)
        values = g * present
        return SymmetrizedXsec(pair, table.grid, _frozen(values), one_sided=True)

    a = g_fwd * fwd
    b = g_bwd * bwd
    values = 0.5 * (a + b)
    only_a = ~np.isnan(a) & np.isnan(b)
    only_b = np.isnan(a) & ~np.isnan(b)
    filled = int(only_a.sum() + only_b.sum())
    if filled and policy == "one-sided":
        values = np.where(only_a, a, values)
        values = np.where(only_b, b, values)
    return SymmetrizedXsec(pair, table.grid, _frozen(values),
                           filled_points=filled if policy == "one-sided" else 0)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass
class PairInventory:
    complete: list = field(default_factory=list)
    one_sided: list = field(default_factory=list)
    elastic: list = field(default_factory=list)

    @property
    def n_keys(self) -> int:
        return 2 * len(self.complete) + len(self.one_sided) + len(self.elastic)

    def pairs(self) -> list:
        """Canonical keys of every inelastic pair with data, sorted."""
        return sorted(self.complete + [k.canonical() for k in self.one_sided])


def pair_inventory(table: CrossSectionTable) -> PairInventory:
    """Classify every key as part of a complete pair, one-sided, or elastic."""
    inv = PairInventory()
    for key in sorted(table.entries):
        if key.is_elastic:
            inv.elastic.append(key)
        elif key.reverse() in table.entries:
            if key == key.canonical():
                inv.complete.append(key)
        else:
            inv.one_sided.append(key)
    return inv
