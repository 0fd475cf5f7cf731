"""Rotational levels of an asymmetric top and a linear rotor.

Levels are normally read from files; the generators here build rigid-rotor
ladders for tests and synthetic data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .config import KB_CM1
from .errors import ConfigError, LabelError

PARA = "para"
ORTHO = "ortho"
SYMMETRIES = (PARA, ORTHO)

ASYM_TOP = "asym-top"
LINEAR_ROTOR = "linear-rotor"

# eigenvalues closer than this are treated as degenerate when labelling
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class AsymTopState:
    j: int
    ka: int
    kc: int
    energy: float
    index: int = 0

    def __post_init__(self):
        check_asym_labels(self.j, self.ka, self.kc)

    @property
    def degeneracy(self) -> int:
        return 2 * self.j + 1

    @property
    def symmetry(self) -> str:
        return classify_symmetry(self)

    @property
    def label(self) -> str:
        return f"{self.j}_{self.ka},{self.kc}"

    @property
    def labels(self) -> tuple:
        return (self.j, self.ka, self.kc)


@dataclass(frozen=True)
class LinearRotorState:
    j: int
    energy: float
    index: int = 0

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 0:
            raise LabelError(f"linear rotor j must be a non-negative integer, got {self.j!r}")

    @property
    def degeneracy(self) -> int:
        return 2 * self.j + 1

    @property
    def symmetry(self) -> str:
        return classify_symmetry(self)

    @property
    def label(self) -> str:
        return str(self.j)

    @property
    def labels(self) -> tuple:
        return (self.j,)


def check_asym_labels(j, ka, kc):
    for name, value in (("j", j), ("ka", ka), ("kc", kc)):
        if int(value) != value or value < 0:
            raise LabelError(f"{name} must be a non-negative integer, got {value!r}")
    if ka > j or kc > j or ka + kc not in (j, j + 1):
        raise LabelError(f"invalid asymmetric-top label j={j} ka={ka} kc={kc}")


def classify_symmetry(state) -> str:
    """Nuclear-spin class: parity of ka+kc for the top, of j for the rotor."""
    if isinstance(state, AsymTopState):
        check_asym_labels(state.j, state.ka, state.kc)
        return PARA if (state.ka + state.kc) % 2 == 0 else ORTHO
    if isinstance(state, LinearRotorState):
        return PARA if state.j % 2 == 0 else ORTHO
    raise TypeError(f"cannot classify {type(state).__name__}")


@dataclass(frozen=True)
class LevelList:
    """Energy-ordered levels of one species.

    ``states[i].index == i`` always holds. ``energy_reference`` records
    whether energies are absolute or measured from the bottom of each
    symmetry ladder; ``synthetic`` marks generated (not spectroscopic) data.
    """

    species: str
    states: tuple
    symmetry_filter: str = "all"
    energy_reference: str = "absolute"
    synthetic: bool = False

    def __post_init__(self):
        if self.species not in (ASYM_TOP, LINEAR_ROTOR):
            raise ConfigError(f"unknown species {self.species!r}")
        if self.symmetry_filter not in ("all",) + SYMMETRIES:
            raise ConfigError(f"unknown symmetry filter {self.symmetry_filter!r}")
        states = tuple(self.states)
        object.__setattr__(self, "states", states)
        expected = AsymTopState if self.species == ASYM_TOP else LinearRotorState
        seen = set()
        for i, s in enumerate(states):
            if not isinstance(s, expected):
                raise LabelError(f"state {i} is not a {expected.__name__}")
            if s.index != i:
                raise LabelError(f"state indices must be contiguous from 0 (position {i} has index {s.index})")
            if s.labels in seen:
                raise LabelError(f"duplicate quantum labels {s.labels}")
            seen.add(s.labels)
            if self.symmetry_filter != "all" and s.symmetry != self.symmetry_filter:
                raise LabelError(f"state {i} is {s.symmetry} but list is filtered to {self.symmetry_filter}")
            if i and s.energy < states[i - 1].energy - DEGENERACY_TOL:
                raise LabelError(f"energies must be non-decreasing by index (state {i})")
        if self.species == LINEAR_ROTOR:
            by_j = sorted(states, key=lambda s: s.j)
            for a, b in zip(by_j, by_j[1:]):
                if not b.energy > a.energy:
                    raise LabelError(f"linear rotor energy must increase with j (j={a.j}, j={b.j})")

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i):
        return self.states[i]

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.states], dtype=float)

    @property
    def degeneracies(self) -> np.ndarray:
        return np.array([s.degeneracy for s in self.states], dtype=float)

    @property
    def j_values(self) -> np.ndarray:
        return np.array([s.j for s in self.states], dtype=int)

    def symmetries(self) -> list:
        return [s.symmetry for s in self.states]

    def filtered(self, symmetry: str) -> "LevelList":
        """Keep one symmetry class, renumbering indices from 0."""
        if symmetry == "all":
            return self
        kept = [s for s in self.states if s.symmetry == symmetry]
        renumbered = tuple(replace(s, index=i) for i, s in enumerate(kept))
        return replace(self, states=renumbered, symmetry_filter=symmetry)


def _tau_to_labels(j, tau):
    """(ka, kc) for the level with ka - kc = tau."""
    if (j + tau) % 2 == 0:
        return (j + tau) // 2, (j - tau) // 2
    return (j + tau + 1) // 2, (j - tau + 1) // 2


def wang_blocks(A, B, C, j):
    """The four Wang sub-blocks (E+, E-, O+, O-) of the rigid-rotor Hamiltonian.

    Uses the I^r axis convention (z along a). Each block is tridiagonal in K
    steps of two; returned as (diagonal, off-diagonal) pairs.
    """
    jj = j * (j + 1)
    half_bc = 0.5 * (B + C)
    quarter = 0.25 * (B - C)

    def diag(k):
        return half_bc * (jj - k * k) + A * k * k

    def off(k):
        # <K+2|H|K>
        return quarter * math.sqrt((jj - k * (k + 1)) * (jj - (k + 1) * (k + 2)))

    blocks = []
    for start, sign in ((0, +1), (2, -1), (1, +1), (1, -1)):
        ks = list(range(start, j + 1, 2))
        if not ks:
            continue
        d = np.array([diag(k) for k in ks])
        e = np.array([off(k) for k in ks[:-1]])
        if start == 0 and len(ks) > 1:
            e[0] *= math.sqrt(2.0)
        if start == 1:
            # coupling between K=+1 and K=-1 folds onto the K=1 diagonal
            d[0] += sign * quarter * jj
        blocks.append((d, e))
    return blocks


def asym_top_energies(A, B, C, j) -> np.ndarray:
    """Sorted rigid asymmetric-rotor eigenvalues for one j (2j+1 of them)."""
    values = []
    for d, e in wang_blocks(A, B, C, j):
        if len(d) == 1:
            values.append(d)
        else:
            values.append(eigh_tridiagonal(d, e, eigvals_only=True))
    return np.sort(np.concatenate(values))


def asym_top_levels(A, B, C, jmax, symmetry="all") -> LevelList:
    if not (A >= B >= C > 0):
        raise ConfigError(f"rotational constants must satisfy A >= B >= C > 0, got {A}, {B}, {C}")
    if int(jmax) != jmax or jmax < 0:
        raise ConfigError(f"jmax must be a non-negative integer, got {jmax!r}")
    raw = []
    for j in range(int(jmax) + 1):
        energies = asym_top_energies(A, B, C, j)
        for tau, energy in zip(range(-j, j + 1), energies):
            ka, kc = _tau_to_labels(j, tau)
            raw.append((float(energy), j, ka, kc))
    raw.sort(key=_level_sort_key)
    states = tuple(AsymTopState(j, ka, kc, e, i) for i, (e, j, ka, kc) in enumerate(raw))
    levels = LevelList(ASYM_TOP, states, synthetic=True)
    return levels.filtered(symmetry)


def _level_sort_key(row):
    energy, j, ka, kc = row
    # accidental degeneracies: round to the tolerance, then ka ascending
    return (round(energy / DEGENERACY_TOL), j, ka, kc)


def linear_rotor_levels(B, D, jmax, symmetry="all") -> LevelList:
    """E(j) = B j(j+1) - D [j(j+1)]^2."""
    if not B > 0:
        raise ConfigError(f"rotational constant B must be positive, got {B}")
    if D < 0:
        raise ConfigError(f"distortion constant D must be non-negative, got {D}")
    if int(jmax) != jmax or jmax < 0:
        raise ConfigError(f"jmax must be a non-negative integer, got {jmax!r}")
    energies = []
    for j in range(int(jmax) + 1):
        x = j * (j + 1)
        energies.append(B * x - D * x * x)
    for j in range(1, len(energies)):
        if not energies[j] > energies[j - 1]:
            raise ConfigError(f"D={D} makes E(j) non-monotonic at j={j}")
    states = tuple(LinearRotorState(j, e, j) for j, e in enumerate(energies))
    return LevelList(LINEAR_ROTOR, states, synthetic=True).filtered(symmetry)


def boltzmann_factors(levels: LevelList, T, k_B=KB_CM1) -> np.ndarray:
    """(2j+1) exp(-E/kT) per state, not normalized."""
    if not T > 0:
        raise ConfigError(f"temperature must be positive, got {T}")
    return levels.degeneracies * np.exp(-levels.energies / (k_B * T))


def boltzmann_populations(levels: LevelList, T, mode="combined", k_B=KB_CM1) -> np.ndarray:
    """Fractional populations, one per state.

    ``combined`` normalizes over all states with no nuclear-spin weight, so
    ortho and para levels compete on degeneracy and energy alone.
    ``per-symmetry`` normalizes each class separately (each sums to 1).
    ``para`` / ``ortho`` normalize over that class and give zero elsewhere.
    """
    if len(levels) == 0:
        raise ConfigError("level list is empty")
    terms = boltzmann_factors(levels, T, k_B)
    syms = np.array(levels.symmetries())
    if mode == "combined":
        return terms / terms.sum()
    if mode in SYMMETRIES:
        mask = syms == mode
        if not mask.any():
            raise ConfigError(f"no {mode} levels present")
        return np.where(mask, terms, 0.0) / terms[mask].sum()
    if mode == "per-symmetry":
        out = np.zeros_like(terms)
        for sym in SYMMETRIES:
            mask = syms == sym
            if mask.any():
                out[mask] = terms[mask] / terms[mask].sum()
        return out
    raise ConfigError(f"unknown population mode {mode!r}")
