"""Synthetic cross-section datasets for tests and demonstrations.

Nothing here is physical data: levels are rigid-rotor ladders and cross
sections are smooth random shapes with an excitation threshold.
"""

from __future__ import annotations

import itertools

import numpy as np

from .states import LevelList, asym_top_levels, linear_rotor_levels
from .xsec import DEFAULT_ENERGY_GRID, CrossSectionTable, TransitionKey

WATER_ABC = (27.88, 14.52, 9.28)
H2_B, H2_D = 59.322, 0.0471


def water_levels(n_states, symmetry="para") -> LevelList:
    """The lowest ``n_states`` levels of a rigid water-like top."""
    jmax = 1
    while True:
        levels = asym_top_levels(*WATER_ABC, jmax, symmetry)
        if len(levels) >= 2 * n_states or jmax > 40:
            break
        jmax += 2
    # lowest levels only; j ladders above jmax could interleave otherwise
    return LevelList(levels.species, levels.states[:n_states], levels.symmetry_filter,
                     synthetic=True)


def h2_levels(jmax, symmetry="all") -> LevelList:
    return linear_rotor_levels(H2_B, H2_D, jmax, symmetry)


def synthetic_xsec(n_target=20, n_pairs=200, projectile=None, seed=0,
                   grid=DEFAULT_ENERGY_GRID, one_sided=0, noise=0.1) -> CrossSectionTable:
    """Random inelastic pairs with both directions present.

    Quenching cross sections fall off smoothly with collision energy; the
    excitation direction is absent below its threshold. The last
    ``one_sided`` pairs keep only their quenching direction.
    """
    rng = np.random.default_rng(seed)
    target = water_levels(n_target)
    projectile = projectile if projectile is not None else h2_levels(4, "para")
    grid = np.asarray(grid, dtype=float)
    combined = list(itertools.product(range(len(target)), range(len(projectile))))
    all_pairs = list(itertools.combinations(range(len(combined)), 2))
    if n_pairs > len(all_pairs):
        raise ValueError(f"only {len(all_pairs)} distinct pairs available")
    chosen = sorted(rng.choice(len(all_pairs), size=n_pairs, replace=False))

    def energy(state):
        return target[state[0]].energy + projectile[state[1]].energy

    def degeneracy(state):
        return target[state[0]].degeneracy * projectile[state[1]].degeneracy

    entries = {}
    for count, idx in enumerate(chosen):
        a, b = (combined[i] for i in all_pairs[idx])
        lo, hi = sorted((a, b), key=energy)
        dE = energy(hi) - energy(lo)
        amp = 10 ** rng.uniform(-2, 1)
        u_c = 10 ** rng.uniform(2, 3.5)
        p = rng.uniform(0.2, 1.5)
        quench = amp / (1 + grid / u_c) ** p
        quench *= 1 + noise * rng.uniform(-1, 1, size=grid.size)
        excite = np.full(grid.size, np.nan)
        above = grid > dE
        excite[above] = (quench[above] * degeneracy(lo) / degeneracy(hi) * (1 - dE / grid[above])
                         * (1 + noise * rng.uniform(-1, 1, size=above.sum())))
        entries[TransitionKey(*hi, *lo)] = quench
        if count < n_pairs - one_sided:
            entries[TransitionKey(*lo, *hi)] = excite
    return CrossSectionTable(grid, entries, target, projectile)
