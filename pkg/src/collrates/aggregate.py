"""Effective and thermal rate coefficients.

Effective rates sum state-to-state rates over the final projectile state.
Thermal rates average effective rates over initial projectile states with
Boltzmann weights computed within one nuclear-spin manifold, so no spin
statistical weight ever enters.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .config import KB_CM1, MISSING_FINAL_POLICIES, MISSING_INITIAL_POLICIES, PipelineConfig, check_temperature_grid
from .errors import ConfigError, IncompleteDataError
from .states import SYMMETRIES, LevelList, boltzmann_factors

log = logging.getLogger(__name__)

COMPLETE = "complete"
PARTIAL = "partial"


class EffectiveKey(NamedTuple):
    n1: int
    n1p: int
    n2: int


class ThermalKey(NamedTuple):
    n1: int
    n1p: int
    symmetry: str


@dataclass
class EffectiveRateTable:
    """k^{n2}_{n1->n1p}(T); ``flags`` maps each key to (status, missing n2')."""

    temps: tuple
    entries: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.temps = tuple(float(t) for t in self.temps)
        check_temperature_grid(self.temps)
        self.entries = {EffectiveKey(*k): np.asarray(v, dtype=float) for k, v in self.entries.items()}
        flags = {}
        for k in self.entries:
            status, missing = self.flags.get(k, (COMPLETE, ()))
            flags[k] = (status, tuple(missing))
        self.flags = flags

    def __len__(self):
        return len(self.entries)

    def keys(self):
        return sorted(self.entries)

    def temp_index(self, T) -> int:
        return _temp_index(self.temps, T)

    def transitions(self):
        """Sorted distinct (n1, n1p) pairs."""
        return sorted({(k.n1, k.n1p) for k in self.entries})


@dataclass
class ThermalRateTable:
    """Thermal rates plus, per key, the contributing n2 and their weights.

    ``weights[key]`` is a (n2 tuple, array of shape (len(n2), len(temps)))
    pair; ``sources[key]`` records, for each n2, the n2 whose effective rate
    was used (differs from n2 only under substitution).
    """

    temps: tuple
    entries: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)
    sources: dict = field(default_factory=dict)

    def __post_init__(self):
        self.temps = tuple(float(t) for t in self.temps)
        check_temperature_grid(self.temps)
        self.entries = {ThermalKey(*k): np.asarray(v, dtype=float) for k, v in self.entries.items()}

    def __len__(self):
        return len(self.entries)

    def keys(self):
        return sorted(self.entries)

    def temp_index(self, T) -> int:
        return _temp_index(self.temps, T)


def _temp_index(temps, T):
    for i, t in enumerate(temps):
        if math.isclose(t, T, rel_tol=1e-9):
            return i
    raise KeyError(f"temperature {T} not in grid {temps}")


def effective_rates(rates, policy="flag", projectile_levels: LevelList = None) -> EffectiveRateTable:
    """Sum state-to-state rates over final projectile states n2'.

    With ``projectile_levels`` given, every level sharing n2's nuclear-spin
    symmetry is an expected final state; absent ones make the entry
    ``partial`` (policy ``flag``) or raise (policy ``strict``). Sums are
    accumulated with ``math.fsum`` in sorted order, so row order in the
    input cannot change a single bit of the result.
    """
    if policy not in MISSING_FINAL_POLICIES:
        raise ConfigError(f"unknown missing-final policy {policy!r}")
    groups = defaultdict(dict)
    for key, values in rates.entries.items():
        groups[EffectiveKey(key.n1, key.n1p, key.n2)][key.n2p] = values

    entries, flags = {}, {}
    for ekey in sorted(groups):
        finals = groups[ekey]
        n2ps = sorted(finals)
        stack = np.array([finals[n] for n in n2ps])
        entries[ekey] = np.array([math.fsum(col) for col in stack.T])
        missing = ()
        if projectile_levels is not None:
            sym = projectile_levels[ekey.n2].symmetry
            expected = [s.index for s in projectile_levels if s.symmetry == sym]
            missing = tuple(n for n in expected if n not in finals)
        if missing:
            if policy == "strict":
                raise IncompleteDataError(
                    f"effective rate {ekey.n1}->{ekey.n1p} (n2={ekey.n2}) lacks final projectile states {list(missing)}")
            flags[ekey] = (PARTIAL, missing)
        else:
            flags[ekey] = (COMPLETE, ())
    return EffectiveRateTable(rates.temps, entries, flags)


def partition_function(levels: LevelList, symmetry, T, k_B=KB_CM1) -> float:
    """Sum of (2j+1) exp(-E/kT) over the levels of one symmetry ("all" for every level)."""
    terms = boltzmann_factors(levels, T, k_B)
    if symmetry == "all":
        mask = np.ones(len(levels), dtype=bool)
    elif symmetry in SYMMETRIES:
        mask = np.array(levels.symmetries()) == symmetry
    else:
        raise ConfigError(f"unknown symmetry {symmetry!r}")
    if not mask.any():
        raise ConfigError(f"no {symmetry} levels in the projectile level list")
    return float(math.fsum(terms[mask]))


def _initial_set(levels: LevelList, symmetry, included_j2):
    if symmetry not in SYMMETRIES:
        raise ConfigError(f"symmetry must be para or ortho, got {symmetry!r}")
    chosen = [s for s in levels if s.symmetry == symmetry
              and (included_j2 is None or s.j in included_j2)]
    if not chosen:
        raise ConfigError(f"no {symmetry} projectile levels selected")
    return chosen


def thermal_rates(eff: EffectiveRateTable, levels: LevelList, symmetry, temps=None,
                  policy=None, cfg: PipelineConfig = None) -> ThermalRateTable:
    """Boltzmann-average effective rates over initial projectile states.

    The candidate set is every level of ``symmetry`` (restricted to
    ``cfg.projectile_j2`` when set). Policies for candidates without an
    effective rate:

    ``error``
        abort if any such state has weight above ``cfg.weight_floor`` at some
        temperature; sub-floor states are dropped and the rest renormalized.
    ``renormalize``
        restrict the partition function to the available states.
    ``substitute-highest``
        borrow the rate of the highest-j available state.
    ``zero``
        treat the rate as zero (reproduces a known database bug; diagnostics only).
    """
    cfg = cfg or PipelineConfig()
    policy = policy or cfg.missing_initial
    if policy not in MISSING_INITIAL_POLICIES:
        raise ConfigError(f"unknown missing-initial policy {policy!r}")
    if len(eff) == 0:
        raise IncompleteDataError("effective-rate table is empty")
    temps = eff.temps if temps is None else tuple(float(t) for t in temps)
    t_idx = [eff.temp_index(T) for T in temps]
    candidates = _initial_set(levels, symmetry, cfg.projectile_j2)
    cand_idx = [s.index for s in candidates]
    # Boltzmann terms for each candidate at each temperature
    terms = np.array([boltzmann_factors(levels, T, cfg.k_B)[cand_idx] for T in temps]).T

    out = ThermalRateTable(temps)
    for n1, n1p in eff.transitions():
        available = [i for i, n2 in enumerate(cand_idx) if EffectiveKey(n1, n1p, n2) in eff.entries]
        if not available:
            continue
        missing = [i for i in range(len(cand_idx)) if i not in available]
        w_full = terms / terms.sum(axis=0)
        rate_of = {i: cand_idx[i] for i in available}

        if not missing:
            used, w = available, w_full
        elif policy in ("error", "renormalize"):
            if policy == "error":
                heavy = [cand_idx[i] for i in missing if np.any(w_full[i] > cfg.weight_floor)]
                if heavy:
                    raise IncompleteDataError(
                        f"thermal rate {n1}->{n1p} ({symmetry}): no effective rates for initial "
                        f"projectile states {heavy} whose Boltzmann weight exceeds {cfg.weight_floor:g}")
            used = available
            w = terms[available] / terms[available].sum(axis=0)
        elif policy == "substitute-highest":
            highest = max(available, key=lambda i: (candidates[i].j, i))
            for i in missing:
                rate_of[i] = cand_idx[highest]
            used, w = list(range(len(cand_idx))), w_full
        else:
            # missing states keep their weight but contribute nothing
            log.warning("thermal rate %s->%s (%s): treating rates for n2=%s as zero",
                        n1, n1p, symmetry, [cand_idx[i] for i in missing])
            used, w = available, w_full[available]

        ks = np.array([eff.entries[EffectiveKey(n1, n1p, rate_of[i])][t_idx] for i in used])
        kbar = np.array([math.fsum(col) for col in (w * ks).T])
        key = ThermalKey(n1, n1p, symmetry)
        out.entries[key] = kbar
        out.weights[key] = (tuple(cand_idx[i] for i in used), w)
        out.sources[key] = tuple(rate_of[i] for i in used)
    return out


def average_with_weights(eff: EffectiveRateTable, weights: dict, label="custom") -> ThermalRateTable:
    """Average effective rates with user weights {n2: array over eff.temps}.

    Weights are used as given (not renormalized); every transition must have
    an effective rate for every weighted n2.
    """
    n2s = sorted(weights)
    w = np.array([np.asarray(weights[n], dtype=float) for n in n2s])
    if w.shape != (len(n2s), len(eff.temps)):
        raise IncompleteDataError("weights do not match the effective-rate temperature grid")
    out = ThermalRateTable(eff.temps)
    for n1, n1p in eff.transitions():
        try:
            ks = np.array([eff.entries[EffectiveKey(n1, n1p, n)] for n in n2s])
        except KeyError as exc:
            raise IncompleteDataError(f"transition {n1}->{n1p}: no effective rate for weighted n2={exc.args[0].n2}") from None
        key = ThermalKey(n1, n1p, label)
        out.entries[key] = np.array([math.fsum(col) for col in (w * ks).T])
        out.weights[key] = (tuple(n2s), w)
        out.sources[key] = tuple(n2s)
    return out
