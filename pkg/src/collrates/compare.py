"""Cross-database comparison: Dalitz coordinates and agreement statistics.

All functions accept any rate-like table exposing ``temps``, ``entries``
(key -> array over temps) and ``temp_index``: state-to-state, effective or
thermal tables alike. Ratios always read A relative to B, with B the
reference.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UndefinedPointError

log = logging.getLogger(__name__)

# "most intense transitions" cut used when an intensity filter is requested
INTENSE_THRESHOLD = 1e-11


@dataclass(frozen=True)
class DalitzPoint:
    zeta_a: float
    zeta_b: float
    zeta_c: float
    key: object = None
    T: float = None

    def as_tuple(self):
        return (self.zeta_a, self.zeta_b, self.zeta_c)


def dalitz(kA, kB, kC, key=None, T=None) -> DalitzPoint:
    """Each rate's share of the three-way sum.

    The sum is taken in sorted order so that permuting the three inputs
    permutes the coordinates exactly.
    """
    if min(kA, kB, kC) < 0 or not all(map(math.isfinite, (kA, kB, kC))):
        raise ValueError(f"rates must be finite and non-negative: {kA}, {kB}, {kC}")
    lo, mid, hi = sorted((kA, kB, kC))
    total = (lo + mid) + hi
    if total == 0:
        raise UndefinedPointError(f"all three rates are zero{'' if key is None else f' for {key}'}")
    return DalitzPoint(kA / total, kB / total, kC / total, key, T)


def dalitz_array(k) -> np.ndarray:
    """Vectorized ``dalitz`` over an (N, 3) array; rows summing to zero raise."""
    k = np.asarray(k, dtype=float)
    if k.ndim != 2 or k.shape[1] != 3:
        raise ValueError("expected an (N, 3) array of rates")
    if np.any(k < 0) or not np.all(np.isfinite(k)):
        raise ValueError("rates must be finite and non-negative")
    s = np.sort(k, axis=1)
    total = (s[:, 0] + s[:, 1]) + s[:, 2]
    if np.any(total == 0):
        raise UndefinedPointError(f"{int(np.sum(total == 0))} all-zero rate triples")
    return k / total[:, None]


def remap_keys(table, mapping):
    """Copy of ``table`` with state indices translated.

    ``mapping`` is {"target": {old: new}, "projectile": {old: new}}; indices
    without an entry are kept.
    """
    target = mapping.get("target", {})
    projectile = mapping.get("projectile", {})
    fields_by_species = {"n1": target, "n1p": target, "n2": projectile, "n2p": projectile}
    entries = {}
    for key, values in table.entries.items():
        changes = {f: fields_by_species[f].get(getattr(key, f), getattr(key, f))
                   for f in key._fields if f in fields_by_species}
        new = key._replace(**changes)
        if new in entries:
            raise ValueError(f"mapping sends two keys onto {new}")
        entries[new] = values
    clone = type(table).__new__(type(table))
    clone.__dict__.update(table.__dict__)
    clone.entries = entries
    return clone


def match_tables(*tables) -> list:
    """Sorted keys present in every table."""
    if not tables:
        return []
    common = set(tables[0].entries)
    for t in tables[1:]:
        common &= set(t.entries)
    if not common:
        log.warning("tables share no transitions")
    return sorted(common)


def _paired_values(tableA, tableB, T, keys=None):
    keys = match_tables(tableA, tableB) if keys is None else keys
    ia, ib = tableA.temp_index(T), tableB.temp_index(T)
    kA = np.array([tableA.entries[k][ia] for k in keys], dtype=float)
    kB = np.array([tableB.entries[k][ib] for k in keys], dtype=float)
    return keys, kA, kB


@dataclass
class PercentDifference:
    mean: float
    n_used: int
    n_excluded: int


def percent_difference(tableA, tableB, T, keys=None) -> PercentDifference:
    """Plain mean of (kA - kB)/kB * 100 over matched keys with kB > 0."""
    keys, kA, kB = _paired_values(tableA, tableB, T, keys)
    ok = (kB > 0) & np.isfinite(kA) & np.isfinite(kB)
    n_used = int(ok.sum())
    if n_used == 0:
        return PercentDifference(math.nan, 0, len(keys))
    pct = (kA[ok] - kB[ok]) / kB[ok] * 100.0
    return PercentDifference(math.fsum(pct) / n_used, n_used, int(len(keys) - n_used))


@dataclass
class AgreementEntry:
    T: float
    F: float
    within: int
    total: int
    mean_pct_diff: float
    excluded: int
    outliers: list = field(default_factory=list)

    @property
    def fraction_within(self) -> float:
        return self.within / self.total if self.total else math.nan


def factor_stats(tableA, tableB, T, F=2.0, threshold=None, n_outliers=10, keys=None) -> AgreementEntry:
    """How many matched transitions agree within a factor F.

    Entries whose reference rate kB is zero or missing are excluded and
    counted. With ``threshold`` set, only transitions with kB >= threshold
    are considered (the rest are neither counted nor excluded).
    """
    if not F > 1:
        raise ValueError(f"factor must exceed 1, got {F}")
    keys, kA, kB = _paired_values(tableA, tableB, T, keys)
    key_arr = np.empty(len(keys), dtype=object)
    key_arr[:] = keys
    keys = key_arr
    if threshold is not None:
        keep = ~(kB < threshold)
        keys, kA, kB = keys[keep], kA[keep], kB[keep]
    ok = (kB > 0) & np.isfinite(kA) & np.isfinite(kB)
    excluded = int(len(kB) - ok.sum())
    keys, kA, kB = keys[ok], kA[ok], kB[ok]
    ratio = kA / kB
    within = int(np.sum((ratio >= 1.0 / F) & (ratio <= F)))
    with np.errstate(divide="ignore"):
        dev = np.abs(np.log(ratio))
    order = sorted(range(len(ratio)), key=lambda i: (-dev[i], keys[i]))[:n_outliers]
    outliers = [(keys[i], float(ratio[i])) for i in order]
    mean = math.fsum((ratio - 1.0) * 100.0) / len(ratio) if len(ratio) else math.nan
    return AgreementEntry(float(T), float(F), within, int(len(ratio)), mean, excluded, outliers)


@dataclass
class ScalingResult:
    """rows: (n1, n1p, T, j2, R); skipped: (n1, n1p, T or None, reason)."""

    reference_j2: int
    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)


def scaling_ratios(eff, reference_j2, projectile_levels=None) -> ScalingResult:
    """R_j2 = k^{j2}/k^{ref} for every transition, over j2 of the reference's parity.

    Effective-table keys carry projectile state indices; ``projectile_levels``
    converts them to j. Without it the index is taken to be j.
    """
    if reference_j2 < 0:
        raise ValueError("reference j2 must be non-negative")

    def j_of(n2):
        return n2 if projectile_levels is None else projectile_levels[n2].j

    result = ScalingResult(int(reference_j2))
    by_transition = {}
    for key, values in eff.entries.items():
        j2 = j_of(key.n2)
        if j2 % 2 == reference_j2 % 2:
            by_transition.setdefault((key.n1, key.n1p), {})[j2] = values
    for (n1, n1p) in sorted(by_transition):
        series = by_transition[(n1, n1p)]
        if reference_j2 not in series:
            result.skipped.append((n1, n1p, None, f"no effective rate for reference j2={reference_j2}"))
            continue
        ref = series[reference_j2]
        for it, T in enumerate(eff.temps):
            if not ref[it] > 0:
                result.skipped.append((n1, n1p, T, "reference rate is zero"))
                continue
            for j2 in sorted(series):
                R = 1.0 if j2 == reference_j2 else series[j2][it] / ref[it]
                result.rows.append((n1, n1p, T, j2, float(R)))
    return result


def _key_text(key):
    return " ".join(str(x) for x in key)


def write_dalitz_csv(path, points):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "T", "zeta_a", "zeta_b", "zeta_c"])
        for p in points:
            w.writerow([_key_text(p.key), f"{p.T:g}", f"{p.zeta_a:.8e}", f"{p.zeta_b:.8e}", f"{p.zeta_c:.8e}"])


def write_agreement_csv(path, entries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "F", "within", "total", "mean_pct_diff", "excluded"])
        for e in entries:
            w.writerow([f"{e.T:g}", f"{e.F:g}", e.within, e.total, f"{e.mean_pct_diff:.6f}", e.excluded])


def write_pairs_csv(path, tableA, tableB, keys):
    """x = kB (reference), y = kA per matched key and temperature."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "T", "k_ref", "k"])
        for T in tableA.temps:
            try:
                tableB.temp_index(T)
            except KeyError:
                continue
            _, kA, kB = _paired_values(tableA, tableB, T, keys)
            for key, a, b in zip(keys, kA, kB):
                w.writerow([_key_text(key), f"{T:g}", f"{b:.8e}", f"{a:.8e}"])


def write_scaling_csv(path, result: ScalingResult):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n1", "n1p", "T", "j2", "R"])
        for n1, n1p, T, j2, R in result.rows:
            w.writerow([n1, n1p, f"{T:g}", j2, f"{R:.8e}"])
