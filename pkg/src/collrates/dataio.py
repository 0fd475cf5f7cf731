"""Plain-text file formats.

Every file starts with ``# format: <name> v1``. Further ``#`` lines are
comments, except ``# <key>: <value>`` lines for the keys a format declares
(grids, species, ...). Data values are written in scientific notation with
8 significant digits; grids use the shortest exact representation.

Each format has ``dumps_x``/``loads_x`` working on strings and
``save_x``/``load_x`` working on paths.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .aggregate import COMPLETE, PARTIAL, EffectiveKey, EffectiveRateTable, ThermalKey, ThermalRateTable
from .config import (MISSING_FINAL_POLICIES, MISSING_INITIAL_POLICIES, MISSING_REVERSE_POLICIES,
                     PhysicalConstants, PipelineConfig)
from .errors import CollratesError, ConfigError, LoadError
from .ratecalc import RateTable
from .states import ASYM_TOP, LINEAR_ROTOR, AsymTopState, LevelList, LinearRotorState
from .xsec import CrossSectionTable, TransitionKey

VERSION = 1
_FORMAT_RE = re.compile(r"#\s*format:\s*(\S+)\s+v(\d+)\s*$")
_META_RE = re.compile(r"#\s*([A-Za-z_]\w*)\s*:\s*(.*?)\s*$")
NA = "NA"


def fmt_float(x) -> str:
    if math.isnan(x):
        return NA
    return f"{x:.7e}"


def fmt_grid(values) -> str:
    return " ".join(repr(float(v)) for v in values)


class _Parsed:
    def __init__(self, source):
        self.source = source
        self.meta = {}
        self.meta_lines = {}
        self.rows = []

    def error(self, message, line=None):
        return LoadError(message, self.source, line)

    def need(self, key):
        if key not in self.meta:
            raise self.error(f"missing '# {key}:' header")
        return self.meta[key]

    def grid(self, key):
        line = self.meta_lines.get(key)
        try:
            return [float(t) for t in self.need(key).replace(",", " ").split()]
        except ValueError:
            raise self.error(f"bad number in {key} header", line) from None


def _parse(text, fmt, meta_keys=(), source=None) -> _Parsed:
    p = _Parsed(source)
    lines = text.splitlines()
    tagged = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if not tagged:
            m = _FORMAT_RE.match(line)
            if not m:
                raise p.error(f"first line must be '# format: {fmt} v{VERSION}'", lineno)
            if m.group(1) != fmt:
                raise p.error(f"expected a '{fmt}' file, found '{m.group(1)}'", lineno)
            if int(m.group(2)) != VERSION:
                raise p.error(f"unsupported {fmt} version v{m.group(2)} (expected v{VERSION})", lineno)
            tagged = True
            continue
        if line.startswith("#"):
            m = _META_RE.match(line)
            if m and m.group(1) in meta_keys:
                if m.group(1) in p.meta:
                    raise p.error(f"duplicate '{m.group(1)}' header", lineno)
                p.meta[m.group(1)] = m.group(2)
                p.meta_lines[m.group(1)] = lineno
            continue
        p.rows.append((lineno, line.split()))
    if not tagged:
        raise p.error(f"empty file (expected '# format: {fmt} v{VERSION}')")
    return p


def _int(p, tok, lineno, what="index"):
    try:
        value = int(tok)
    except ValueError:
        raise p.error(f"bad integer {what} '{tok}'", lineno) from None
    if value < 0:
        raise p.error(f"negative {what} {value}", lineno)
    return value


def _float(p, tok, lineno, allow_na=False):
    if allow_na and tok == NA:
        return math.nan
    try:
        value = float(tok)
    except ValueError:
        raise p.error(f"bad number '{tok}'", lineno) from None
    if not math.isfinite(value):
        raise p.error(f"non-finite number '{tok}'", lineno)
    return value


def _read(path):
    return Path(path).read_text(encoding="utf-8")


def _write(path, text):
    Path(path).write_text(text, encoding="utf-8")


def _header(fmt, **meta):
    out = [f"# format: {fmt} v{VERSION}"]
    out += [f"# {k}: {v}" for k, v in meta.items()]
    return out


# ---------------------------------------------------------------- levels

def dumps_levels(levels: LevelList) -> str:
    lines = _header("levels", species=levels.species, energy_reference=levels.energy_reference)
    if levels.synthetic:
        lines.append("# synthetic: yes")
    if levels.species == ASYM_TOP:
        lines.append("# index j ka kc energy_cm1")
        lines += [f"{s.index} {s.j} {s.ka} {s.kc} {fmt_float(s.energy)}" for s in levels]
    else:
        lines.append("# index j energy_cm1")
        lines += [f"{s.index} {s.j} {fmt_float(s.energy)}" for s in levels]
    return "\n".join(lines) + "\n"


def loads_levels(text, source=None) -> LevelList:
    p = _parse(text, "levels", ("species", "energy_reference", "synthetic"), source)
    species = p.meta.get("species")
    if species is None and p.rows:
        species = ASYM_TOP if len(p.rows[0][1]) == 5 else LINEAR_ROTOR
    if species not in (ASYM_TOP, LINEAR_ROTOR):
        raise p.error(f"unknown or missing species {species!r}")
    ncol = 5 if species == ASYM_TOP else 3
    states = []
    for lineno, tok in p.rows:
        if len(tok) != ncol:
            raise p.error(f"expected {ncol} columns for {species}, got {len(tok)}", lineno)
        index = _int(p, tok[0], lineno)
        if index != len(states):
            raise p.error(f"state index {index} out of sequence (expected {len(states)})", lineno)
        ints = [_int(p, t, lineno, "quantum number") for t in tok[1:-1]]
        energy = _float(p, tok[-1], lineno)
        try:
            if species == ASYM_TOP:
                states.append(AsymTopState(*ints, energy, index))
            else:
                states.append(LinearRotorState(ints[0], energy, index))
        except CollratesError as exc:
            raise p.error(str(exc), lineno) from None
    synthetic = p.meta.get("synthetic", "no").lower() in ("yes", "true", "1")
    try:
        return LevelList(species, tuple(states),
                         energy_reference=p.meta.get("energy_reference", "absolute"), synthetic=synthetic)
    except CollratesError as exc:
        raise p.error(str(exc)) from None


def save_levels(path, levels):
    _write(path, dumps_levels(levels))


def load_levels(path) -> LevelList:
    return loads_levels(_read(path), str(path))


# ---------------------------------------------------------- cross sections

def dumps_xsec(table: CrossSectionTable) -> str:
    lines = _header("xsec", U_grid_cm1=fmt_grid(table.grid))
    lines.append("# n1 n2 n1p n2p sigma_A2(U1..UN)")
    for key in table.keys():
        values = " ".join(fmt_float(v) for v in table.entries[key])
        lines.append(f"{key.n1} {key.n2} {key.n1p} {key.n2p} {values}")
    return "\n".join(lines) + "\n"


def loads_xsec(text, levels_target=None, levels_projectile=None, source=None) -> CrossSectionTable:
    p = _parse(text, "xsec", ("U_grid_cm1",), source)
    grid = p.grid("U_grid_cm1")
    n = len(grid)
    if n < 2 or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] <= 0:
        raise p.error("U_grid_cm1 must hold at least 2 positive, strictly increasing energies",
                      p.meta_lines.get("U_grid_cm1"))
    entries = {}
    for lineno, tok in p.rows:
        if len(tok) != 4 + n:
            raise p.error(f"expected {4 + n} columns (4 indices + {n} grid values), got {len(tok)}", lineno)
        key = TransitionKey(*(_int(p, t, lineno) for t in tok[:4]))
        if key in entries:
            raise p.error(f"duplicate transition {key}", lineno)
        for idx, levels, what in ((key.n1, levels_target, "target"), (key.n1p, levels_target, "target"),
                                  (key.n2, levels_projectile, "projectile"),
                                  (key.n2p, levels_projectile, "projectile")):
            if levels is not None and idx >= len(levels):
                raise p.error(f"unknown {what} state index {idx} ({len(levels)} levels)", lineno)
        values = [_float(p, t, lineno, allow_na=True) for t in tok[4:]]
        if any(v < 0 for v in values if not math.isnan(v)):
            raise p.error(f"negative cross section for {key}", lineno)
        entries[key] = values
    return CrossSectionTable(np.array(grid), entries, levels_target, levels_projectile)


def save_xsec(path, table):
    _write(path, dumps_xsec(table))


def load_xsec(path, levels_target=None, levels_projectile=None) -> CrossSectionTable:
    return loads_xsec(_read(path), levels_target, levels_projectile, str(path))


# ------------------------------------------------------ rate-like tables

def _loads_table(text, fmt, n_key, source, key_parser, trailing=0):
    p = _parse(text, fmt, ("T_grid_K",), source)
    temps = p.grid("T_grid_K")
    m = len(temps)
    rows = {}
    for lineno, tok in p.rows:
        if len(tok) != n_key + m + trailing:
            raise p.error(f"expected {n_key + m + trailing} columns, got {len(tok)}", lineno)
        key = key_parser(p, tok[:n_key], lineno)
        if key in rows:
            raise p.error(f"duplicate key {tuple(key)}", lineno)
        values = np.array([_float(p, t, lineno) for t in tok[n_key:n_key + m]])
        if np.any(values < 0):
            raise p.error(f"negative value for {tuple(key)}", lineno)
        rows[key] = (values, tok[n_key + m:], lineno)
    return p, temps, rows


def _grid_error(p, exc):
    return p.error(str(exc), p.meta_lines.get("T_grid_K"))


def dumps_rates(rates: RateTable) -> str:
    lines = _header("rates", T_grid_K=fmt_grid(rates.temps))
    lines.append("# n1 n2 n1p n2p k_cm3_s(T1..TM)")
    for key in rates.keys():
        values = " ".join(fmt_float(v) for v in rates.entries[key])
        lines.append(f"{key.n1} {key.n2} {key.n1p} {key.n2p} {values}")
    return "\n".join(lines) + "\n"


def loads_rates(text, source=None) -> RateTable:
    p, temps, rows = _loads_table(
        text, "rates", 4, source,
        lambda p, tok, ln: TransitionKey(*(_int(p, t, ln) for t in tok)))
    try:
        return RateTable(temps, {k: v for k, (v, _, _) in rows.items()})
    except ConfigError as exc:
        raise _grid_error(p, exc) from None


def save_rates(path, rates):
    _write(path, dumps_rates(rates))


def load_rates(path) -> RateTable:
    return loads_rates(_read(path), str(path))


def _fmt_flag(flag):
    status, missing = flag
    if status == COMPLETE:
        return COMPLETE
    return f"{PARTIAL}:" + ",".join(str(n) for n in missing)


def _parse_flag(p, tok, lineno):
    if tok == COMPLETE:
        return (COMPLETE, ())
    if tok.startswith(PARTIAL + ":"):
        body = tok[len(PARTIAL) + 1:]
        return (PARTIAL, tuple(_int(p, t, lineno) for t in body.split(",") if t))
    raise p.error(f"bad FLAGS value '{tok}'", lineno)


def dumps_effective(eff: EffectiveRateTable) -> str:
    lines = _header("effective", T_grid_K=fmt_grid(eff.temps))
    lines.append("# n1 n1p n2 k_cm3_s(T1..TM) FLAGS")
    for key in eff.keys():
        values = " ".join(fmt_float(v) for v in eff.entries[key])
        lines.append(f"{key.n1} {key.n1p} {key.n2} {values} {_fmt_flag(eff.flags[key])}")
    return "\n".join(lines) + "\n"


def loads_effective(text, source=None) -> EffectiveRateTable:
    p, temps, rows = _loads_table(
        text, "effective", 3, source,
        lambda p, tok, ln: EffectiveKey(*(_int(p, t, ln) for t in tok)), trailing=1)
    entries = {k: v for k, (v, _, _) in rows.items()}
    flags = {k: _parse_flag(p, extra[0], ln) for k, (_, extra, ln) in rows.items()}
    try:
        return EffectiveRateTable(temps, entries, flags)
    except ConfigError as exc:
        raise _grid_error(p, exc) from None


def save_effective(path, eff):
    _write(path, dumps_effective(eff))


def load_effective(path) -> EffectiveRateTable:
    return loads_effective(_read(path), str(path))


def dumps_thermal(th: ThermalRateTable) -> str:
    lines = _header("thermal", T_grid_K=fmt_grid(th.temps))
    lines.append("# n1 n1p sym k_cm3_s(T1..TM)")
    for key in th.keys():
        values = " ".join(fmt_float(v) for v in th.entries[key])
        lines.append(f"{key.n1} {key.n1p} {key.symmetry} {values}")
    return "\n".join(lines) + "\n"


def _thermal_key(p, tok, lineno):
    n1, n1p = (_int(p, t, lineno) for t in tok[:2])
    if not re.fullmatch(r"[A-Za-z][\w-]*", tok[2]):
        raise p.error(f"bad symmetry label '{tok[2]}'", lineno)
    return ThermalKey(n1, n1p, tok[2])


def loads_thermal(text, source=None) -> ThermalRateTable:
    p, temps, rows = _loads_table(text, "thermal", 3, source, _thermal_key)
    try:
        return ThermalRateTable(temps, {k: v for k, (v, _, _) in rows.items()})
    except ConfigError as exc:
        raise _grid_error(p, exc) from None


def save_thermal(path, th):
    _write(path, dumps_thermal(th))


def load_thermal(path) -> ThermalRateTable:
    return loads_thermal(_read(path), str(path))


_TABLE_LOADERS = {"rates": loads_rates, "effective": loads_effective, "thermal": loads_thermal}


def load_any_table(path):
    """Load a rates, effective or thermal file, whichever its format tag says."""
    text = _read(path)
    for line in text.splitlines():
        if line.strip():
            m = _FORMAT_RE.match(line.strip())
            if m and m.group(1) in _TABLE_LOADERS:
                return _TABLE_LOADERS[m.group(1)](text, str(path))
            break
    raise LoadError("not a rates, effective or thermal table", str(path), 1)


# ------------------------------------------------ weights and populations

def dumps_weights(temps, weights: dict) -> str:
    lines = _header("weights", T_grid_K=fmt_grid(temps))
    lines.append("# n2 w(T1..TM)")
    for n2 in sorted(weights):
        lines.append(f"{n2} " + " ".join(fmt_float(v) for v in weights[n2]))
    return "\n".join(lines) + "\n"


def loads_weights(text, source=None):
    """Returns (temps, {n2: array of weights})."""
    p, temps, rows = _loads_table(text, "weights", 1, source, lambda p, tok, ln: _int(p, tok[0], ln))
    return tuple(temps), {k: v for k, (v, _, _) in rows.items()}


def save_weights(path, temps, weights):
    _write(path, dumps_weights(temps, weights))


def load_weights(path):
    return loads_weights(_read(path), str(path))


def dumps_populations(levels: LevelList, temps, populations, mode) -> str:
    """``populations`` has shape (len(levels), len(temps))."""
    lines = _header("populations", T_grid_K=fmt_grid(temps), mode=mode)
    lines.append("# index j sym w(T1..TM)")
    for s, row in zip(levels, np.asarray(populations)):
        lines.append(f"{s.index} {s.j} {s.symmetry} " + " ".join(fmt_float(v) for v in row))
    return "\n".join(lines) + "\n"


def loads_populations(text, source=None):
    """Returns (temps, mode, rows) with rows {index: (j, sym, array)}."""
    p = _parse(text, "populations", ("T_grid_K", "mode"), source)
    temps = p.grid("T_grid_K")
    rows = {}
    for lineno, tok in p.rows:
        if len(tok) != 3 + len(temps):
            raise p.error(f"expected {3 + len(temps)} columns, got {len(tok)}", lineno)
        idx = _int(p, tok[0], lineno)
        rows[idx] = (_int(p, tok[1], lineno, "j"), tok[2],
                     np.array([_float(p, t, lineno) for t in tok[3:]]))
    return tuple(temps), p.meta.get("mode", "combined"), rows


def save_populations(path, levels, temps, populations, mode):
    _write(path, dumps_populations(levels, temps, populations, mode))


# --------------------------------------------------------------- mapping

def dumps_mapping(mapping: dict) -> str:
    lines = _header("mapping")
    lines.append("# species old_index new_index")
    for species in ("target", "projectile"):
        for old, new in sorted(mapping.get(species, {}).items()):
            lines.append(f"{species} {old} {new}")
    return "\n".join(lines) + "\n"


def loads_mapping(text, source=None) -> dict:
    p = _parse(text, "mapping", (), source)
    mapping = {"target": {}, "projectile": {}}
    for lineno, tok in p.rows:
        if len(tok) != 3 or tok[0] not in mapping:
            raise p.error("expected 'target|projectile old new'", lineno)
        old, new = _int(p, tok[1], lineno), _int(p, tok[2], lineno)
        if old in mapping[tok[0]]:
            raise p.error(f"{tok[0]} index {old} mapped twice", lineno)
        mapping[tok[0]][old] = new
    return mapping


def load_mapping(path) -> dict:
    return loads_mapping(_read(path), str(path))


def save_mapping(path, mapping):
    _write(path, dumps_mapping(mapping))


# ---------------------------------------------------------------- config

_CONST_KEYS = ("k_B", "hc", "amu", "angstrom2")
_FLOAT_KEYS = ("mu", "quad_rtol", "weight_floor")
_CHOICE_KEYS = {"missing_reverse": MISSING_REVERSE_POLICIES,
                "missing_final": MISSING_FINAL_POLICIES,
                "missing_initial": MISSING_INITIAL_POLICIES}
CONFIG_KEYS = _CONST_KEYS + _FLOAT_KEYS + ("max_refinements",) + tuple(_CHOICE_KEYS) + (
    "temperatures", "projectile_j2")


def dumps_config(cfg: PipelineConfig) -> str:
    c = cfg.constants
    lines = _header("config")
    for name in _CONST_KEYS:
        lines.append(f"{name} = {getattr(c, name)!r}")
    for name in _FLOAT_KEYS:
        lines.append(f"{name} = {getattr(cfg, name)!r}")
    lines.append(f"max_refinements = {cfg.max_refinements}")
    for name in _CHOICE_KEYS:
        lines.append(f"{name} = {getattr(cfg, name)}")
    lines.append(f"temperatures = {', '.join(repr(t) for t in cfg.temperatures)}")
    j2 = "all" if cfg.projectile_j2 is None else ", ".join(str(j) for j in cfg.projectile_j2)
    lines.append(f"projectile_j2 = {j2}")
    return "\n".join(lines) + "\n"


def loads_config(text, source=None) -> PipelineConfig:
    """Flat ``key = value`` text; unknown keys are rejected."""
    p = _parse(text, "config", (), source)
    values, consts = {}, {}
    seen = set()
    for lineno, tok in p.rows:
        line = " ".join(tok)
        if "=" not in line:
            raise ConfigError(f"{source or 'config'}:{lineno}: expected 'key = value'")
        key, _, raw = (part.strip() for part in line.partition("="))
        raw = raw.strip().strip('"').strip("'")
        where = f"{source or 'config'}:{lineno}"
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{where}: unknown config key '{key}'")
        if key in seen:
            raise ConfigError(f"{where}: duplicate key '{key}'")
        seen.add(key)
        try:
            if key in _CONST_KEYS:
                consts[key] = float(raw)
            elif key in _FLOAT_KEYS:
                values[key] = float(raw)
            elif key == "max_refinements":
                values[key] = int(raw)
            elif key in _CHOICE_KEYS:
                values[key] = raw
            elif key == "temperatures":
                values[key] = tuple(float(t) for t in _split_list(raw))
            elif key == "projectile_j2":
                values[key] = None if raw == "all" else tuple(int(t) for t in _split_list(raw))
        except ValueError:
            raise ConfigError(f"{where}: bad value for '{key}': {raw!r}") from None
    try:
        return PipelineConfig(constants=PhysicalConstants(**consts), **values)
    except ConfigError as exc:
        raise ConfigError(f"{source or 'config'}: {exc}") from None


def _split_list(raw):
    return [t for t in raw.strip("[]").replace(",", " ").split() if t]


def save_config(path, cfg):
    _write(path, dumps_config(cfg))


def load_config(path=None) -> PipelineConfig:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        return PipelineConfig()
    try:
        text = _read(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        return loads_config(text, str(path))
    except LoadError as exc:
        raise ConfigError(str(exc)) from None
