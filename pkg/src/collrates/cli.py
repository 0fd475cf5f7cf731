"""Command-line front end: one subcommand per pipeline stage.

Exit codes: 0 success, 1 data error, 2 configuration error, 3 numerical
failure. Warnings go to standard error, one-line summaries to standard output.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import aggregate, compare, dataio
from .config import MISSING_FINAL_POLICIES, MISSING_INITIAL_POLICIES, check_temperature_grid
from .errors import CollratesError, ConfigError, DataError, IncompletePairError, NumericalError
from .ratecalc import rate_table
from .states import asym_top_levels, boltzmann_populations, linear_rotor_levels
from .xsec import pair_inventory

log = logging.getLogger("collrates")


def _floats(text, what="value"):
    try:
        return tuple(float(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"bad {what} list: {text!r}") from None


def _temps(text):
    temps = _floats(text, "temperature")
    check_temperature_grid(temps)
    return temps


def cmd_rates(args):
    cfg = dataio.load_config(args.config)
    if args.policy:
        cfg = cfg.with_updates(missing_reverse=args.policy)
    temps = _temps(args.temps) if args.temps else cfg.temperatures
    target = dataio.load_levels(args.levels_target)
    projectile = dataio.load_levels(args.levels_projectile)
    table = dataio.load_xsec(args.xsec, target, projectile)
    inv = pair_inventory(table)
    if cfg.missing_reverse == "require-both" and inv.one_sided:
        names = ", ".join(f"[{k.reverse()}]" for k in inv.one_sided)
        raise IncompletePairError(f"{len(inv.one_sided)} reverse transitions missing: {names}")
    rates, summary = rate_table(table, temps, cfg, jobs=args.jobs)
    dataio.save_rates(args.out, rates)
    if args.report:
        _write_report(args.report, summary.smoothness)
    for key, exc in summary.failures:
        print(f"warning: transition {key}: {exc}", file=sys.stderr)
    print(f"rates: {summary.n_rows} rows from {summary.n_items} transitions "
          f"({len(inv.complete)} complete pairs, {len(inv.one_sided)} one-sided, "
          f"{len(inv.elastic)} elastic), {len(summary.failures)} failed -> {args.out}")
    if summary.failures and args.strict:
        raise NumericalError(f"{len(summary.failures)} transitions failed (--strict)")
    return 0


def _write_report(path, rows):
    lines = ["# format: smoothness v1",
             "# n1 n2 n1p n2p n_used n_dropped interpolation tail_slope_per_cm1 local_maxima"]
    for r in sorted(rows, key=lambda r: r.key):
        k = r.key
        lines.append(f"{k.n1} {k.n2} {k.n1p} {k.n2p} {r.n_used} {r.n_dropped} {r.kind} "
                     f"{r.tail_slope:.7e} {r.local_maxima}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_effective(args):
    cfg = dataio.load_config(args.config)
    rates = dataio.load_rates(args.rates)
    projectile = dataio.load_levels(args.levels_projectile) if args.levels_projectile else None
    eff = aggregate.effective_rates(rates, args.policy or cfg.missing_final, projectile)
    dataio.save_effective(args.out, eff)
    partial = sum(1 for s, _ in eff.flags.values() if s == aggregate.PARTIAL)
    print(f"effective: {len(eff)} rows ({partial} partial) -> {args.out}")
    return 0


def cmd_thermal(args):
    cfg = dataio.load_config(args.config)
    eff = dataio.load_effective(args.effective)
    if args.weights:
        temps, weights = dataio.load_weights(args.weights)
        if tuple(temps) != tuple(eff.temps):
            raise DataError("weights file temperature grid differs from the effective-rate grid")
        th = aggregate.average_with_weights(eff, weights)
    else:
        if not args.levels_projectile or not args.symmetry:
            raise ConfigError("--levels-projectile and --symmetry are required unless --weights is given")
        levels = dataio.load_levels(args.levels_projectile)
        th = aggregate.thermal_rates(eff, levels, args.symmetry, policy=args.policy, cfg=cfg)
    dataio.save_thermal(args.out, th)
    print(f"thermal: {len(th)} rows -> {args.out}")
    return 0


def cmd_populations(args):
    cfg = dataio.load_config(args.config)
    levels = dataio.load_levels(args.levels)
    temps = _temps(args.temps) if args.temps else cfg.temperatures
    pops = np.array([boltzmann_populations(levels, T, args.mode, cfg.k_B) for T in temps]).T
    dataio.save_populations(args.out, levels, temps, pops, args.mode)
    print(f"populations: {len(levels)} levels x {len(temps)} temperatures ({args.mode}) -> {args.out}")
    return 0


def cmd_compare(args):
    paths = [p for p in args.tables.split(",") if p]
    if len(paths) not in (2, 3):
        raise ConfigError("--tables takes two or three comma-separated files")
    tables = [dataio.load_any_table(p) for p in paths]
    if len({type(t) for t in tables}) != 1:
        raise DataError("compared tables must all be the same kind (rates, effective or thermal)")
    if args.map:
        mapping = dataio.load_mapping(args.map)
        tables = [tables[0]] + [compare.remap_keys(t, mapping) for t in tables[1:]]
    keys = compare.match_tables(*tables)
    temps = [T for T in tables[0].temps if all(_has_temp(t, T) for t in tables[1:])]
    if args.temps:
        wanted = _temps(args.temps)
        temps = [T for T in temps if any(abs(T - w) <= 1e-9 * w for w in wanted)]
    if not temps:
        raise DataError("tables share no temperatures")
    prefix = args.out_prefix
    agreement = [compare.factor_stats(tables[0], tables[1], T, args.factor, args.threshold, keys=keys)
                 for T in temps]
    compare.write_agreement_csv(f"{prefix}agreement.csv", agreement)
    compare.write_pairs_csv(f"{prefix}pairs.csv", tables[0], tables[1], keys)
    for e in agreement:
        print(f"T={e.T:g} K: {e.within}/{e.total} within factor {e.F:g}, "
              f"mean difference {e.mean_pct_diff:+.2f}% (reference {paths[1]}), {e.excluded} excluded")
    if len(tables) == 3:
        points, skipped = [], 0
        for T in temps:
            idx = [t.temp_index(T) for t in tables]
            for key in keys:
                ks = [t.entries[key][i] for t, i in zip(tables, idx)]
                if sum(ks) == 0:
                    skipped += 1
                    continue
                points.append(compare.dalitz(*ks, key=key, T=T))
        compare.write_dalitz_csv(f"{prefix}dalitz.csv", points)
        if skipped:
            print(f"warning: {skipped} all-zero rate triples left out of the Dalitz output", file=sys.stderr)
    print(f"compare: {len(keys)} matched transitions at {len(temps)} temperatures -> {prefix}*.csv")
    return 0


def _has_temp(table, T):
    try:
        table.temp_index(T)
        return True
    except KeyError:
        return False


def cmd_scaling(args):
    eff = dataio.load_effective(args.effective)
    projectile = dataio.load_levels(args.levels_projectile) if args.levels_projectile else None
    result = compare.scaling_ratios(eff, args.reference_j2, projectile)
    compare.write_scaling_csv(args.out, result)
    for n1, n1p, T, reason in result.skipped:
        at = "" if T is None else f" at T={T:g} K"
        print(f"warning: skipped {n1}->{n1p}{at}: {reason}", file=sys.stderr)
    print(f"scaling: {len(result.rows)} ratios, {len(result.skipped)} skipped -> {args.out}")
    return 0


def cmd_levels(args):
    if (args.asym is None) == (args.linear is None):
        raise ConfigError("give exactly one of --asym A,B,C or --linear B,D")
    if args.asym is not None:
        consts = _floats(args.asym, "rotational constant")
        if len(consts) != 3:
            raise ConfigError("--asym takes three constants A,B,C")
        levels = asym_top_levels(*consts, args.jmax, args.symmetry)
    else:
        consts = _floats(args.linear, "rotational constant")
        if len(consts) not in (1, 2):
            raise ConfigError("--linear takes B or B,D")
        levels = linear_rotor_levels(consts[0], consts[1] if len(consts) == 2 else 0.0,
                                     args.jmax, args.symmetry)
    dataio.save_levels(args.out, levels)
    print(f"levels: {len(levels)} synthetic {levels.species} levels -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collrates",
        description="Rate coefficients from collision cross sections, and database comparisons.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="state-to-state rates from cross sections")
    p.add_argument("--xsec", required=True, help="cross-section file")
    p.add_argument("--levels-target", required=True, help="target (asymmetric top) level file")
    p.add_argument("--levels-projectile", required=True, help="projectile (linear rotor) level file")
    p.add_argument("--config", help="config file (defaults used when omitted)")
    p.add_argument("--temps", help="comma-separated temperatures in K (overrides config)")
    p.add_argument("--policy", choices=("one-sided", "require-both"),
                   help="missing-reverse policy (overrides config)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (output does not depend on it)")
    p.add_argument("--report", help="write a per-transition smoothness report here")
    p.add_argument("--strict", action="store_true", help="exit 3 if any transition fails")
    p.add_argument("--out", required=True, help="output rates file")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("effective", help="sum rates over final projectile states")
    p.add_argument("--rates", required=True, help="state-to-state rates file")
    p.add_argument("--levels-projectile", help="projectile levels, to flag missing final states")
    p.add_argument("--policy", choices=MISSING_FINAL_POLICIES, help="missing-final policy")
    p.add_argument("--config", help="config file")
    p.add_argument("--out", required=True, help="output effective-rate file")
    p.set_defaults(func=cmd_effective)

    p = sub.add_parser("thermal", help="Boltzmann-average effective rates over initial projectile states")
    p.add_argument("--effective", required=True, help="effective-rate file")
    p.add_argument("--levels-projectile", help="projectile level file")
    p.add_argument("--symmetry", choices=("para", "ortho"), help="projectile manifold to average over")
    p.add_argument("--policy", choices=MISSING_INITIAL_POLICIES, help="missing-initial policy")
    p.add_argument("--weights", help="custom weights file (bypasses the Boltzmann weights)")
    p.add_argument("--config", help="config file")
    p.add_argument("--out", required=True, help="output thermal-rate file")
    p.set_defaults(func=cmd_thermal)

    p = sub.add_parser("populations", help="Boltzmann populations of a level list")
    p.add_argument("--levels", required=True, help="level file")
    p.add_argument("--temps", help="comma-separated temperatures in K")
    p.add_argument("--mode", default="combined", choices=("combined", "per-symmetry", "para", "ortho"))
    p.add_argument("--config", help="config file")
    p.add_argument("--out", required=True, help="output populations file")
    p.set_defaults(func=cmd_populations)

    p = sub.add_parser("compare", help="agreement statistics and Dalitz coordinates")
    p.add_argument("--tables", required=True, help="A,B[,C]: rate tables; B is the reference")
    p.add_argument("--map", help="state-index mapping applied to B and C")
    p.add_argument("--factor", type=float, default=2.0, help="agreement factor F (default 2)")
    p.add_argument("--threshold", type=float,
                   help=f"only count transitions with reference rate >= this (e.g. {compare.INTENSE_THRESHOLD:g})")
    p.add_argument("--temps", help="restrict to these temperatures")
    p.add_argument("--out-prefix", required=True, help="prefix for the CSV outputs")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("scaling", help="effective rates relative to a reference projectile state")
    p.add_argument("--effective", required=True, help="effective-rate file")
    p.add_argument("--reference-j2", type=int, required=True, help="0 for para, 1 for ortho projectiles")
    p.add_argument("--levels-projectile", help="projectile levels (maps state index to j)")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("levels", help="write synthetic rigid-rotor levels")
    p.add_argument("--asym", help="A,B,C in cm^-1")
    p.add_argument("--linear", help="B[,D] in cm^-1")
    p.add_argument("--jmax", type=int, required=True)
    p.add_argument("--symmetry", default="all", choices=("all", "para", "ortho"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_levels)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CollratesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
