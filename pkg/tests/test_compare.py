import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collrates.aggregate import EffectiveRateTable
from collrates.compare import (dalitz, dalitz_array, factor_stats, match_tables, percent_difference,
                               remap_keys, scaling_ratios, write_agreement_csv, write_pairs_csv)
from collrates.errors import UndefinedPointError
from collrates.ratecalc import RateTable
from collrates.states import linear_rotor_levels

rate = st.floats(1e-20, 1e-6)


def table(values, temps=(100.0,)):
    return RateTable(temps, {k: np.full(len(temps), v) if np.isscalar(v) else v for k, v in values.items()})


def keys(n, offset=0):
    return [(i + offset, 0, 0, 0) for i in range(n)]


def test_dalitz_equal_and_zero_share():
    assert dalitz(2e-11, 2e-11, 2e-11).as_tuple() == pytest.approx((1 / 3,) * 3, abs=1e-16)
    assert dalitz(0.0, 3e-11, 3e-11).as_tuple() == (0.0, 0.5, 0.5)
    with pytest.raises(UndefinedPointError):
        dalitz(0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        dalitz(-1.0, 1.0, 1.0)


@settings(max_examples=200)
@given(rate, rate, rate, st.integers(-20, 20))
def test_dalitz_sum_and_power_of_two_scaling(a, b, c, e):
    p = dalitz(a, b, c)
    assert sum(p.as_tuple()) == pytest.approx(1.0, abs=1e-12)
    q = dalitz(a * 2.0**e, b * 2.0**e, c * 2.0**e)
    assert q.as_tuple() == p.as_tuple()


@settings(max_examples=200)
@given(rate, rate, rate, st.floats(1e-3, 1e3))
def test_dalitz_general_scaling_to_rounding(a, b, c, s):
    p = np.array(dalitz(a, b, c).as_tuple())
    q = np.array(dalitz(a * s, b * s, c * s).as_tuple())
    assert np.all(np.abs(p - q) <= 4 * np.spacing(np.maximum(p, q)) + 1e-300)


def test_dalitz_array_matches_scalar():
    rng = np.random.default_rng(3)
    k = 10 ** rng.uniform(-14, -9, size=(50, 3))
    z = dalitz_array(k)
    for row, zrow in zip(k, z):
        assert tuple(zrow) == dalitz(*row).as_tuple()
    with pytest.raises(UndefinedPointError):
        dalitz_array([[0.0, 0.0, 0.0]])


key_sets = st.sets(st.tuples(st.integers(0, 4), st.just(0), st.integers(0, 4), st.just(0)), max_size=20)


@settings(max_examples=50)
@given(key_sets, key_sets, key_sets)
def test_match_tables_commutative_associative(ka, kb, kc):
    a, b, c = (table(dict.fromkeys(k, 1.0)) for k in (ka, kb, kc))
    assert match_tables(a, b) == match_tables(b, a)
    ab = table(dict.fromkeys(match_tables(a, b), 1.0))
    bc = table(dict.fromkeys(match_tables(b, c), 1.0))
    assert match_tables(ab, c) == match_tables(a, bc) == match_tables(a, b, c)


@settings(max_examples=50)
@given(st.dictionaries(st.tuples(st.integers(0, 5), st.just(0), st.integers(0, 5), st.just(0)), rate, max_size=15))
def test_self_comparison(values):
    t = table(values)
    if values:
        assert percent_difference(t, t, 100.0).mean == 0.0
    stats = factor_stats(t, t, 100.0)
    assert stats.within == stats.total == len(values)


def test_dalitz_permutes_with_tables():
    rng = np.random.default_rng(8)
    k = 10 ** rng.uniform(-14, -9, size=(200, 3))
    for perm in ([1, 0, 2], [2, 1, 0], [1, 2, 0]):
        assert np.array_equal(dalitz_array(k[:, perm]), dalitz_array(k)[:, perm])


def test_match_tables_overlaps():
    a = table(dict.fromkeys(keys(10), 1.0))
    assert match_tables(a, a) == sorted(a.entries)
    assert match_tables(a, table(dict.fromkeys(keys(5, 100), 1.0))) == []
    b = table(dict.fromkeys(keys(9, 1), 1.0))
    c = table(dict.fromkeys(keys(12, -3), 1.0))
    # a: 0..9, b: 1..9, c: -3..8
    shared = match_tables(a, b, c)
    assert [k[0] for k in shared] == list(range(1, 9))
    d = table(dict.fromkeys(keys(7, 2), 1.0))
    assert len(match_tables(a, b, d)) == 7


def test_percent_difference_cases():
    ref = table({(0, 0, 1, 0): 1.0, (1, 0, 0, 0): 2.0})
    assert percent_difference(ref, ref, 100.0).mean == 0.0
    up = table({(0, 0, 1, 0): 1.5, (1, 0, 0, 0): 3.0})
    assert percent_difference(up, ref, 100.0).mean == pytest.approx(50.0)
    mixed = table({(0, 0, 1, 0): 2.0, (1, 0, 0, 0): 1.0})
    assert percent_difference(mixed, ref, 100.0).mean == pytest.approx(25.0)
    zero_ref = table({(0, 0, 1, 0): 2.0, (1, 0, 0, 0): 0.0})
    res = percent_difference(mixed, zero_ref, 100.0)
    assert (res.mean, res.n_used, res.n_excluded) == (pytest.approx(0.0), 1, 1)


def test_factor_stats_fractions():
    ref = table(dict.fromkeys(keys(10), 1e-11))
    assert factor_stats(ref, ref, 100.0).fraction_within == 1.0
    assert factor_stats(table(dict.fromkeys(keys(10), 3e-11)), ref, 100.0).fraction_within == 0.0
    vals = [1e-11, 1.5e-11, 0.6e-11, 2e-11, 0.5e-11, 1.9e-11, 1.1e-11, 5e-11, 0.1e-11, 2.1e-11]
    mixed = table(dict(zip(keys(10), vals)))
    stats = factor_stats(mixed, ref, 100.0, F=2)
    assert (stats.within, stats.total, stats.excluded) == (7, 10, 0)
    assert stats.outliers[0] == ((8, 0, 0, 0), pytest.approx(0.1))
    assert len(stats.outliers) == 10
    dev = [abs(np.log(r)) for _, r in stats.outliers]
    assert dev == sorted(dev, reverse=True)


def test_factor_stats_exclusions_and_threshold():
    ref = table({(0, 0, 1, 0): 0.0, (1, 0, 0, 0): 1e-12, (2, 0, 0, 0): 1e-10})
    other = table({(0, 0, 1, 0): 1.0, (1, 0, 0, 0): 1e-12, (2, 0, 0, 0): 1e-10})
    stats = factor_stats(other, ref, 100.0)
    assert (stats.within, stats.total, stats.excluded) == (2, 2, 1)
    strong = factor_stats(other, ref, 100.0, threshold=1e-11)
    assert (strong.within, strong.total, strong.excluded) == (1, 1, 0)
    with pytest.raises(ValueError):
        factor_stats(other, ref, 100.0, F=1.0)


def test_remap_keys():
    t = table({(1, 0, 2, 0): 1.0, (3, 1, 1, 1): 2.0})
    r = remap_keys(t, {"target": {1: 10}, "projectile": {1: 5}})
    assert sorted(r.entries) == [(3, 5, 10, 5), (10, 0, 2, 0)]
    assert sorted(t.entries) == [(1, 0, 2, 0), (3, 1, 1, 1)]
    with pytest.raises(ValueError):
        remap_keys(table({(1, 0, 2, 0): 1.0, (3, 0, 2, 0): 2.0}), {"target": {1: 3}})


def constructed_eff(k0, temps=(100.0, 1000.0)):
    return EffectiveRateTable(temps, {(1, 0, j2): (1 + j2 / 8) * k0 for j2 in range(0, 11)})


def test_scaling_ratios_constructed():
    k0 = np.array([2e-11, 3e-11])
    res = scaling_ratios(constructed_eff(k0), 0)
    by = {(T, j2): R for _, _, T, j2, R in res.rows}
    assert by[(100.0, 0)] == 1.0
    assert by[(1000.0, 8)] == 2.0
    assert {j2 for _, j2 in by} == {0, 2, 4, 6, 8, 10}
    odd = scaling_ratios(constructed_eff(k0), 1)
    assert {j2 for *_, j2, _ in odd.rows} == {1, 3, 5, 7, 9}


@settings(max_examples=30)
@given(st.floats(1e-3, 1e3), st.floats(1e-14, 1e-9))
def test_scaling_ratios_invariant_under_common_factor(c, k0):
    a = scaling_ratios(constructed_eff(np.array([k0, k0])), 0).rows
    b = scaling_ratios(constructed_eff(np.array([c * k0, c * k0])), 0).rows
    for ra, rb in zip(a, b):
        assert rb[-1] == pytest.approx(ra[-1], rel=1e-14)


def test_scaling_with_levels_and_skips(h2_rigid):
    eff = EffectiveRateTable((100.0, 200.0), {(1, 0, 0): [0.0, 1.0], (1, 0, 2): [1.0, 3.0], (2, 0, 2): [1.0, 1.0]})
    res = scaling_ratios(eff, 0, linear_rotor_levels(59.322, 0.0, 4))
    assert (1, 0, 200.0, 2, 3.0) in res.rows
    reasons = {(n1, T): why for n1, _, T, why in res.skipped}
    assert "zero" in reasons[(1, 100.0)] and "reference" in reasons[(2, None)]


def test_csv_writers(tmp_path):
    a = table({(0, 0, 1, 0): [1.0, 2.0]}, temps=(100.0, 200.0))
    b = table({(0, 0, 1, 0): [2.0, 2.0]}, temps=(100.0, 300.0))
    write_pairs_csv(tmp_path / "pairs.csv", a, b, match_tables(a, b))
    rows = list(csv.reader(open(tmp_path / "pairs.csv")))
    assert rows == [["key", "T", "k_ref", "k"], ["0 0 1 0", "100", "2.00000000e+00", "1.00000000e+00"]]
    write_agreement_csv(tmp_path / "agree.csv", [factor_stats(a, b, 100.0)])
    rows = list(csv.reader(open(tmp_path / "agree.csv")))
    assert rows[1][:4] == ["100", "2", "1", "1"]
