import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collrates.aggregate import (COMPLETE, PARTIAL, EffectiveKey, EffectiveRateTable, ThermalKey,
                                 average_with_weights, effective_rates, partition_function, thermal_rates)
from collrates.config import KB_CM1, PipelineConfig
from collrates.errors import ConfigError, IncompleteDataError
from collrates.ratecalc import RateTable
from collrates.states import LINEAR_ROTOR, PARA, LevelList, LinearRotorState, boltzmann_factors

TEMPS = (100.0, 500.0, 1000.0, 1500.0)


def eff_table(rates_by_n2, temps=TEMPS, n1=1, n1p=0):
    return EffectiveRateTable(temps, {(n1, n1p, n2): np.full(len(temps), r) if np.isscalar(r) else r
                                      for n2, r in rates_by_n2.items()})


def test_single_term_is_identity():
    rates = RateTable((100.0, 200.0), {(1, 0, 0, 0): [3e-11, 4e-11]})
    eff = effective_rates(rates)
    assert eff.entries[EffectiveKey(1, 0, 0)].tolist() == [3e-11, 4e-11]
    assert eff.flags[EffectiveKey(1, 0, 0)] == (COMPLETE, ())


def test_sum_over_final_projectile_states():
    rates = RateTable((100.0,), {(1, 0, 0, 0): [1.0e-11], (1, 0, 0, 2): [2.5e-11]})
    assert effective_rates(rates).entries[EffectiveKey(1, 0, 0)][0] == pytest.approx(3.5e-11, rel=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1e-14, 1e-9), min_size=2, max_size=12), st.randoms())
def test_sum_independent_of_row_order(values, rnd):
    rows = [((2, 0, 1, n2p), [v]) for n2p, v in enumerate(values)]
    first = effective_rates(RateTable((300.0,), dict(rows))).entries[EffectiveKey(2, 1, 0)]
    rnd.shuffle(rows)
    second = effective_rates(RateTable((300.0,), dict(rows))).entries[EffectiveKey(2, 1, 0)]
    assert first.tobytes() == second.tobytes()


def test_missing_final_flag_and_strict(h2_rigid):
    rates = RateTable((100.0,), {(1, 0, 0, 0): [1e-11], (1, 0, 0, 4): [1e-12]})
    eff = effective_rates(rates, "flag", h2_rigid)
    status, missing = eff.flags[EffectiveKey(1, 0, 0)]
    assert status == PARTIAL and missing == (2, 6, 8, 10)
    with pytest.raises(IncompleteDataError):
        effective_rates(rates, "strict", h2_rigid)
    with pytest.raises(ConfigError):
        effective_rates(rates, "bogus")


def test_partition_single_level():
    levels = LevelList(LINEAR_ROTOR, (LinearRotorState(0, 0.0, 0),))
    assert partition_function(levels, PARA, 300.0) == 1.0


def test_partition_two_levels():
    levels = LevelList(LINEAR_ROTOR, (LinearRotorState(0, 0.0, 0), LinearRotorState(2, 354.24, 1)))
    expected = 1 + 5 * math.exp(-354.24 / 69.50348)
    assert partition_function(levels, PARA, 100.0) == pytest.approx(expected, rel=1e-12)


def test_partition_high_temperature_limit(h2_rigid):
    # the limit is reached to ~<E>/kT, so use a ladder with small spacings
    from collrates.states import linear_rotor_levels
    soft = linear_rotor_levels(0.5, 0.0, 3)
    assert partition_function(soft, PARA, 1e7) == pytest.approx(6.0, rel=1e-6)
    assert partition_function(soft, "all", 1e7) == pytest.approx(16.0, rel=1e-6)
    g_para = sum(2 * j + 1 for j in range(0, 11, 2))
    gaps = [g_para - partition_function(h2_rigid, PARA, T) for T in (1e4, 1e5, 1e6, 1e7)]
    assert all(a > b > 0 for a, b in zip(gaps, gaps[1:]))
    with pytest.raises(ConfigError):
        partition_function(h2_rigid, "meta", 100.0)


def test_single_initial_state_is_identity(h2_rigid):
    cfg = PipelineConfig(projectile_j2=(0,))
    eff = eff_table({0: np.array([1.0, 2.0, 3.0, 4.0])})
    th = thermal_rates(eff, h2_rigid, PARA, cfg=cfg)
    assert th.entries[ThermalKey(1, 0, PARA)].tolist() == [1.0, 2.0, 3.0, 4.0]


def test_equal_rates_average_to_same(h2_rigid):
    eff = eff_table({n2: 7e-11 for n2 in range(0, 11, 2)})
    th = thermal_rates(eff, h2_rigid, PARA)
    np.testing.assert_allclose(th.entries[ThermalKey(1, 0, PARA)], 7e-11, rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-14, 1e-9), min_size=6, max_size=6))
def test_thermal_is_convex_combination(values):
    from collrates.states import linear_rotor_levels
    levels = linear_rotor_levels(59.322, 0.0, 10)
    eff = eff_table(dict(zip(range(0, 11, 2), values)))
    kbar = thermal_rates(eff, levels, PARA).entries[ThermalKey(1, 0, PARA)]
    assert np.all(kbar >= min(values) * (1 - 1e-12))
    assert np.all(kbar <= max(values) * (1 + 1e-12))


def test_weights_match_boltzmann(h2_rigid):
    eff = eff_table({n2: 1.0 for n2 in range(0, 11, 2)})
    th = thermal_rates(eff, h2_rigid, PARA)
    n2s, w = th.weights[ThermalKey(1, 0, PARA)]
    assert n2s == (0, 2, 4, 6, 8, 10)
    terms = boltzmann_factors(h2_rigid, 500.0)[list(n2s)]
    np.testing.assert_allclose(w[:, 1], terms / terms.sum(), rtol=1e-14)
    np.testing.assert_allclose(w.sum(axis=0), 1.0, rtol=1e-14)


def growing(n2s):
    return {n2: 1e-11 * (1 + n2 / 8) for n2 in n2s}


def test_error_policy_requires_heavy_states(h2_rigid):
    eff = eff_table(growing([0, 2]))
    with pytest.raises(IncompleteDataError):
        thermal_rates(eff, h2_rigid, PARA, policy="error")
    # j=10 carries negligible weight at 100 K so it is dropped silently
    cold = eff_table(growing([0, 2, 4, 6, 8]), temps=(100.0,))
    th = thermal_rates(cold, h2_rigid, PARA, policy="error")
    n2s, w = th.weights[ThermalKey(1, 0, PARA)]
    assert n2s == (0, 2, 4, 6, 8)
    assert w.sum() == pytest.approx(1.0, rel=1e-14)


def test_missing_initial_policies_order(h2_rigid):
    eff = eff_table(growing([0, 2, 4]))
    key = ThermalKey(1, 0, PARA)
    zero = thermal_rates(eff, h2_rigid, PARA, policy="zero").entries[key]
    sub = thermal_rates(eff, h2_rigid, PARA, policy="substitute-highest").entries[key]
    ren = thermal_rates(eff, h2_rigid, PARA, policy="renormalize")
    assert np.all(zero < sub)
    assert ren.weights[key][1].sum(axis=0) == pytest.approx(np.ones(len(TEMPS)), rel=1e-14)
    assert thermal_rates(eff, h2_rigid, PARA, policy="substitute-highest").sources[key] == (0, 2, 4, 4, 4, 4)


def test_unknown_symmetry_and_policy(h2_rigid):
    eff = eff_table(growing([0]))
    with pytest.raises(ConfigError):
        thermal_rates(eff, h2_rigid, "meta")
    with pytest.raises(ConfigError):
        thermal_rates(eff, h2_rigid, PARA, policy="guess")


def test_custom_weights():
    eff = eff_table({0: 1.0, 2: 3.0}, temps=(100.0, 200.0))
    th = average_with_weights(eff, {0: [0.5, 0.25], 2: [0.5, 0.75]})
    assert th.entries[ThermalKey(1, 0, "custom")].tolist() == [2.0, 2.5]
    with pytest.raises(IncompleteDataError):
        average_with_weights(eff, {0: [1.0, 1.0], 4: [0.0, 0.0]})


def test_kb_constant_consistent():
    assert KB_CM1 * 100 == pytest.approx(69.50348, rel=1e-15)
