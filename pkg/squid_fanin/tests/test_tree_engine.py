from __future__ import annotations

import json
import math

import numpy as np
import pytest

from squid_fanin.errors import ArgumentError, CapacityError, SaturationViolationError, UnreachableThresholdError
from squid_fanin.physics.fanin_analytics import bias_for_required_inputs
from squid_fanin.physics.inductance_designer import CollectionLoopDesign, designed
from squid_fanin.physics.squid_dynamics import SquidParams, matched_beta_l
from squid_fanin.physics.tree_engine import (
    SynapseState,
    analytic_min_active,
    build_tree,
    constructive_witness,
    dynamical_context,
    min_active_synapses,
    propagate_binary,
    propagate_dynamical,
    propagate_time_series,
    tree_snapshot,
)


def test_build_tree_counts() -> None:
    tree = build_tree(2, 3, 0.7)
    assert tree.leaf_count == 8
    assert tree.node_count == 15
    assert tree.dendrite_count == 6
    assert [tree.level_size(h) for h in range(4)] == [1, 2, 4, 8]
    assert tree.level_offset(3) == 7

    large = build_tree(22, 3, 0.7)
    assert large.leaf_count == 10648
    assert large.dendrite_count == 506


def test_breadth_first_numbering() -> None:
    tree = build_tree(2, 3, 0.7)
    assert tree.node(0).children == (1, 2)
    node = tree.node(2)
    assert (node.level, node.position, node.children) == (1, 1, (5, 6))
    leaf = tree.node(14)
    assert (leaf.level, leaf.position, leaf.children) == (3, 7, ())
    assert [n.index for n in tree.nodes()] == list(range(15))
    with pytest.raises(ArgumentError):
        tree.node(15)


def test_build_tree_respects_node_cap(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv('SQUID_FANIN_MAX_TREE_NODES', '10')
    with pytest.raises(CapacityError):
        build_tree(2, 3, 0.7)


def test_build_tree_rejects_bad_bias() -> None:
    with pytest.raises(ArgumentError):
        build_tree(2, 2, 1.5)


def test_node_threshold_at_quoted_bias() -> None:
    tree = build_tree(10, 2, 0.7)
    assert tree.node_threshold_fraction == pytest.approx(0.5455, abs=1e-4)
    assert tree.node_threshold_flux == pytest.approx(0.2727, abs=1e-4)
    assert tree.required_per_node == 6


def test_binary_propagation_on_small_tree() -> None:
    tree = build_tree(3, 2, bias_for_required_inputs(3, 2))
    assert tree.required_per_node == 2

    fired = propagate_binary(tree, [0, 1, 3, 4])
    assert fired.soma_fired
    assert fired.fired_counts() == [1, 2, 4]
    assert fired.node_flux[1].tolist() == pytest.approx([1 / 3, 1 / 3, 0.0])
    assert fired.soma_flux == pytest.approx(1 / 3)

    silent = propagate_binary(tree, [0, 1, 3])
    assert not silent.soma_fired
    assert silent.fired_counts() == [0, 1, 3]
    assert silent.node_flux[1].tolist() == pytest.approx([1 / 3, 1 / 6, 0.0])
    assert silent.max_flux() == pytest.approx(1 / 3)


def test_binary_propagation_rejects_bad_leaves() -> None:
    tree = build_tree(2, 2, 0.7)
    with pytest.raises(ArgumentError):
        propagate_binary(tree, [4])
    with pytest.raises(ArgumentError):
        propagate_binary(tree, SynapseState.binary([True, False]))


@pytest.mark.parametrize(('n', 'h_depth'), [(2, 2), (2, 3), (3, 2), (4, 2)])
def test_exhaustive_minimum_equals_power_law(n: int, h_depth: int) -> None:
    for p in range(1, n + 1):
        tree = build_tree(n, h_depth, bias_for_required_inputs(n, p))
        assert tree.required_per_node == p

        result = min_active_synapses(tree, 'exhaustive')
        assert result.mode == 'exhaustive'
        assert result.count == p**h_depth == analytic_min_active(tree)
        assert len(result.witness) == result.count
        assert propagate_binary(tree, result.witness).soma_fired
        for leaf in result.witness:
            reduced = [other for other in result.witness if other != leaf]
            assert not propagate_binary(tree, reduced).soma_fired


def test_exhaustive_witness_is_lexicographically_first() -> None:
    tree = build_tree(3, 2, bias_for_required_inputs(3, 2))
    result = min_active_synapses(tree, 'exhaustive')
    assert result.witness == (0, 1, 3, 4)
    assert result.witness == constructive_witness(tree)


def test_constructive_witness_on_large_tree() -> None:
    tree = build_tree(10, 3, 0.7)
    result = min_active_synapses(tree, 'auto')
    assert result.mode == 'constructive'
    assert result.count == 216 == analytic_min_active(tree)

    propagated = propagate_binary(tree, result.witness)
    assert propagated.soma_fired
    assert propagated.fired_counts() == [1, 6, 36, 216]


def test_auto_mode_uses_exhaustive_on_small_trees() -> None:
    tree = build_tree(2, 2, 0.9)
    assert min_active_synapses(tree, 'auto').mode == 'exhaustive'
    with pytest.raises(ArgumentError):
        min_active_synapses(tree, 'random')  # type: ignore[arg-type]


def test_exhaustive_search_on_full_leaf_cap() -> None:
    tree = build_tree(24, 1, bias_for_required_inputs(24, 22))
    result = min_active_synapses(tree, 'exhaustive')
    assert result.mode == 'exhaustive'
    assert result.count == 22 == analytic_min_active(tree)
    assert result.witness == tuple(range(22))
    assert 0 < result.evaluations <= 2**24


def test_exhaustive_search_leaf_cap() -> None:
    with pytest.raises(CapacityError):
        min_active_synapses(build_tree(5, 2, 0.7), 'exhaustive')


def test_unreachable_threshold() -> None:
    tree = build_tree(3, 2, 0.3)
    with pytest.raises(UnreachableThresholdError):
        analytic_min_active(tree)
    with pytest.raises(UnreachableThresholdError):
        constructive_witness(tree)
    with pytest.raises(UnreachableThresholdError):
        min_active_synapses(tree, 'exhaustive')


def test_full_bias_still_needs_an_active_leaf() -> None:
    tree = build_tree(2, 2, 1.0)
    assert tree.node_threshold_flux == 0.0
    assert tree.required_per_node == 1
    assert not propagate_binary(tree, []).soma_fired
    assert propagate_binary(tree, [3]).soma_fired

    result = min_active_synapses(tree, 'exhaustive')
    assert (result.count, result.witness) == (1, (0,))
    assert analytic_min_active(tree) == 1


def test_synapse_state_validation() -> None:
    with pytest.raises(ArgumentError):
        SynapseState()
    with pytest.raises(ArgumentError):
        SynapseState(saturated=(True,), currents=(1.0,), i_sat=1.0)
    with pytest.raises(ArgumentError):
        SynapseState.analog([-1e-6], i_sat=1e-4)
    with pytest.raises(SaturationViolationError):
        SynapseState.analog([2e-4], i_sat=1e-4)
    with pytest.raises(ArgumentError):
        SynapseState.analog([0.0], i_sat=1e-4, decay_tau=0.0)


def test_synapse_state_active_leaves_and_decay() -> None:
    state = SynapseState.analog([1e-4, 5e-5, 0.0], i_sat=1e-4, decay_tau=2e-9)
    assert state.is_analog
    assert len(state) == 3
    assert state.active_leaves() == frozenset({0})

    decayed = state.decayed(2e-9)
    assert decayed.currents is not None
    assert decayed.currents[0] == pytest.approx(1e-4 * math.exp(-1.0), rel=1e-12)
    assert decayed.active_leaves() == frozenset()
    assert state.decayed(0.0) is state

    binary = SynapseState.binary([True, False, True])
    assert not binary.is_analog
    assert binary.active_leaves() == frozenset({0, 2})
    assert binary.decayed(1.0) is binary


@pytest.fixture(scope='module')
def dynamical_setup():
    tree = build_tree(2, 2, 0.9)
    design = designed(CollectionLoopDesign(n=2))
    squid = SquidParams.standard(0.9)
    context = dynamical_context(tree, squid, design, lookup_points=21, t_settle=20.0, t_measure=100.0)
    return tree, design, context


def test_dynamical_all_saturated_reaches_curve_maximum(dynamical_setup) -> None:
    tree, design, context = dynamical_setup
    state = SynapseState.analog([design.i_sat] * 4, i_sat=design.i_sat)
    result = propagate_dynamical(tree, state, context.squid, context=context)

    assert result.soma_flux == pytest.approx(0.5, abs=1e-9)
    assert result.soma_rate == pytest.approx(context.max_rate, rel=1e-6)
    assert result.soma_fired
    assert propagate_binary(tree, state).soma_fired
    assert all(float(current) <= design.i_sat for level in result.node_current for current in level)


def test_dynamical_silent_inputs_stay_silent(dynamical_setup) -> None:
    tree, design, context = dynamical_setup
    state = SynapseState.analog([0.0] * 4, i_sat=design.i_sat)
    result = propagate_dynamical(tree, state, context.squid, context=context)

    assert result.soma_flux == 0.0
    assert result.soma_rate == 0.0
    assert not result.soma_fired
    assert not propagate_binary(tree, state).soma_fired


def test_dynamical_soma_rate_grows_with_input(dynamical_setup) -> None:
    tree, design, context = dynamical_setup
    rates = []
    for fraction in (0.0, 0.25, 0.5, 0.75, 1.0):
        state = SynapseState.analog([fraction * design.i_sat] * 4, i_sat=design.i_sat)
        rates.append(propagate_dynamical(tree, state, context.squid, context=context).soma_rate)
    assert all(b >= a - 1e-12 for a, b in zip(rates, rates[1:]))
    assert rates[-1] > rates[0]


def test_dynamical_input_validation(dynamical_setup) -> None:
    tree, design, context = dynamical_setup
    with pytest.raises(ArgumentError):
        propagate_dynamical(tree, SynapseState.binary([True] * 4), context.squid, context=context)
    with pytest.raises(ArgumentError):
        propagate_dynamical(tree, SynapseState.analog([0.0] * 4, i_sat=design.i_sat / 2), context.squid, context=context)
    with pytest.raises(ArgumentError):
        propagate_dynamical(tree, SynapseState.analog([0.0] * 3, i_sat=design.i_sat), context.squid, context=context)
    with pytest.raises(ArgumentError):
        propagate_dynamical(tree, SynapseState.analog([0.0] * 4, i_sat=design.i_sat), context.squid)


def test_dynamical_context_checks_design(dynamical_setup) -> None:
    tree, design, context = dynamical_setup
    with pytest.raises(ArgumentError):
        dynamical_context(tree, context.squid, designed(CollectionLoopDesign(n=3)))

    reused = dynamical_context(tree, SquidParams.standard(0.5), design, lookup=context.lookup)
    assert reused.lookup is context.lookup
    assert reused.squid.bias_ratio == 0.9
    assert reused.squid.beta_l == pytest.approx(matched_beta_l(0.9), rel=1e-12)
    assert reused.gain == pytest.approx(design.i_sat / context.max_rate, rel=1e-12)


def test_single_leaf_increase_never_lowers_soma_rate(dynamical_setup) -> None:
    _, _, context = dynamical_setup
    rng = np.random.default_rng(11)
    contexts = {}
    for _ in range(100):
        n = int(rng.integers(2, 5))
        h_depth = int(rng.integers(1, 3))
        if (n, h_depth) not in contexts:
            tree = build_tree(n, h_depth, 0.9)
            design = designed(CollectionLoopDesign(n=n))
            contexts[n, h_depth] = tree, dynamical_context(tree, SquidParams.standard(0.9), design, lookup=context.lookup)
        tree, tree_context = contexts[n, h_depth]
        assert tree_context.lookup is context.lookup
        i_sat = tree_context.design.i_sat

        currents = rng.uniform(0.0, i_sat, tree.leaf_count)
        raised = currents.copy()
        leaf = int(rng.integers(tree.leaf_count))
        raised[leaf] = rng.uniform(currents[leaf], i_sat)

        before = propagate_dynamical(tree, SynapseState.analog(currents.tolist(), i_sat), tree_context.squid, context=tree_context)
        after = propagate_dynamical(tree, SynapseState.analog(raised.tolist(), i_sat), tree_context.squid, context=tree_context)
        assert after.soma_rate >= before.soma_rate


@pytest.mark.parametrize('bias', [0.455, 0.47, 0.5, 0.55])
def test_extremes_agree_with_binary_near_unreachable_bias(bias: float) -> None:
    tree = build_tree(2, 2, bias)
    assert tree.node_threshold_fraction <= 1.0
    design = designed(CollectionLoopDesign(n=2))
    context = dynamical_context(
        tree, SquidParams.standard(bias), design, lookup_points=2, t_settle=100.0, t_measure=1000.0,
    )
    assert context.max_rate > 0

    saturated = SynapseState.analog([design.i_sat] * 4, i_sat=design.i_sat)
    silent = SynapseState.analog([0.0] * 4, i_sat=design.i_sat)
    assert propagate_dynamical(tree, saturated, context.squid, context=context).soma_fired
    assert propagate_binary(tree, saturated).soma_fired
    assert not propagate_dynamical(tree, silent, context.squid, context=context).soma_fired
    assert not propagate_binary(tree, silent).soma_fired


def test_time_series_decays_to_silence(dynamical_setup) -> None:
    tree, design, context = dynamical_setup
    state = SynapseState.analog([design.i_sat] * 4, i_sat=design.i_sat, decay_tau=1e-9)
    series = propagate_time_series(tree, state, [0.0, 1e-9, 1e-8], context)

    assert [t for t, _ in series] == [0.0, 1e-9, 1e-8]
    rates = [result.soma_rate for _, result in series]
    assert rates[0] == pytest.approx(context.max_rate, rel=1e-6)
    assert all(b <= a + 1e-12 for a, b in zip(rates, rates[1:]))
    assert not series[-1][1].soma_fired

    with pytest.raises(ArgumentError):
        propagate_time_series(tree, state, [1e-9, 0.0], context)


def test_snapshot_is_json_ready() -> None:
    tree = build_tree(2, 2, 0.9)
    bare = tree_snapshot(tree)
    assert bare['topology'] == {'n': 2, 'H': 2, 'n_synapses': 4, 'node_count': 7, 'dendrite_count': 2}
    assert 'levels' not in bare

    snapshot = tree_snapshot(tree, propagate_binary(tree, [0, 2]))
    json.dumps(snapshot)
    assert snapshot['active_leaves'] == [0, 2]
    assert snapshot['soma_fired'] is True
    assert [level['level'] for level in snapshot['levels']] == [0, 1]
    assert snapshot['levels'][1]['fired'] == [True, True]
