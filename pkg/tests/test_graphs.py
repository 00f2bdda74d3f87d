import numpy as np
import pytest
from hypothesis import given, strategies as st

from densewire import graphs, sampling
from densewire.errors import (
    BudgetTooSmall,
    DimensionMismatch,
    EmptyDerivation,
    SchemaError,
    UnknownPreset,
)
from densewire.graphs import (
    CellGraph,
    MetaGraph,
    OperatorKind,
    StageConfig,
    cyclic_ops,
    preset_space,
    single_cell_template,
)


def cell(n, edges, ops=None):
    if ops is None:
        ops = cyclic_ops(n)
    return CellGraph(n, tuple(ops), frozenset(edges))


def single(n, edges, ops=None, channels=16, repeats=1, height=8, width=8):
    c = cell(n, edges, ops)
    return MetaGraph((c,), (StageConfig(channels, repeats, height, width),))


# ---------------------------------------------------------------------------
# validity


def test_minimal_chain_is_valid():
    report = graphs.validate(cell(3, {(0, 1), (1, 2)}))
    assert report.ok
    assert report.problems == ()


def test_empty_cell_is_invalid():
    report = graphs.validate(cell(3, set()))
    assert not report.ok
    assert any("reachable" in p for p in report.problems)


def test_reversed_edge_is_invalid():
    report = graphs.validate(cell(3, {(1, 0)}))
    assert not report.ok


def test_validate_meta_prefixes_cell_index():
    ok = cell(3, {(0, 1), (1, 2)})
    bad = cell(3, set())
    meta = MetaGraph((ok, bad), (StageConfig(16, 1, 8, 8),) * 2)
    report = graphs.validate_meta(meta)
    assert not report.ok
    assert report.problems[0].startswith("cell 1:")


def test_is_valid_cell_agrees_with_validate():
    for edges in [set(), {(0, 1)}, {(1, 2)}, {(0, 1), (1, 2)}, {(0, 2)}]:
        c = cell(3, edges)
        assert graphs.is_valid_cell(c) == graphs.validate(c).ok


# ---------------------------------------------------------------------------
# active subgraph


def test_active_subgraph_keeps_reachable_vertices():
    c = cell(4, {(0, 1), (1, 3), (0, 2)})
    assert graphs.active_vertices(c) == (1, 2)
    # vertex 1 feeds the output explicitly, vertex 2 is a leaf
    assert graphs.output_feeders(c) == (1, 2)


def test_active_subgraph_prunes_unreachable_vertex():
    c = cell(4, {(0, 1), (2, 3)})
    assert graphs.active_vertices(c) == (1,)
    pruned = graphs.active_subgraph(c)
    assert pruned.edges == frozenset({(0, 1)})


def test_active_subgraph_empty_derivation():
    with pytest.raises(EmptyDerivation):
        graphs.active_subgraph(cell(3, {(1, 2)}))


def test_input_edge_to_output_counts_as_feeder():
    c = cell(3, {(0, 1), (0, 2)})
    assert graphs.output_feeders(c) == (0, 1)


# ---------------------------------------------------------------------------
# channel inference


def test_identity_shaped_chain_widths():
    c = cell(3, {(0, 1), (1, 2)}, ops=(OperatorKind.CONV1X1,))
    plan = graphs.infer_channels(c, StageConfig(16, 1, 8, 8))
    assert plan.in_channels[1] == 16
    assert plan.out_channels[1] == 16
    assert plan.output_width == 16


def test_concat_of_conv_and_depthwise_widths():
    """Conv projects to the stage width, depthwise keeps the input width."""
    c = cell(
        4,
        {(0, 1), (0, 2), (1, 3), (2, 3)},
        ops=(OperatorKind.CONV1X1, OperatorKind.DW3),
    )
    plan = graphs.infer_channels(c, StageConfig(16, 1, 8, 8), input_width=8)
    assert plan.out_channels[1] == 16
    assert plan.out_channels[2] == 8
    assert plan.output_width == 24


def test_two_predecessors_sum_to_forty():
    c = cell(
        4,
        {(0, 1), (0, 2), (1, 2), (2, 3)},
        ops=(OperatorKind.CONV1X1, OperatorKind.DW3),
    )
    plan = graphs.infer_channels(c, StageConfig(16, 1, 8, 8), input_width=24)
    assert plan.out_channels[1] == 16
    assert plan.in_channels[2] == 40


def test_channel_projection_widths():
    c = cell(3, {(0, 1), (1, 2)}, ops=(OperatorKind.CONV1X1,))
    plan = graphs.infer_channels(c, StageConfig(32, 1, 8, 8), input_width=16)
    assert plan.in_channels[1] == 16
    assert plan.out_channels[1] == 32
    # contribution of that single application under the counting rules
    assert 8 * 8 * plan.in_channels[1] * plan.out_channels[1] == 32768
    assert plan.in_channels[1] * plan.out_channels[1] + 2 * plan.out_channels[1] == 512 + 64


def test_infer_channels_empty_derivation():
    with pytest.raises(EmptyDerivation):
        graphs.infer_channels(cell(3, set()), StageConfig(16, 1, 8, 8))


# ---------------------------------------------------------------------------
# MAC and parameter accounting


def test_depthwise_cell_stats():
    meta = single(3, {(0, 1), (1, 2)}, ops=(OperatorKind.DW3,))
    stats = graphs.arch_stats(meta)
    assert stats.macs == 9216
    assert stats.params == 144 + 32
    assert stats.active_vertices == (1,)


def test_conv_cell_stats():
    meta = single(3, {(0, 1), (1, 2)}, ops=(OperatorKind.CONV1X1,))
    stats = graphs.arch_stats(meta)
    assert stats.macs == 8 * 8 * 16 * 16
    assert stats.params == 16 * 16 + 2 * 16


@pytest.mark.parametrize(
    "op,k", [(OperatorKind.DW3, 3), (OperatorKind.DW5, 5), (OperatorKind.DW7, 7)]
)
def test_depthwise_kernel_sizes(op, k):
    meta = single(3, {(0, 1), (1, 2)}, ops=(op,))
    stats = graphs.arch_stats(meta)
    assert stats.macs == 8 * 8 * 16 * k * k
    assert stats.params == 16 * k * k + 2 * 16


def test_repeats_multiply_stats():
    once = single(3, {(0, 1), (1, 2)}, ops=(OperatorKind.DW3,), repeats=1)
    thrice = single(3, {(0, 1), (1, 2)}, ops=(OperatorKind.DW3,), repeats=3)
    assert graphs.arch_stats(thrice).macs == 3 * graphs.arch_stats(once).macs
    assert graphs.arch_stats(thrice).params == 3 * graphs.arch_stats(once).params


def test_arch_stats_empty_derivation():
    with pytest.raises(EmptyDerivation):
        graphs.arch_stats(single(3, set()))


def test_stats_sum_over_stages():
    c = cell(3, {(0, 1), (1, 2)}, ops=(OperatorKind.DW3,))
    meta = MetaGraph((c, c), (StageConfig(16, 1, 8, 8), StageConfig(16, 1, 8, 8)))
    stats = graphs.arch_stats(meta)
    assert stats.macs == 2 * 9216
    assert stats.active_vertices == (1, 1)


# ---------------------------------------------------------------------------
# budget scaling


def test_scale_to_exact_current_budget_keeps_widths():
    meta = single(3, {(0, 1), (1, 2)}, ops=(OperatorKind.CONV1X1,))
    current = graphs.arch_stats(meta).macs
    mult, scaled = graphs.scale_to_budget(meta, current)
    assert graphs.arch_stats(scaled).macs == current
    assert scaled.stages[0].base_channels == 16


def test_scale_to_quadruple_budget_doubles_width():
    meta = single(3, {(0, 1), (1, 2)}, ops=(OperatorKind.CONV1X1,))
    current = graphs.arch_stats(meta).macs
    mult, scaled = graphs.scale_to_budget(meta, 4 * current)
    assert scaled.stages[0].base_channels == 32
    assert graphs.arch_stats(scaled).macs == 4 * current


def test_scale_below_minimum_width_raises():
    meta = single(3, {(0, 1), (1, 2)}, ops=(OperatorKind.CONV1X1,))
    floor = graphs.arch_stats(
        MetaGraph(meta.cells, (StageConfig(8, 1, 8, 8),))
    ).macs
    with pytest.raises(BudgetTooSmall):
        graphs.scale_to_budget(meta, floor - 1)
    with pytest.raises(BudgetTooSmall):
        graphs.scale_to_budget(meta, 0)


def test_scale_result_is_tight():
    meta = single(3, {(0, 1), (1, 2)}, ops=(OperatorKind.CONV1X1,))
    target = 10 * graphs.arch_stats(meta).macs
    mult, scaled = graphs.scale_to_budget(meta, target)
    assert graphs.arch_stats(scaled).macs <= target
    bumped = MetaGraph(
        scaled.cells,
        tuple(
            StageConfig(s.base_channels + 8, s.repeats, s.height, s.width)
            for s in scaled.stages
        ),
    )
    assert graphs.arch_stats(bumped).macs > target


def test_scale_with_resolution_override():
    meta = single(3, {(0, 1), (1, 2)}, ops=(OperatorKind.CONV1X1,))
    _, scaled = graphs.scale_to_budget(meta, 10**7, resolution=(16, 16))
    assert scaled.stages[0].height == 16
    assert graphs.arch_stats(scaled).macs <= 10**7


# ---------------------------------------------------------------------------
# encoding


def test_preset_encode_dimension():
    template = preset_space("imagenet")
    assert template.encode_dim == 612
    meta = sampling.sample_meta(template, np.random.default_rng(0))
    assert graphs.encode(meta).shape == (612,)


def test_cifar_encode_dimension():
    assert preset_space("cifar10").encode_dim == 459


def test_encode_empty_edges_is_zero_vector():
    meta = single(5, set())
    vec = graphs.encode(meta)
    assert vec.shape == (10,)
    assert not vec.any()


def test_encode_first_slot_is_edge_zero_one():
    template = preset_space("imagenet")
    edge_sets = [set() for _ in template.cells]
    edge_sets[0] = {(0, 1)}
    vec = graphs.encode(template.meta_from_edges(edge_sets))
    assert vec[0] == 1.0
    assert vec.sum() == 1.0


def test_decode_rejects_wrong_dimension():
    with pytest.raises(DimensionMismatch):
        graphs.decode(preset_space("imagenet"), np.zeros(11))


@given(st.integers(0, 2**31 - 1))
def test_encode_decode_round_trip(seed):
    template = single_cell_template(7)
    meta = sampling.sample_meta(template, np.random.default_rng(seed))
    assert graphs.decode(template, graphs.encode(meta)) == meta


@given(st.integers(0, 2**31 - 1))
def test_feeder_width_sum_matches_output(seed):
    template = single_cell_template(9)
    meta = sampling.sample_meta(template, np.random.default_rng(seed))
    plan = graphs.infer_channels(meta.cells[0], meta.stages[0])
    assert plan.output_width == sum(plan.out_channels[v] for v in plan.feeders)


@given(st.integers(0, 2**31 - 1))
def test_adding_an_edge_never_shrinks_stats(seed):
    rng = np.random.default_rng(seed)
    template = single_cell_template(7)
    meta = sampling.sample_meta(template, rng)
    c = meta.cells[0]
    absent = [s for s in graphs.edge_slots(7) if s not in c.edges]
    if not absent:
        return
    extra = absent[int(rng.integers(len(absent)))]
    grown = MetaGraph(
        (CellGraph(7, c.ops, c.edges | {extra}),), meta.stages
    )
    before = graphs.arch_stats(meta)
    after = graphs.arch_stats(grown)
    assert after.macs >= before.macs
    assert after.params >= before.params


# ---------------------------------------------------------------------------
# presets


def test_imagenet_preset_shape():
    t = preset_space("imagenet")
    assert len(t.cells) == 4
    assert all(c.num_vertices == 18 for c in t.cells)
    assert [s.base_channels for s in t.stages] == [16, 32, 64, 128]
    assert [(s.height, s.width) for s in t.stages] == [
        (56, 56), (28, 28), (14, 14), (7, 7),
    ]


def test_cifar_preset_shape():
    t = preset_space("cifar10")
    assert len(t.cells) == 3
    assert [s.base_channels for s in t.stages] == [16, 32, 64]
    assert all(s.repeats == 3 for s in t.stages)


def test_preset_operator_assignment():
    ops = preset_space("imagenet").cells[0].ops
    for v in (1, 5, 9, 13):
        assert ops[v - 1] is OperatorKind.CONV1X1
    for v in (2, 6, 10, 14):
        assert ops[v - 1] is OperatorKind.DW3
    for v in (3, 7, 11, 15):
        assert ops[v - 1] is OperatorKind.DW5
    for v in (4, 8, 12, 16):
        assert ops[v - 1] is OperatorKind.DW7


def test_unknown_preset():
    with pytest.raises(UnknownPreset):
        preset_space("foo")


# ---------------------------------------------------------------------------
# serialization


def test_document_round_trip():
    meta = single(4, {(0, 1), (1, 3), (0, 2)})
    assert graphs.from_document(graphs.to_document(meta)) == meta
    assert graphs.loads(graphs.dumps(meta)) == meta


def test_equal_graphs_serialize_identically():
    a = single(4, {(0, 2), (0, 1), (1, 3)})
    b = single(4, {(1, 3), (0, 1), (0, 2)})
    assert graphs.dumps(a) == graphs.dumps(b)


def test_document_field_names():
    doc = graphs.to_document(single(3, {(0, 1), (1, 2)}))
    assert set(doc) == {"version", "stages", "cells"}
    assert set(doc["stages"][0]) == {"base_channels", "repeats", "height", "width"}
    assert set(doc["cells"][0]) == {"num_vertices", "ops", "edges"}
    assert doc["cells"][0]["edges"] == [[0, 1], [1, 2]]


def test_bad_documents_rejected():
    good = graphs.to_document(single(3, {(0, 1), (1, 2)}))
    for mangle in [
        lambda d: d.update(version=99),
        lambda d: d.update(stages=[]),
        lambda d: d["cells"][0].update(ops=["warp"]),
        lambda d: d["cells"][0].update(edges=[[0, 1, 2]]),
        lambda d: d["cells"][0].pop("num_vertices"),
    ]:
        doc = graphs.loads(graphs.dumps(single(3, {(0, 1), (1, 2)})))
        doc = graphs.to_document(doc)
        mangle(doc)
        with pytest.raises(SchemaError):
            graphs.from_document(doc)
    assert graphs.from_document(good)  # the unmangled original still parses


def test_loads_rejects_non_json():
    with pytest.raises(SchemaError):
        graphs.loads("{not json")


# ---------------------------------------------------------------------------
# dot export


def test_dot_export_mentions_active_vertices_only():
    meta = single(4, {(0, 1), (2, 3)})
    dot = graphs.to_dot(meta)
    assert dot.startswith("digraph")
    assert "s0v1" in dot
    assert 's0v2 [label="v2' not in dot  # pruned vertex gets no node
    assert "concat" in dot
