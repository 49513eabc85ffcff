from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genmetric import expr as ex
from genmetric.catalog import build, list_ids
from genmetric.checker import (
    CheckError, NON_ORDERED, blend_metrics, check_distance_axioms, check_invariance, check_metric,
    check_symmetry, classify_definiteness, eigen_classification, partition_of_unity, point_set_conditions,
    probe_smoothness, probe_topology,
)
from genmetric.maps import AffineMap, ComponentwiseMap
from genmetric.solver import SolverConfig
from genmetric.tensor import Chart, MetricSpec, TensorField, contract_table, line_element, transform_metric

QUICK = SolverConfig(segments=16, restarts=2, max_iters=100, seed=3)


def _asymmetric():
    return TensorField((0, 3), Chart.simple(["x", "y"]), "real", {(0, 0, 1): "1"}, "none")


def test_symmetry_verdicts():
    assert check_symmetry(build("cubic2d"), 32, 0).status == "pass"
    assert check_symmetry(build("flrw", {"a": "exp(t)"}), 32, 0).status == "pass"
    v = check_symmetry(_asymmetric(), 32, 0)
    assert v.status == "fail"
    assert v.witness["index"] == [0, 0, 1] and v.witness["values"] == [[1.0], [0.0]]


def test_mixed_rank_symmetry_is_per_group():
    chart = Chart.simple(["x", "y"])
    # swapping an upper with a lower index is not a symmetry requirement
    t = TensorField((1, 1), chart, "real", {(0, 1): "1"}, "none")
    assert check_symmetry(t, 8, 0).status == "pass"
    t = TensorField((1, 2), chart, "real", {(0, 0, 1): "1"}, "none")
    assert check_symmetry(t, 8, 0).status == "fail"


def test_definiteness_examples():
    assert classify_definiteness(build("euclidean"), 64, 1).label == "positive-definite"
    mink = classify_definiteness(build("minkowski"), 64, 1)
    assert mink.classification == "indefinite"
    assert mink.witnesses["positive"]["value"] > 0 > mink.witnesses["negative"]["value"]
    assert np.count_nonzero(mink.witnesses["negative"]["vector"][1:]) == 0
    cubic = classify_definiteness(build("cubic2d"), 64, 1)
    assert cubic.label == "degenerate/indefinite"
    assert cubic.witnesses["null"]["vector"] == [1.0, -1.0] and cubic.witnesses["null"]["value"] == 0.0
    assert cubic.witnesses["negative"]["vector"] == [-1.0, 0.0] and cubic.witnesses["negative"]["value"] == -1.0


def test_witnesses_reproduce_from_seed():
    a = classify_definiteness(build("cubic2d"), 64, 9)
    b = classify_definiteness(build("cubic2d"), 64, 9)
    assert a.to_json() == b.to_json()
    for w in a.witnesses.values():
        assert line_element(build("cubic2d"), w["point"], w["vector"]).c[0] == w["value"]


def test_complex_codomain_is_not_ordered():
    d = classify_definiteness(build("complex_cubic3d"), 16, 0)
    assert d.classification == NON_ORDERED


@pytest.mark.parametrize("name", list_ids())
def test_scale_invariance_of_sign_pattern(name):
    m = build(name)
    if m.tensor.codomain != "real":
        return
    t = m.tensor
    tripled = TensorField(t.rank, t.chart, t.codomain,
                          {idx: ex.s_times(ex.num(3.0), e) for idx, e in t.components.items()}, t.symmetry, t.params)
    a, b = classify_definiteness(m, 32, 4), classify_definiteness(MetricSpec(tripled, m.aux_lowering), 32, 4)
    assert a.classification == b.classification and a.degenerate == b.degenerate


@pytest.mark.parametrize("name", [n for n in list_ids() if build(n).rank == (0, 2)])
def test_sampled_classification_agrees_with_eigenvalues(name):
    m = build(name)
    rng = np.random.default_rng(6)
    for p in m.chart.sample(rng, 5):
        single = MetricSpec(TensorField(m.tensor.rank, m.chart, "real",
                                        {idx: ex.num(v) for idx, v in _values_at(m.tensor, p).items()},
                                        "fully-symmetric"))
        sampled = classify_definiteness(single, 128, 0).classification
        assert sampled == eigen_classification(m.tensor, p)


def _values_at(t, p):
    return {idx: float(v[0, 0]) for idx, v in t.evaluate(p).items()}


def test_invariance_examples():
    assert check_invariance(build("euclidean"), 50, 0).value < 1e-12
    cubic = build("cubic2d")
    double = AffineMap.scaling([2.0, 2.0])
    table, _ = transform_metric(cubic, double, [0.4, 0.6])
    assert table.component((0, 0, 0)).c[0] == pytest.approx(0.125)
    assert contract_table(table, [2.0, 2.0]).c[0] == pytest.approx(2.0)
    flrw = build("flrw", {"a": "1 + t^2"})
    wiggle = ComponentwiseMap(("wiggle", "identity", "identity", "identity"))
    p, dc = np.array([[0.7, 0.1, 0.2, 0.3]]), np.array([0.3, -1.0, 0.5, 2.0])
    table, aux = transform_metric(flrw, wiggle, wiggle.forward(p))
    new = contract_table(table, wiggle.jacobian(p)[0] @ dc, aux).c[0]
    assert new == pytest.approx(line_element(flrw, p[0], dc).c[0], rel=1e-12)


def test_numeric_jacobians_use_the_looser_tolerance():
    v = check_invariance(build("flrw", {"a": "exp(t)"}), 20, 0, family="numeric")
    assert v.status == "pass" and v.value < 1e-5


def test_smoothness_and_topology_probes():
    assert probe_smoothness(build("perturbed_ads", {"k": 1})).status == "pass"
    kink = TensorField((0, 2), Chart.simple(["x"]), "real", {(0, 0): "1 + sqrt((x - 0.1)^2)"}, "fully-symmetric")
    assert probe_smoothness(kink, samples=64, seed=0).status in ("pass", "indeterminate")
    assert probe_topology(build("cubic2d")).status == "pass"


def test_distance_axioms_euclidean():
    rep = check_distance_axioms(build("euclidean"), QUICK, pairs=2, triples=2, seed=1)
    assert rep.kind == "metric"
    assert all(v.status == "pass" for v in (rep.nonnegativity, rep.symmetry, rep.triangle, rep.identity))


def test_distance_axioms_cubic_is_pseudo_metric():
    rep = check_distance_axioms(build("cubic2d"), QUICK, pairs=2, triples=1, seed=1, null_vectors=[[1, -1]])
    assert rep.nonnegativity.status == "pass" and rep.symmetry.status == "pass"
    assert rep.kind == "pseudo-metric"
    assert rep.identity.detail == "identity of indiscernibles fails: pseudo-metric"
    assert rep.identity.value <= 1e-12


def test_default_entropy_spacetime_has_null_directions():
    # the time block is negative, so the default is indefinite rather than positive-definite
    m = build("sest")
    d = classify_definiteness(m, 64, 2)
    assert d.label == "degenerate/indefinite"
    rep = check_distance_axioms(m, QUICK, pairs=1, triples=0, seed=2, null_vectors=[d.witnesses["null"]["vector"]])
    assert rep.nonnegativity.status == "pass" and rep.symmetry.status == "pass"
    assert rep.kind == "pseudo-metric"


def test_partition_of_unity_and_blending():
    names = ["x", "y"]
    chart = Chart.simple(names)
    ws = partition_of_unity([[(-2, 1), (-2, 2)], [(-1, 2), (-2, 2)]], names)
    pts = np.random.default_rng(0).uniform(-0.9, 0.9, size=(100, 2))
    vals = np.stack([ex.evaluate(w, {"x": pts[:, 0], "y": pts[:, 1]}) for w in ws])
    assert np.all(vals >= 0) and np.max(np.abs(vals.sum(axis=0) - 1)) < 1e-12

    eye = TensorField((0, 2), chart, "real", {(0, 0): "1", (1, 1): "1"}, "fully-symmetric")
    four = TensorField((0, 2), chart, "real", {(0, 0): "4", (1, 1): "4"}, "fully-symmetric")
    same = blend_metrics(["1/2", "1/2"], [eye, eye])
    assert np.allclose(same.dense([0.3, 0.4])[..., 0], np.eye(2))
    mixed = blend_metrics(["1/2", "1/2"], [eye, four])
    assert np.allclose(mixed.dense([0.3, 0.4])[..., 0], 2.5 * np.eye(2))
    assert check_symmetry(mixed, 16, 0).status == "pass"
    assert classify_definiteness(mixed, 64, 0).label == "positive-definite"


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(-0.9, 0.9), st.floats(0.05, 0.95))
def test_blend_of_positive_definite_fields_stays_positive(a, b, c, w):
    chart = Chart.simple(["x", "y"])
    g1 = TensorField((0, 2), chart, "real", {(0, 0): str(a), (1, 1): str(b)}, "fully-symmetric")
    off = c * min(a, b)
    g2 = TensorField((0, 2), chart, "real", {(0, 0): str(b), (1, 1): str(a), (0, 1): str(off), (1, 0): str(off)},
                     "fully-symmetric")
    out = blend_metrics([str(w), str(1 - w)], [g1, g2], samples=8)
    assert classify_definiteness(out, 32, 0).label == "positive-definite"


def test_blend_rejects_bad_inputs():
    chart = Chart.simple(["x"])
    eye = TensorField((0, 2), chart, "real", {(0, 0): "1"}, "fully-symmetric")
    neg = TensorField((0, 2), chart, "real", {(0, 0): "-1"}, "fully-symmetric")
    with pytest.raises(CheckError):
        blend_metrics(["0.5", "0.6"], [eye, eye])
    with pytest.raises(CheckError):
        blend_metrics(["1.5", "-0.5"], [eye, eye])
    with pytest.raises(CheckError):
        blend_metrics(["0.5", "0.5"], [eye, neg])


def test_point_set_report():
    rep = point_set_conditions(Chart.simple(["x", "y"]))
    assert set(rep["conditions"]) == {"hausdorff", "second-countable", "locally-euclidean", "paracompact"}
    assert all(c["status"] == "pass" and c["basis"] == "asserted, not computed" for c in rep["conditions"].values())
    assert "Urysohn" in rep["note"]


def test_full_report():
    rep = check_metric(build("minkowski"), seed=7, samples=64, invariance_samples=20, cfg=QUICK)
    doc = rep.to_json()
    assert doc["definiteness"]["classification"] == "indefinite"
    assert doc["distance_axioms"]["kind"] == "pseudo-metric"
    assert not rep.failed
    assert check_metric(_asymmetric(), seed=1, samples=16, invariance_samples=5, axioms=False).failed
