import json
from dataclasses import replace

import numpy as np
import pytest

import services.instance_service as instance_module
from services.instance_service import counts_for
from utils.errors import InstanceError


def test_counts_ell4():
    counts = counts_for(2, [4])
    assert (counts.genus, counts.branch_points, counts.zeros, counts.dim) == (1, 4, 8, 8)


def test_counts_g2_5():
    counts = counts_for(2, [1] * 5)
    assert (counts.genus, counts.branch_points, counts.zeros, counts.dim) == (2, 6, 12, 11)


def test_coefficient_dims_match_dim():
    for orders in ([4], [2, 3], [1] * 5):
        counts = counts_for(2, orders)
        assert sum(counts.coefficient_dims) == counts.dim


def test_builtin_library(instance_service):
    labels = instance_service.builtin_labels()
    for label in ("ell4", "g2-5", "g2-23", "g2-resfree", "n3-smoke"):
        assert label in labels


def test_load_pads_numerators(instance_service):
    spec = instance_service.load("ell4")
    assert [len(N) for N in spec.numerators] == [3, 5]
    assert spec.total_order == 4


def test_unknown_instance(instance_service):
    with pytest.raises(InstanceError) as info:
        instance_service.load("no-such-instance")
    assert "ell4" in str(info.value)


@pytest.mark.parametrize("document,field", [
    ("{not json", "$"),
    (json.dumps({"n": 2, "poles": [], "Q": []}), "label"),
    (json.dumps({"label": "x", "n": 1, "poles": [], "Q": []}), "n"),
    (json.dumps({"label": "x", "n": 2, "poles": [{"x": [0, 0], "k": 0}], "Q": []}), "poles[0].k"),
    ("{\"label\": \"x\", \"n\": 2, \"poles\": [{\"x\": [Infinity, 0], \"k\": 4}], \"Q\": []}", "poles[0].x"),
    ("{\"label\": \"x\", \"n\": 2, \"poles\": [{\"x\": [0, 0], \"k\": 4}], "
     "\"Q\": [{\"ell\": 1, \"numer\": [[NaN, 0]]}]}", "Q[0].numer[0]"),
])
def test_parse_errors_carry_field(instance_service, document, field):
    with pytest.raises(InstanceError) as info:
        instance_service.parse_instance(document)
    assert info.value.field == field


def test_degree_bound(instance_service):
    document = {"label": "x", "n": 2, "poles": [{"x": [0, 0], "k": 3}],
                "Q": [{"ell": 1, "numer": [[1, 0], [1, 0], [1, 0]]}, {"ell": 2, "numer": [[1, 0]]}]}
    with pytest.raises(InstanceError) as info:
        instance_service.parse_instance(json.dumps(document))
    assert "degree bound" in str(info.value)


def test_residue_free_instance(instance_service):
    spec = instance_service.load("g2-resfree")
    residues = instance_service.check_residue_free(spec)
    assert np.max(np.abs(residues)) < 1e-8


def test_residues_sum_to_zero(instance_service):
    residues = instance_service.residues(instance_service.load("g2-23"))
    assert abs(sum(residues)) < 1e-9
    assert max(abs(r) for r in residues) > 1e-6


def test_builtins_are_generic(instance_service):
    for label in ("ell4", "g2-5", "g2-23", "g2-resfree"):
        spec = instance_service.load(label)
        assert instance_service.validate_genericity(spec).passed


def test_inconsistent_dimension_count_raises(monkeypatch, instance_service):
    spec = instance_service.load("ell4")
    monkeypatch.setattr(instance_module, "counts_for",
                        lambda n, orders: replace(counts_for(n, orders), dim=counts_for(n, orders).dim + 1))
    with pytest.raises(InstanceError, match="dimension count"):
        instance_service.derived_counts(spec)
