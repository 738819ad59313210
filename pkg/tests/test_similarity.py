"""Name similarity and candidate generation."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ontomatch.model import Constructor, EntityId, Kind, make_complex, parse_ontology
from ontomatch.rules import parse_rules
from ontomatch.similarity import (complex_sim, generate_candidates,
                                  levenshtein_sim, normalize_name)


def dp_edit_distance(a, b):
    """Quadratic DP oracle, independent of the production implementation."""
    m, n = len(a), len(b)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        table[i][0] = i
    for j in range(n + 1):
        table[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            table[i][j] = min(table[i - 1][j] + 1,
                              table[i][j - 1] + 1,
                              table[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return table[m][n]


def oracle_sim(a, b):
    if not a and not b:
        return 1.0
    return 1.0 - dp_edit_distance(a, b) / max(len(a), len(b))


class TestNormalize:
    @pytest.mark.parametrize("raw,expected", [
        ("writePaper", "writepaper"),
        ("Accepted_Paper", "acceptedpaper"),
        ("hours-per-week", "hoursperweek"),
        ("HTTPServer2x", "httpserver2x"),
        ("  spaced  out ", "spacedout"),
    ])
    def test_examples(self, raw, expected):
        assert normalize_name(raw) == expected


class TestLevenshteinSim:
    def test_identity(self):
        assert levenshtein_sim("height", "height") == 1.0

    def test_empty_vs_nonempty(self):
        assert levenshtein_sim("", "abc") == 0.0

    def test_both_empty(self):
        assert levenshtein_sim("", "") == 1.0

    def test_write_paper_vs_writes(self):
        # frozen from the DP oracle on normalized forms:
        # d("writepaper", "writes") = 5, max len 10
        assert dp_edit_distance("writepaper", "writes") == 5
        assert levenshtein_sim("writePaper", "writes") == 0.5

    @pytest.mark.parametrize("a,b", [
        ("readPaper", "reviews"), ("paperDueOn", "submissionDeadline"),
        ("grad_student", "masters"), ("center", "Center"), ("x", "yyyy")])
    def test_matches_oracle(self, a, b):
        assert levenshtein_sim(a, b) == pytest.approx(
            oracle_sim(normalize_name(a), normalize_name(b)), abs=1e-12)

    @given(st.text(max_size=12), st.text(max_size=12))
    def test_symmetric_and_bounded(self, a, b):
        s = levenshtein_sim(a, b)
        assert 0.0 <= s <= 1.0
        assert s == levenshtein_sim(b, a)

    @given(st.text(max_size=12))
    def test_reflexive(self, a):
        assert levenshtein_sim(a, a) == 1.0


class TestComplexSim:
    def e(self, name, kind=Kind.CLASS):
        return EntityId("O2", name, kind)

    def test_exists_uses_filler(self):
        concept = make_complex(Constructor.EXISTS,
                               (self.e("hasDecision", Kind.OBJECT_PROPERTY),
                                self.e("Acceptance")))
        got = complex_sim(EntityId("O1", "Accepted_Paper", Kind.CLASS), concept)
        assert got == levenshtein_sim("Accepted_Paper", "Acceptance")
        assert got == pytest.approx(oracle_sim("acceptedpaper", "acceptance"), abs=1e-12)

    def test_complement_falls_back_to_zero(self):
        concept = make_complex(Constructor.COMPLEMENT, (self.e("Y"),))
        assert complex_sim(EntityId("O1", "X", Kind.CLASS), concept) == 0.0

    def test_union_takes_best_component(self):
        concept = make_complex(Constructor.UNION, (self.e("PhD"), self.e("Masters")))
        got = complex_sim(EntityId("O1", "grad_student", Kind.CLASS), concept)
        expected = max(oracle_sim("gradstudent", "phd"), oracle_sim("gradstudent", "masters"))
        assert got == pytest.approx(expected, abs=1e-12)

    def test_property_constructors_fall_back_to_zero(self):
        p = self.e("contributes", Kind.OBJECT_PROPERTY)
        q = self.e("reviews", Kind.OBJECT_PROPERTY)
        assert complex_sim(EntityId("O1", "readPaper", Kind.OBJECT_PROPERTY),
                           make_complex(Constructor.COMPOSE, (p, q))) == 0.0


def onto(tag, **kwargs):
    doc = {"tag": tag, "classes": [], "object_properties": [],
           "data_properties": [], "axioms": []}
    doc.update(kwargs)
    return parse_ontology(json.dumps(doc))


class TestGenerateCandidates:
    def test_tau_zero_gives_all_compatible_pairs(self):
        o1 = onto("O1", classes=["A", "B"], object_properties=["p"])
        o2 = onto("O2", classes=["C"], object_properties=["q"])
        pairs = {c.key for c in generate_candidates(o1, o2, 0.0)}
        assert pairs == {("A", "C"), ("B", "C"), ("p", "q")}

    def test_high_tau_keeps_exact_names_only(self):
        # pairwise similarity table oracle over distinct names
        names1, names2 = ["alpha", "beta", "gamma"], ["alpha", "delta", "omega"]
        o1, o2 = onto("O1", classes=names1), onto("O2", classes=names2)
        table = {(a, b): oracle_sim(a, b) for a in names1 for b in names2}
        expected = {k for k, v in table.items() if v > 0.99}
        got = {c.key for c in generate_candidates(o1, o2, 0.99)}
        assert got == expected == {("alpha", "alpha")}

    def test_rule_participants_bypass_tau_with_sim_recorded(self):
        o1 = onto("O1", data_properties=[{"name": "h", "range_min": 60, "range_max": 90},
                                         {"name": "other", "range_min": 0, "range_max": 1}])
        o2 = onto("O2", data_properties=[{"name": "height", "range_min": 1.5, "range_max": 2.3}])
        rules1 = parse_rules(json.dumps(
            {"pattern": "precedes", "args": ["h", "other"]}), o1)
        cands = generate_candidates(o1, o2, 0.7, rules1, None)
        sims = {c.key: c.sim for c in cands}
        assert ("h", "height") in sims
        assert sims[("h", "height")] == pytest.approx(oracle_sim("h", "height"), abs=1e-12)
        assert sims[("h", "height")] < 0.7

    def test_monotone_in_tau(self):
        o1 = onto("O1", classes=["alpha", "alpah", "beta"])
        o2 = onto("O2", classes=["alpha", "betta"])
        previous = None
        for tau in (0.0, 0.3, 0.6, 0.9):
            keys = {c.key for c in generate_candidates(o1, o2, tau)}
            if previous is not None:
                assert keys <= previous
            previous = keys

    def test_kinds_never_mix(self):
        o1 = onto("O1", classes=["x"], object_properties=["x2"],
                  data_properties=[{"name": "x3", "nominal_values": ["v"]}])
        o2 = onto("O2", classes=["x"], object_properties=["x2"],
                  data_properties=[{"name": "x3", "nominal_values": ["v"]}])
        for c in generate_candidates(o1, o2, 0.0):
            assert o1.effective_kind(c.e1) is o2.effective_kind(c.e2)

    def test_use_name_sim_false_keeps_only_rule_pairs(self):
        o1 = onto("O1", data_properties=[{"name": "h", "range_min": 0, "range_max": 9},
                                         {"name": "w", "range_min": 0, "range_max": 9}])
        o2 = onto("O2", data_properties=[{"name": "h", "range_min": 0, "range_max": 9},
                                         {"name": "unrelated", "range_min": 0, "range_max": 9}])
        rules1 = parse_rules(json.dumps({"pattern": "precedes", "args": ["h", "w"]}), o1)
        cands = generate_candidates(o1, o2, 0.7, rules1, None, use_name_sim=False)
        assert all(c.sim == 0.0 for c in cands)
        assert {c.key for c in cands} == {("h", "h"), ("h", "unrelated"),
                                          ("w", "h"), ("w", "unrelated")}

    def test_same_constructor_complex_pairs_become_candidates(self):
        o1 = onto("O1", classes=["A", "B"],
                  axioms=[{"kind": "SubClassOf",
                           "args": ["A", {"op": "union", "args": ["A", "B"]}]}])
        o2 = onto("O2", classes=["A", "B2"],
                  axioms=[{"kind": "SubClassOf",
                           "args": ["A", {"op": "union", "args": ["A", "B2"]}]}])
        keys = {c.key for c in generate_candidates(o1, o2, 0.0)}
        assert ("union(A,B)", "union(A,B2)") in keys
        complex_pair = [c for c in generate_candidates(o1, o2, 0.0)
                        if c.key == ("union(A,B)", "union(A,B2)")][0]
        assert complex_pair.kind == "complex"
