"""Ontology model: parsing, canonical complex ids, saturation closure."""

import json
import random

import pytest

from ontomatch.errors import InconsistencyError, InputParseError, ValidationError
from ontomatch.model import (Axiom, AxiomKind, Constructor, EntityId, Kind,
                             enumerate_complex_concepts, make_complex,
                             parse_ontology, saturate, serialize_ontology)
from ontomatch.rules import parse_rules


def onto_json(**kwargs):
    doc = {"tag": "O1", "classes": [], "object_properties": [],
           "data_properties": [], "axioms": []}
    doc.update(kwargs)
    return json.dumps(doc)


class TestParse:
    def test_basic_declarations(self):
        o = parse_ontology(onto_json(
            classes=["Paper", "Person"],
            object_properties=["writePaper"],
            axioms=[{"kind": "Domain", "args": ["writePaper", "Person"]},
                    {"kind": "Range", "args": ["writePaper", "Paper"]}]))
        assert len(o.entities) == 3
        assert len(o.axioms) == 2
        assert o.entities["writePaper"].kind is Kind.OBJECT_PROPERTY

    def test_unknown_entity_in_axiom(self):
        with pytest.raises(ValidationError, match="ghost"):
            parse_ontology(onto_json(
                classes=["A"],
                axioms=[{"kind": "SubClassOf", "args": ["A", "ghost"]}]))

    def test_union_gets_canonical_sorted_id(self):
        # oracle for canonicalization: sort component names, join with commas
        o = parse_ontology(onto_json(
            classes=["grad_student", "PhD", "Masters"],
            axioms=[{"kind": "SubClassOf",
                     "args": ["grad_student", {"op": "union", "args": ["PhD", "Masters"]}]}]))
        assert sorted(o.complex_concepts) == ["union(Masters,PhD)"]

    def test_commutative_order_irrelevant(self):
        a = parse_ontology(onto_json(
            classes=["A", "B"],
            axioms=[{"kind": "SubClassOf", "args": ["A", {"op": "union", "args": ["A", "B"]}]}]))
        b = parse_ontology(onto_json(
            classes=["A", "B"],
            axioms=[{"kind": "SubClassOf", "args": ["A", {"op": "union", "args": ["B", "A"]}]}]))
        assert set(a.complex_concepts) == set(b.complex_concepts)

    def test_duplicate_entity_rejected(self):
        with pytest.raises(ValidationError, match="duplicate"):
            parse_ontology(onto_json(classes=["A", "A"]))

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ValidationError, match="unknown top-level"):
            parse_ontology(json.dumps({"tag": "O1", "classy": []}))

    def test_syntax_error_reports_position(self):
        with pytest.raises(InputParseError) as err:
            parse_ontology("{\n  broken")
        assert err.value.line == 2

    def test_nominal_values_owned_and_qualified(self):
        o = parse_ontology(onto_json(
            data_properties=[{"name": "pos", "nominal_values": ["Center", "Guard"]}]))
        e = o.entities["pos=Center"]
        assert e.kind is Kind.NOMINAL_VALUE
        assert e.owner == "pos"
        assert e.value_token == "Center"

    def test_constructor_arity_violation(self):
        with pytest.raises(ValidationError, match="components"):
            parse_ontology(onto_json(
                classes=["A"],
                axioms=[{"kind": "SubClassOf",
                         "args": ["A", {"op": "complement", "args": ["A", "A"]}]}]))

    def test_constructor_kind_violation(self):
        # compose needs two object properties, not classes
        with pytest.raises(ValidationError, match="kind"):
            parse_ontology(onto_json(
                classes=["A", "B"], object_properties=["p"],
                axioms=[{"kind": "SubPropertyOf",
                         "args": [{"op": "compose", "args": ["A", "B"]}, "p"]}]))

    def test_numeric_range_must_be_ordered(self):
        with pytest.raises(ValidationError, match="min < max"):
            parse_ontology(onto_json(
                data_properties=[{"name": "h", "range_min": 5, "range_max": 5}]))

    def test_roundtrip_parse_serialize(self):
        o = parse_ontology(onto_json(
            classes=["Person", "Paper", "Reviewed"],
            object_properties=["writePaper", "contributes", "reviews"],
            data_properties=[{"name": "age", "range_min": 0, "range_max": 120},
                             {"name": "pos", "nominal_values": ["C", "F"]}],
            axioms=[
                {"kind": "Domain", "args": ["writePaper", "Person"]},
                {"kind": "DisjointProperties",
                 "args": [{"op": "restrict_range", "args": ["contributes", "Reviewed"]},
                          {"op": "compose", "args": ["contributes", "reviews"]}]},
            ]))
        assert parse_ontology(serialize_ontology(o)) == o


class TestSaturate:
    def tag(self, name):
        return EntityId("O1", name, Kind.CLASS)

    def onto(self, classes, axioms):
        return parse_ontology(onto_json(classes=classes, axioms=axioms))

    def test_subclass_transitivity(self):
        o = saturate(self.onto(["A", "B", "C"], [
            {"kind": "SubClassOf", "args": ["A", "B"]},
            {"kind": "SubClassOf", "args": ["B", "C"]}]))
        assert Axiom(AxiomKind.SUBCLASS_OF, (self.tag("A"), self.tag("C"))) in o.axioms

    def test_disjoint_propagation_and_symmetry(self):
        o = saturate(self.onto(["A", "B", "C"], [
            {"kind": "SubClassOf", "args": ["A", "B"]},
            {"kind": "DisjointClasses", "args": ["B", "C"]}]))
        assert Axiom(AxiomKind.DISJOINT_CLASSES, (self.tag("A"), self.tag("C"))) in o.axioms
        assert Axiom(AxiomKind.DISJOINT_CLASSES, (self.tag("C"), self.tag("A"))) in o.axioms

    def test_inconsistency_names_culprit(self):
        with pytest.raises(InconsistencyError) as err:
            saturate(self.onto(["A", "B", "C"], [
                {"kind": "SubClassOf", "args": ["A", "B"]},
                {"kind": "SubClassOf", "args": ["A", "C"]},
                {"kind": "DisjointClasses", "args": ["B", "C"]}]))
        assert err.value.entity_name == "A"
        assert len(err.value.chain) >= 2

    def test_domain_range_inheritance(self):
        o = parse_ontology(onto_json(
            classes=["Person", "Paper"],
            object_properties=["relates", "writes"],
            axioms=[{"kind": "SubPropertyOf", "args": ["writes", "relates"]},
                    {"kind": "Domain", "args": ["relates", "Person"]},
                    {"kind": "Range", "args": ["relates", "Paper"]}]))
        o = saturate(o)
        writes = o.entities["writes"]
        assert Axiom(AxiomKind.DOMAIN, (writes, self.tag("Person"))) in o.axioms
        assert Axiom(AxiomKind.RANGE, (writes, self.tag("Paper"))) in o.axioms

    def test_monotone_and_idempotent(self):
        o = self.onto(["A", "B", "C", "D"], [
            {"kind": "SubClassOf", "args": ["A", "B"]},
            {"kind": "SubClassOf", "args": ["B", "C"]},
            {"kind": "DisjointClasses", "args": ["C", "D"]}])
        s1 = saturate(o)
        assert s1.axioms >= o.axioms
        assert saturate(s1) == s1


def closure_oracle(n_entities, sub_edges, disjoint_edges):
    """Fixpoint closure over adjacency sets, written independently of the
    production code: plain pair-set iteration until nothing changes."""
    subs = set(sub_edges)
    dis = set(disjoint_edges)
    while True:
        new_subs = {(a, c) for (a, b) in subs for (b2, c) in subs if b == b2 and a != c}
        new_dis = {(b, a) for (a, b) in dis}
        new_dis |= {(a, c) for (a, b) in subs for (b2, c) in dis if b == b2}
        if new_subs <= subs and new_dis <= dis:
            return subs, dis
        subs |= new_subs
        dis |= new_dis


class TestSaturateAgainstOracle:
    @pytest.mark.parametrize("seed", range(40))
    def test_random_class_graphs(self, seed):
        rng = random.Random(seed)
        n = rng.randint(2, 8)
        names = [f"C{i}" for i in range(n)]
        subs, diss = set(), set()
        for _ in range(rng.randint(0, 10)):
            a, b = rng.sample(range(n), 2)
            if rng.random() < 0.7:
                subs.add((a, b))
            else:
                diss.add((a, b))
        oracle_subs, oracle_dis = closure_oracle(n, subs, diss)
        inconsistent = any(a == b for a, b in oracle_dis)

        axioms = ([{"kind": "SubClassOf", "args": [names[a], names[b]]} for a, b in sorted(subs)]
                  + [{"kind": "DisjointClasses", "args": [names[a], names[b]]}
                     for a, b in sorted(diss)])
        o = parse_ontology(onto_json(classes=names, axioms=axioms))
        if inconsistent:
            with pytest.raises(InconsistencyError):
                saturate(o)
            return
        got = saturate(o)
        got_subs = {(int(ax.args[0].local_name[1:]), int(ax.args[1].local_name[1:]))
                    for ax in got.axioms if ax.kind is AxiomKind.SUBCLASS_OF}
        got_dis = {(int(ax.args[0].local_name[1:]), int(ax.args[1].local_name[1:]))
                   for ax in got.axioms if ax.kind is AxiomKind.DISJOINT_CLASSES}
        assert got_subs == oracle_subs
        assert got_dis == oracle_dis


class TestEnumerateComplex:
    def test_axiom_complexes_are_found(self):
        o = parse_ontology(onto_json(
            classes=["Reviewed"],
            object_properties=["contributes", "reviews"],
            axioms=[{"kind": "DisjointProperties",
                     "args": [{"op": "restrict_range", "args": ["contributes", "Reviewed"]},
                              {"op": "compose", "args": ["contributes", "reviews"]}]}]))
        names = {c.canonical_name for c in enumerate_complex_concepts(o, None)}
        assert names == {"restrict_range(contributes,Reviewed)",
                         "compose(contributes,reviews)"}

    def test_no_complexes_gives_empty_set(self):
        o = parse_ontology(onto_json(classes=["A"]))
        assert enumerate_complex_concepts(o, None) == set()

    def test_rule_arguments_count_as_sources(self):
        o = parse_ontology(onto_json(
            classes=["Acceptance", "Accepted_Paper"],
            object_properties=["hasDecision", "other"],
            axioms=[]))
        rules = parse_rules(json.dumps({
            "pattern": "disjoint_props",
            "args": [{"op": "restrict_range", "args": ["hasDecision", "Acceptance"]}, "other"],
        }), o)
        # scan oracle: walk the rule arg list for constructor expressions
        names = {c.canonical_name for c in enumerate_complex_concepts(o, rules)}
        assert names == {"restrict_range(hasDecision,Acceptance)"}

    def test_derived_id_equality_is_structural(self):
        a = EntityId("O1", "A", Kind.CLASS)
        b = EntityId("O1", "B", Kind.CLASS)
        u1 = make_complex(Constructor.UNION, (a, b))
        u2 = make_complex(Constructor.UNION, (b, a))
        assert u1 == u2
        assert u1.derived_id("O1") == u2.derived_id("O1")
        inter = make_complex(Constructor.INTERSECTION, (a, b))
        assert inter.derived_id("O1") != u1.derived_id("O1")
