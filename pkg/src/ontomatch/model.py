"""Ontology model: entities, complex concepts, axioms, parsing, and axiom closure.

An ontology here is one side of a matching task: a set of named entities
(classes, object/data properties, nominal values), a set of constructor-built
complex concepts, and the axioms the matcher consumes (subsumption,
disjointness, domain, range). Everything is an immutable value; operations
return new ontologies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import InconsistencyError, InputParseError, ValidationError


class Kind(str, Enum):
    CLASS = "Class"
    OBJECT_PROPERTY = "ObjectProperty"
    DATA_PROPERTY = "DataProperty"
    NOMINAL_VALUE = "NominalValue"
    COMPLEX = "Complex"


class Constructor(str, Enum):
    INTERSECTION = "intersection"
    UNION = "union"
    COMPLEMENT = "complement"
    EXISTS = "exists"            # exists(property, filler class)
    COMPOSE = "compose"          # compose(property, property)
    RESTRICT_RANGE = "restrict_range"  # restrict_range(property, class)


# Constructors whose component order is irrelevant; components are kept sorted.
COMMUTATIVE = frozenset({Constructor.INTERSECTION, Constructor.UNION})

# Result kind of each constructor: class-like or (object-)property-like.
_CLASS_LIKE = frozenset({
    Constructor.INTERSECTION, Constructor.UNION,
    Constructor.COMPLEMENT, Constructor.EXISTS,
})


class AxiomKind(str, Enum):
    SUBCLASS_OF = "SubClassOf"
    DISJOINT_CLASSES = "DisjointClasses"
    SUBPROPERTY_OF = "SubPropertyOf"
    DISJOINT_PROPERTIES = "DisjointProperties"
    DOMAIN = "Domain"
    RANGE = "Range"


@dataclass(frozen=True, order=True)
class EntityId:
    """A named entity of one ontology.

    ``owner`` is set only for nominal values and names the data property the
    value belongs to. Nominal local names are qualified as ``property=value``
    so that names stay unique within an ontology.
    """

    ontology_tag: str
    local_name: str
    kind: Kind = field(compare=False)
    owner: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.local_name:
            raise ValidationError("entity local name must be nonempty")
        if any(ch.isspace() for ch in self.local_name):
            raise ValidationError(f"entity name may not contain whitespace: {self.local_name!r}")
        if self.kind is Kind.NOMINAL_VALUE and not self.owner:
            raise ValidationError(f"nominal value {self.local_name!r} needs an owning data property")

    @property
    def value_token(self) -> str:
        """For nominal values, the bare value without the owner prefix."""
        if self.kind is Kind.NOMINAL_VALUE and "=" in self.local_name:
            return self.local_name.split("=", 1)[1]
        return self.local_name

    def __repr__(self):
        return f"{self.ontology_tag}:{self.local_name}"


@dataclass(frozen=True)
class ComplexConcept:
    """A constructor-built concept, identified by its canonical serialization.

    Commutative constructors store components sorted by name, so structurally
    equal concepts always share one derived id.
    """

    constructor: Constructor
    components: tuple[EntityId, ...]

    ARITY = {
        Constructor.COMPLEMENT: (1, 1),
        Constructor.EXISTS: (2, 2),
        Constructor.COMPOSE: (2, 2),
        Constructor.RESTRICT_RANGE: (2, 2),
        Constructor.INTERSECTION: (2, None),
        Constructor.UNION: (2, None),
    }

    def __post_init__(self):
        lo, hi = self.ARITY[self.constructor]
        n = len(self.components)
        if n < lo or (hi is not None and n > hi):
            raise ValidationError(
                f"{self.constructor.value} takes {lo}{'+' if hi is None else ''} components, got {n}"
            )
        if self.constructor in COMMUTATIVE:
            names = [c.local_name for c in self.components]
            if names != sorted(names):
                raise ValidationError("commutative components must be pre-sorted; use make_complex()")

    @property
    def canonical_name(self) -> str:
        return f"{self.constructor.value}({','.join(c.local_name for c in self.components)})"

    @property
    def result_kind(self) -> Kind:
        """Kind of entity this concept can stand in for: class or object property."""
        return Kind.CLASS if self.constructor in _CLASS_LIKE else Kind.OBJECT_PROPERTY

    def derived_id(self, tag: str) -> EntityId:
        return EntityId(tag, self.canonical_name, Kind.COMPLEX)


def make_complex(constructor: Constructor, components: Iterable[EntityId]) -> ComplexConcept:
    """Build a complex concept, canonicalizing component order and checking
    component kinds against the constructor signature."""
    comps = list(components)
    if constructor in COMMUTATIVE:
        comps.sort(key=lambda c: c.local_name)
    concept = ComplexConcept(constructor, tuple(comps))
    _check_component_kinds(concept)
    return concept


def _effective_kind(entity: EntityId, complexes: Mapping[str, ComplexConcept] | None = None) -> Kind:
    if entity.kind is not Kind.COMPLEX:
        return entity.kind
    if complexes is not None and entity.local_name in complexes:
        return complexes[entity.local_name].result_kind
    # Canonical names are self-describing, so the constructor can be recovered.
    ctor = Constructor(entity.local_name.split("(", 1)[0])
    return Kind.CLASS if ctor in _CLASS_LIKE else Kind.OBJECT_PROPERTY


def _check_component_kinds(concept: ComplexConcept):
    kinds = [_effective_kind(c) for c in concept.components]
    ctor = concept.constructor
    if ctor in (Constructor.INTERSECTION, Constructor.UNION, Constructor.COMPLEMENT):
        bad = [c for c, k in zip(concept.components, kinds) if k is not Kind.CLASS]
    elif ctor is Constructor.COMPOSE:
        bad = [c for c, k in zip(concept.components, kinds) if k is not Kind.OBJECT_PROPERTY]
    else:  # exists / restrict_range: (property, class)
        bad = []
        if kinds[0] is not Kind.OBJECT_PROPERTY:
            bad.append(concept.components[0])
        if kinds[1] is not Kind.CLASS:
            bad.append(concept.components[1])
    if bad:
        raise ValidationError(
            f"component kind mismatch for {ctor.value}: {', '.join(repr(b) for b in bad)}"
        )


@dataclass(frozen=True, order=True)
class Axiom:
    kind: AxiomKind
    args: tuple[EntityId, EntityId]

    def __repr__(self):
        return f"{self.kind.value}({self.args[0].local_name}, {self.args[1].local_name})"


_CLASSY = (Kind.CLASS,)
_PROPPY = (Kind.OBJECT_PROPERTY, Kind.DATA_PROPERTY)

# Expected effective kinds per axiom argument.
_AXIOM_SIGNATURE = {
    AxiomKind.SUBCLASS_OF: (_CLASSY, _CLASSY),
    AxiomKind.DISJOINT_CLASSES: (_CLASSY, _CLASSY),
    AxiomKind.SUBPROPERTY_OF: (_PROPPY, _PROPPY),
    AxiomKind.DISJOINT_PROPERTIES: (_PROPPY, _PROPPY),
    AxiomKind.DOMAIN: (_PROPPY, _CLASSY),
    AxiomKind.RANGE: (_PROPPY, _CLASSY),
}


class Ontology:
    """One side of a matching task. Treat instances as immutable."""

    def __init__(self, tag, entities, complex_concepts, axioms, numeric_stats):
        self.tag: str = tag
        self.entities: dict[str, EntityId] = dict(entities)
        self.complex_concepts: dict[str, ComplexConcept] = dict(complex_concepts)
        self.axioms: frozenset[Axiom] = frozenset(axioms)
        self.numeric_stats: dict[str, tuple[float, float]] = dict(numeric_stats)
        self._validate()

    def _validate(self):
        for name, (lo, hi) in self.numeric_stats.items():
            if not lo < hi:
                raise ValidationError(f"numeric range for {name!r} must satisfy min < max, got [{lo}, {hi}]")
        known = set(self.entities) | set(self.complex_concepts)
        for concept in self.complex_concepts.values():
            for comp in concept.components:
                if comp.local_name not in known:
                    raise ValidationError(f"complex concept component {comp!r} is not declared")
        for ax in self.axioms:
            sig = _AXIOM_SIGNATURE[ax.kind]
            for arg, allowed in zip(ax.args, sig):
                if arg.local_name not in known:
                    raise ValidationError(f"axiom {ax!r} references unknown entity {arg.local_name!r}")
                if self.effective_kind(arg) not in allowed:
                    raise ValidationError(
                        f"axiom {ax!r}: {arg.local_name!r} has kind {self.effective_kind(arg).value}, "
                        f"expected one of {[k.value for k in allowed]}"
                    )

    def __eq__(self, other):
        if not isinstance(other, Ontology):
            return NotImplemented
        return (self.tag == other.tag and self.entities == other.entities
                and self.complex_concepts == other.complex_concepts
                and self.axioms == other.axioms and self.numeric_stats == other.numeric_stats)

    def __repr__(self):
        return (f"Ontology({self.tag!r}, {len(self.entities)} entities, "
                f"{len(self.complex_concepts)} complex, {len(self.axioms)} axioms)")

    def entity(self, name: str) -> EntityId:
        if name in self.entities:
            return self.entities[name]
        if name in self.complex_concepts:
            return self.complex_concepts[name].derived_id(self.tag)
        raise ValidationError(f"unknown entity {name!r} in ontology {self.tag!r}")

    def effective_kind(self, entity: EntityId) -> Kind:
        """Kind used for compatibility checks; complex concepts resolve to the
        kind of entity their constructor produces."""
        return _effective_kind(entity, self.complex_concepts)

    def matchable_entities(self) -> list[EntityId]:
        """All entities that can appear in a correspondence, deterministic order."""
        out = [e for _, e in sorted(self.entities.items())]
        out.extend(self.complex_concepts[name].derived_id(self.tag)
                   for name in sorted(self.complex_concepts))
        return out

    def with_complex_concepts(self, concepts: Iterable[ComplexConcept]) -> "Ontology":
        merged = dict(self.complex_concepts)
        for c in concepts:
            merged[c.canonical_name] = c
        return Ontology(self.tag, self.entities, merged, self.axioms, self.numeric_stats)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOP_KEYS = {"tag", "classes", "object_properties", "data_properties", "axioms"}
_DATA_PROP_KEYS = {"name", "range_min", "range_max", "nominal_values"}


def parse_ontology(text: str) -> Ontology:
    """Parse the JSON ontology format into a validated Ontology."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputParseError(f"ontology file is not valid JSON: {exc.msg}",
                              line=exc.lineno, column=exc.colno) from exc
    if not isinstance(doc, dict):
        raise InputParseError("ontology file must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ValidationError(f"unknown top-level keys: {sorted(unknown)}")
    if "tag" not in doc or not isinstance(doc["tag"], str) or not doc["tag"]:
        raise ValidationError("ontology must declare a nonempty string 'tag'")
    tag = doc["tag"]

    entities: dict[str, EntityId] = {}

    def declare(name, kind, owner=None):
        if not isinstance(name, str):
            raise ValidationError(f"entity name must be a string, got {name!r}")
        if name in entities:
            raise ValidationError(f"duplicate entity id {name!r}")
        entities[name] = EntityId(tag, name, kind, owner)

    for name in doc.get("classes", []):
        declare(name, Kind.CLASS)
    for name in doc.get("object_properties", []):
        declare(name, Kind.OBJECT_PROPERTY)

    numeric_stats: dict[str, tuple[float, float]] = {}
    for spec in doc.get("data_properties", []):
        if not isinstance(spec, dict) or "name" not in spec:
            raise ValidationError(f"data property entry must be an object with a 'name': {spec!r}")
        unknown = set(spec) - _DATA_PROP_KEYS
        if unknown:
            raise ValidationError(f"unknown data property keys: {sorted(unknown)}")
        name = spec["name"]
        declare(name, Kind.DATA_PROPERTY)
        has_min, has_max = "range_min" in spec, "range_max" in spec
        if has_min != has_max:
            raise ValidationError(f"data property {name!r} must declare both range_min and range_max")
        if has_min:
            numeric_stats[name] = (float(spec["range_min"]), float(spec["range_max"]))
        for value in spec.get("nominal_values", []):
            declare(f"{name}={value}", Kind.NOMINAL_VALUE, owner=name)

    complexes: dict[str, ComplexConcept] = {}

    def resolve_ref(ref) -> EntityId:
        if isinstance(ref, str):
            if ref not in entities:
                raise ValidationError(f"unknown entity reference {ref!r}")
            return entities[ref]
        if isinstance(ref, dict):
            if set(ref) != {"op", "args"}:
                raise ValidationError(f"constructor reference must have exactly 'op' and 'args': {ref!r}")
            try:
                ctor = Constructor(ref["op"])
            except ValueError:
                raise ValidationError(f"unknown constructor {ref['op']!r}") from None
            comps = tuple(resolve_ref(a) for a in ref["args"])
            concept = make_complex(ctor, comps)
            complexes[concept.canonical_name] = concept
            return concept.derived_id(tag)
        raise ValidationError(f"entity reference must be a name or constructor object: {ref!r}")

    axioms: set[Axiom] = set()
    for entry in doc.get("axioms", []):
        if not isinstance(entry, dict) or set(entry) != {"kind", "args"}:
            raise ValidationError(f"axiom entry must have exactly 'kind' and 'args': {entry!r}")
        try:
            kind = AxiomKind(entry["kind"])
        except ValueError:
            raise ValidationError(f"unknown axiom kind {entry['kind']!r}") from None
        args = entry["args"]
        if not isinstance(args, list) or len(args) != 2:
            raise ValidationError(f"axiom args must be a two-element list: {entry!r}")
        axioms.add(Axiom(kind, (resolve_ref(args[0]), resolve_ref(args[1]))))

    return Ontology(tag, entities, complexes, axioms, numeric_stats)


def serialize_ontology(o: Ontology) -> str:
    """Inverse of parse_ontology; parse(serialize(o)) == o."""
    def ref_of(entity: EntityId):
        if entity.kind is Kind.COMPLEX:
            concept = o.complex_concepts[entity.local_name]
            return {"op": concept.constructor.value, "args": [ref_of(c) for c in concept.components]}
        return entity.local_name

    data_props = []
    for name in sorted(n for n, e in o.entities.items() if e.kind is Kind.DATA_PROPERTY):
        spec: dict = {"name": name}
        if name in o.numeric_stats:
            spec["range_min"], spec["range_max"] = o.numeric_stats[name]
        values = sorted(e.value_token for e in o.entities.values()
                        if e.kind is Kind.NOMINAL_VALUE and e.owner == name)
        if values:
            spec["nominal_values"] = values
        data_props.append(spec)

    doc = {
        "tag": o.tag,
        "classes": sorted(n for n, e in o.entities.items() if e.kind is Kind.CLASS),
        "object_properties": sorted(n for n, e in o.entities.items() if e.kind is Kind.OBJECT_PROPERTY),
        "data_properties": data_props,
        "axioms": [{"kind": ax.kind.value, "args": [ref_of(ax.args[0]), ref_of(ax.args[1])]}
                   for ax in sorted(o.axioms)],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Axiom closure
# ---------------------------------------------------------------------------

_SUB_OF = {AxiomKind.SUBCLASS_OF: AxiomKind.DISJOINT_CLASSES,
           AxiomKind.SUBPROPERTY_OF: AxiomKind.DISJOINT_PROPERTIES}
_DISJOINT_KINDS = frozenset(_SUB_OF.values())


def saturate(o: Ontology) -> Ontology:
    """Close the axiom set under: transitivity of subsumption, symmetry of
    disjointness, downward propagation of disjointness along subsumption, and
    domain/range inheritance along subproperty edges. Monotone and idempotent.

    Raises InconsistencyError (with a derivation chain) if the closure makes
    some entity disjoint with itself.
    """
    axioms: set[Axiom] = set(o.axioms)
    # Provenance of derived axioms, for inconsistency reports.
    parents: dict[Axiom, tuple[Axiom, ...]] = {}

    def add(ax: Axiom, *via: Axiom) -> bool:
        if ax in axioms:
            return False
        axioms.add(ax)
        parents[ax] = via
        return True

    changed = True
    while changed:
        changed = False
        subs = {k: [ax for ax in axioms if ax.kind == k]
                for k in (AxiomKind.SUBCLASS_OF, AxiomKind.SUBPROPERTY_OF)}
        by_kind = {}
        for ax in axioms:
            by_kind.setdefault(ax.kind, []).append(ax)

        for sub_kind, dis_kind in _SUB_OF.items():
            for a in subs[sub_kind]:
                for b in subs[sub_kind]:
                    if a.args[1] == b.args[0] and a.args[0] != b.args[1]:
                        changed |= add(Axiom(sub_kind, (a.args[0], b.args[1])), a, b)
            for d in by_kind.get(dis_kind, []):
                changed |= add(Axiom(dis_kind, (d.args[1], d.args[0])), d)
                for s in subs[sub_kind]:
                    if s.args[1] == d.args[0]:
                        changed |= add(Axiom(dis_kind, (s.args[0], d.args[1])), s, d)

        for sub in subs[AxiomKind.SUBPROPERTY_OF]:
            for ax in list(axioms):
                if ax.kind in (AxiomKind.DOMAIN, AxiomKind.RANGE) and ax.args[0] == sub.args[1]:
                    changed |= add(Axiom(ax.kind, (sub.args[0], ax.args[1])), sub, ax)

    for ax in axioms:
        if ax.kind in _DISJOINT_KINDS and ax.args[0] == ax.args[1]:
            raise InconsistencyError(ax.args[0].local_name, _derivation_chain(ax, parents))

    return Ontology(o.tag, o.entities, o.complex_concepts, axioms, o.numeric_stats)


def _derivation_chain(ax: Axiom, parents) -> list[str]:
    chain = []
    seen = set()

    def walk(a: Axiom):
        if a in seen:
            return
        seen.add(a)
        for p in parents.get(a, ()):
            walk(p)
        chain.append(repr(a) + ("" if a in parents else "  [given]"))

    walk(ax)
    return chain


def enumerate_complex_concepts(o: Ontology, rules) -> set[ComplexConcept]:
    """Complex concepts syntactically present in the ontology's axioms, its
    declared complex concepts, or the arguments of the given rules. No free
    generation: every returned concept's components exist in ``o``.
    """
    found: dict[str, ComplexConcept] = dict(o.complex_concepts)
    if rules is not None:
        for concept in rules.complex_arguments():
            found[concept.canonical_name] = concept
    known = set(o.entities) | set(found)
    for concept in found.values():
        for comp in concept.components:
            if comp.local_name not in known:
                raise ValidationError(
                    f"complex concept {concept.canonical_name!r} has unknown component {comp.local_name!r}")
    return set(found.values())
