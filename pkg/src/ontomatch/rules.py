"""Knowledge rules: ingestion, storage, and the numeric rule distance.

A knowledge rule instantiates a relation pattern over entities of one
ontology, optionally with numeric parameters. Three families matter to the
matcher:

* symbolic rules (``precedes``, ``disjoint_props``, user-registered patterns)
  compared by exact pattern/argument/parameter identity;
* conditional threshold rules (``threshold_implies``), compared by the
  distance between the conditional distributions they encode;
* association rules (``assoc_implies``), produced by the miner and compared
  by their item structure.

Rules files are JSON lines, one object per line:
``{"pattern": id, "args": [ref, ...], "params": [num, ...]?, "p": num?,
"ops": [">"|"<=", ...]?, "p_else": num?}`` where a ref is a plain entity name
or a constructor object as in the ontology format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputParseError, ValidationError
from .model import ComplexConcept, Constructor, EntityId, Kind, Ontology, make_complex

THRESHOLD_PATTERN = "threshold_implies"
ASSOC_PATTERN = "assoc_implies"
MAX_CONDITION_ATTRS = 3  # scalability cap on conditional antecedents


@dataclass(frozen=True)
class RulePattern:
    pattern_id: str
    arity: int | None  # None: variable arity
    has_params: bool
    semantics_note: str = ""


BUILTIN_PATTERNS: dict[str, RulePattern] = {
    "precedes": RulePattern("precedes", 2, False, "every value of a is below every value of b"),
    "disjoint_props": RulePattern("disjoint_props", 2, False, "a and b never relate the same pair"),
    THRESHOLD_PATTERN: RulePattern(THRESHOLD_PATTERN, None, True,
                                   "conjunction of threshold tests implies the consequent"),
    ASSOC_PATTERN: RulePattern(ASSOC_PATTERN, None, True,
                               "antecedent items imply the consequent item"),
}


@dataclass(frozen=True)
class KnowledgeRule:
    pattern: str
    args: tuple[EntityId, ...]
    params: tuple[float, ...] = ()
    confidence: float = 1.0

    def assoc_items(self):
        """(antecedent items, consequent item) where an item is
        (entity, discrete value or None). Data-property args consume params in
        order; nominal-value args carry no parameter."""
        params = iter(self.params)
        items = []
        for arg in self.args:
            if arg.kind is Kind.DATA_PROPERTY:
                items.append((arg, next(params)))
            else:
                items.append((arg, None))
        return tuple(items[:-1]), items[-1]


@dataclass(frozen=True)
class ConditionalRule(KnowledgeRule):
    """Threshold rule: AND of (prop op threshold) tests implies the consequent
    with probability ``p``; outside the region the consequent holds with
    probability ``p_else``. args = antecedent properties + consequent;
    params = thresholds; ranges = declared [min, max] per antecedent.
    """

    ops: tuple[str, ...] = ()
    p: float = 1.0
    p_else: float = 0.0
    ranges: tuple[tuple[float, float], ...] = ()

    @property
    def antecedents(self):
        return tuple(zip(self.args[:-1], self.ops, self.params))

    @property
    def consequent(self) -> EntityId:
        return self.args[-1]

    def region_prob(self, point) -> float:
        """Probability of the consequent at a point in antecedent space."""
        for value, (_, op, threshold) in zip(point, self.antecedents):
            ok = value > threshold if op == ">" else value <= threshold
            if not ok:
                return self.p_else
        return self.p


class RuleStore:
    """Validated rules of one ontology, with lookup indexes for grounding."""

    def __init__(self, ontology: Ontology, rules: list[KnowledgeRule],
                 complex_args: dict[str, ComplexConcept],
                 patterns: dict[str, RulePattern]):
        self.ontology_tag = ontology.tag
        self.rules = list(rules)
        self._complex_args = dict(complex_args)
        self.patterns = dict(patterns)
        self._symbolic_index = {(r.pattern, r.args, r.params) for r in self.symbolic()}
        self._assoc_index = {self._assoc_key(r) for r in self.assoc()}
        self._participants = self._collect_participants(ontology)

    @staticmethod
    def _assoc_key(rule: KnowledgeRule):
        antecedent, consequent = rule.assoc_items()
        return frozenset(antecedent), consequent

    def _collect_participants(self, ontology: Ontology) -> frozenset[EntityId]:
        out: set[EntityId] = set()
        for rule in self.rules:
            out.update(rule.args)
        # A nominal value drags in its owning attribute: value correspondences
        # are only coherent alongside the attribute correspondence.
        for entity in list(out):
            if entity.kind is Kind.NOMINAL_VALUE and entity.owner in ontology.entities:
                out.add(ontology.entities[entity.owner])
        return frozenset(out)

    def __len__(self):
        return len(self.rules)

    def symbolic(self) -> list[KnowledgeRule]:
        return [r for r in self.rules
                if r.pattern not in (THRESHOLD_PATTERN, ASSOC_PATTERN)]

    def conditionals(self) -> list[ConditionalRule]:
        return [r for r in self.rules if isinstance(r, ConditionalRule)]

    def assoc(self) -> list[KnowledgeRule]:
        return [r for r in self.rules if r.pattern == ASSOC_PATTERN]

    def has_symbolic(self, pattern: str, args, params) -> bool:
        return (pattern, tuple(args), tuple(params)) in self._symbolic_index

    def has_assoc(self, antecedent_items, consequent_item) -> bool:
        return (frozenset(antecedent_items), consequent_item) in self._assoc_index

    def participants(self) -> frozenset[EntityId]:
        return self._participants

    def complex_arguments(self) -> list[ComplexConcept]:
        return [self._complex_args[name] for name in sorted(self._complex_args)]


def empty_rule_store(ontology: Ontology) -> RuleStore:
    return RuleStore(ontology, [], {}, dict(BUILTIN_PATTERNS))


def parse_rules(text: str, ontology: Ontology,
                extra_patterns: dict[str, RulePattern] | None = None) -> RuleStore:
    """Parse a JSON-lines rules file against an ontology."""
    patterns = dict(BUILTIN_PATTERNS)
    if extra_patterns:
        patterns.update(extra_patterns)

    registry: dict[str, ComplexConcept] = {}

    def resolve(ref) -> EntityId:
        if isinstance(ref, str):
            if ref in ontology.entities:
                return ontology.entities[ref]
            if ref in ontology.complex_concepts:
                return ontology.complex_concepts[ref].derived_id(ontology.tag)
            if ref in registry:
                return registry[ref].derived_id(ontology.tag)
            raise ValidationError(f"unknown entity {ref!r} in rules for {ontology.tag!r}")
        if isinstance(ref, dict):
            if set(ref) != {"op", "args"}:
                raise ValidationError(f"constructor reference must have exactly 'op' and 'args': {ref!r}")
            try:
                ctor = Constructor(ref["op"])
            except ValueError:
                raise ValidationError(f"unknown constructor {ref['op']!r}") from None
            concept = make_complex(ctor, tuple(resolve(a) for a in ref["args"]))
            registry[concept.canonical_name] = concept
            return concept.derived_id(ontology.tag)
        raise ValidationError(f"bad entity reference {ref!r}")

    rules: list[KnowledgeRule] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputParseError(f"rules line is not valid JSON: {exc.msg}", line=lineno) from exc
        if not isinstance(doc, dict) or "pattern" not in doc or "args" not in doc:
            raise InputParseError("rule must be an object with 'pattern' and 'args'", line=lineno)
        allowed = {"pattern", "args", "params", "p", "ops", "p_else"}
        unknown = set(doc) - allowed
        if unknown:
            raise InputParseError(f"unknown rule keys: {sorted(unknown)}", line=lineno)
        pattern_id = doc["pattern"]
        if pattern_id not in patterns:
            raise InputParseError(f"unknown rule pattern {pattern_id!r}", line=lineno)
        try:
            args = tuple(resolve(ref) for ref in doc["args"])
            params = tuple(float(x) for x in doc.get("params", []))
            rules.append(_build_rule(patterns[pattern_id], args, params, doc, ontology))
        except ValidationError as exc:
            raise ValidationError(f"rules line {lineno}: {exc}") from exc

    return RuleStore(ontology, rules, registry, patterns)


def _build_rule(pattern: RulePattern, args, params, doc, ontology: Ontology) -> KnowledgeRule:
    confidence = float(doc.get("p", 1.0))
    if not 0.0 <= confidence <= 1.0:
        raise ValidationError(f"p must be in [0, 1], got {confidence}")

    if pattern.pattern_id == THRESHOLD_PATTERN:
        return _build_conditional(args, params, doc, ontology, confidence)

    if pattern.pattern_id == ASSOC_PATTERN:
        return _build_assoc(args, params, ontology, confidence)

    if pattern.arity is not None and len(args) != pattern.arity:
        raise ValidationError(
            f"pattern {pattern.pattern_id!r} takes {pattern.arity} arguments, got {len(args)}")
    if params and not pattern.has_params:
        raise ValidationError(f"pattern {pattern.pattern_id!r} does not take parameters")
    if pattern.pattern_id == "precedes":
        for arg in args:
            if arg.kind is not Kind.DATA_PROPERTY:
                raise ValidationError(f"precedes arguments must be data properties, got {arg!r}")
    if pattern.pattern_id == "disjoint_props":
        for arg in args:
            if ontology.effective_kind(arg) not in (Kind.OBJECT_PROPERTY, Kind.DATA_PROPERTY):
                raise ValidationError(f"disjoint_props arguments must be properties, got {arg!r}")
    return KnowledgeRule(pattern.pattern_id, args, params, confidence)


def _build_conditional(args, params, doc, ontology, confidence) -> ConditionalRule:
    if len(args) < 2:
        raise ValidationError("threshold rule needs at least one antecedent and a consequent")
    props, consequent = args[:-1], args[-1]
    if len(props) > MAX_CONDITION_ATTRS:
        raise ValidationError(f"threshold rule limited to {MAX_CONDITION_ATTRS} antecedents")
    if len(set(props)) != len(props):
        raise ValidationError("threshold rule antecedent properties must be distinct")
    if len(params) != len(props):
        raise ValidationError(f"expected {len(props)} thresholds, got {len(params)}")
    ops = tuple(doc.get("ops", [">"] * len(props)))
    if len(ops) != len(props) or any(op not in (">", "<=") for op in ops):
        raise ValidationError(f"ops must be {len(props)} entries of '>' or '<=', got {ops!r}")
    p_else = float(doc.get("p_else", 0.0))
    if not 0.0 <= p_else <= 1.0:
        raise ValidationError(f"p_else must be in [0, 1], got {p_else}")
    if consequent.kind not in (Kind.NOMINAL_VALUE, Kind.CLASS, Kind.DATA_PROPERTY):
        raise ValidationError(f"threshold consequent must be a nominal value, class, "
                              f"or data property, got {consequent!r}")
    ranges = []
    for prop, threshold in zip(props, params):
        if prop.kind is not Kind.DATA_PROPERTY:
            raise ValidationError(f"threshold antecedent must be a data property, got {prop!r}")
        if prop.local_name not in ontology.numeric_stats:
            raise ValidationError(f"data property {prop.local_name!r} has no declared numeric range")
        lo, hi = ontology.numeric_stats[prop.local_name]
        if not lo <= threshold <= hi:
            raise ValidationError(
                f"threshold {threshold} outside declared range [{lo}, {hi}] of {prop.local_name!r}")
        ranges.append((lo, hi))
    return ConditionalRule(THRESHOLD_PATTERN, args, params, confidence,
                           ops=ops, p=confidence, p_else=p_else, ranges=tuple(ranges))


def _build_assoc(args, params, ontology, confidence) -> KnowledgeRule:
    if len(args) < 2:
        raise ValidationError("association rule needs at least one antecedent item and a consequent")
    n_numeric = sum(1 for a in args if a.kind is Kind.DATA_PROPERTY)
    if len(params) != n_numeric:
        raise ValidationError(
            f"association rule has {n_numeric} data-property items but {len(params)} params")
    columns = []
    for arg in args:
        if arg.kind is Kind.DATA_PROPERTY:
            if arg.local_name not in ontology.numeric_stats:
                raise ValidationError(
                    f"data property {arg.local_name!r} has no declared numeric range")
            columns.append(arg.local_name)
        elif arg.kind is Kind.NOMINAL_VALUE:
            columns.append(arg.owner)
        else:
            raise ValidationError(
                f"association items must be data properties or nominal values, got {arg!r}")
    if len(set(columns)) != len(columns):
        raise ValidationError("association rule items must come from distinct attributes")
    return KnowledgeRule(ASSOC_PATTERN, args, params, confidence)


# ---------------------------------------------------------------------------
# Numeric rules: linear maps and the distribution distance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearMap:
    scale: float
    offset: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"linear map scale must be positive, got {self.scale}")

    def apply(self, x):
        return self.scale * x + self.offset


IDENTITY_MAP = LinearMap(1.0, 0.0)


def estimate_linear_map(stats_a: tuple[float, float], stats_b: tuple[float, float]) -> LinearMap:
    """The unique positive linear map sending [min_a, max_a] onto [min_b, max_b]."""
    (lo_a, hi_a), (lo_b, hi_b) = stats_a, stats_b
    if not (hi_a > lo_a and hi_b > lo_b):
        raise ValidationError(f"degenerate range: [{lo_a}, {hi_a}] -> [{lo_b}, {hi_b}]")
    scale = (hi_b - lo_b) / (hi_a - lo_a)
    return LinearMap(scale, lo_b - scale * lo_a)


def rule_distance(r1: ConditionalRule, r2: ConditionalRule,
                  maps, grid_n: int = 32, pairing=None) -> float:
    """Expected |p - p'| between two conditional rules over a uniform grid.

    The grid spans r1's declared antecedent ranges with ``grid_n`` cell
    midpoints per dimension. ``maps[i]`` carries r1's antecedent i into the
    units of r2's antecedent ``pairing[i]`` (identity pairing by default).
    """
    n = len(r1.antecedents)
    if len(r2.antecedents) != n:
        raise ValidationError(
            f"antecedent count mismatch: {n} vs {len(r2.antecedents)}")
    if grid_n < 2:
        raise ValidationError(f"grid_n must be at least 2, got {grid_n}")
    maps = list(maps)
    if len(maps) != n:
        raise ValidationError(f"expected {n} linear maps, got {len(maps)}")
    for m in maps:
        if not m.scale > 0:
            raise ValidationError("linear map scale must be positive")
    if pairing is None:
        pairing = tuple(range(n))
    else:
        pairing = tuple(pairing)
        if sorted(pairing) != list(range(n)):
            raise ValidationError(f"pairing must be a permutation of 0..{n - 1}, got {pairing}")
    if len(r1.ranges) != n:
        raise ValidationError("r1 is missing declared antecedent ranges")

    # Per-dimension midpoint grids in r1 units, and their images in r2 units.
    axes = []
    for (lo, hi), lift in zip(r1.ranges, maps):
        xs = lo + (np.arange(grid_n, dtype=np.float64) + 0.5) * (hi - lo) / grid_n
        axes.append((xs, lift.apply(xs)))

    def broadcast(dim, values):
        view = [1] * n
        view[dim] = grid_n
        return values.reshape(view)

    inside1 = np.ones((grid_n,) * n, dtype=bool)
    for i, (xs, _) in enumerate(axes):
        _, op, threshold = r1.antecedents[i]
        inside1 &= broadcast(i, xs > threshold if op == ">" else xs <= threshold)

    inside2 = np.ones((grid_n,) * n, dtype=bool)
    for i, (_, mapped) in enumerate(axes):
        _, op, threshold = r2.antecedents[pairing[i]]
        inside2 &= broadcast(i, mapped > threshold if op == ">" else mapped <= threshold)

    p1 = np.where(inside1, r1.p, r1.p_else)
    p2 = np.where(inside2, r2.p, r2.p_else)
    return float(np.mean(np.abs(p1 - p2)))
