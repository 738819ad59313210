"""Translate a matching task into a ground weighted-constraint problem.

One boolean atom exists per candidate pair. Clauses come in three shapes:

* ``or``  - ordinary disjunction (all hard clauses have this shape),
* ``and`` - conjunction, satisfied only when every literal holds,
* ``imp`` - implication whose first literal is the premise and whose
  remaining literals must all hold when the premise does.

Soft weights are always positive: a constraint whose natural weight is
negative is stored as the equivalent positive-weight clause on the negated
literals (a reward for avoiding the combination). The solver maximizes the
total weight of satisfied soft clauses subject to every hard clause.

Clause families:

============== =============================================================
apriori        unit reward per candidate, weighted by its name similarity
cardinality    hard one-to-one restriction per shared endpoint, both sides
coherence      hard ban on mapping a subsumption onto a disjointness
stability      soft penalty when a subsumption/domain/range edge exists on
               one side only
rule_pos       reward for argument alignments under which a symbolic or
               association rule holds on both sides
rule_neg       penalty for alignments under which it holds on exactly one
               side
rule_dist      signed reward (d0 - distance) for aligned conditional rules
ctor_fwd       hard: matched components of same-constructor concepts force
               the complex match
ctor_bwd       soft converse of ctor_fwd
nominal_owner  hard: a matched nominal value forces its attribute match
bias           uniform per-atom weight, the precision/recall trade-off knob
============== =============================================================
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import permutations, product

from .errors import ValidationError
from .model import AxiomKind, EntityId, Kind, Ontology
from .rules import ASSOC_PATTERN, RuleStore, estimate_linear_map, rule_distance
from .similarity import Candidate, component_alignments

HARD = None  # weight sentinel
_EPS = 1e-12

CLAUSE_KINDS = ("or", "and", "imp")


@dataclass(frozen=True)
class WeightConfig:
    """Every weight and threshold the grounding consumes, with defaults."""

    w_subclass: float = -0.5
    w_domain_range: float = -0.25
    w_rule_pos: dict = field(default_factory=dict)   # pattern -> reward override
    w_rule_neg: dict = field(default_factory=dict)   # pattern -> penalty override
    w_assoc: float = 0.25
    w_constructor: float = 0.5
    d0: float = 0.2
    bias_w: float = 0.0
    tau: float = 0.70

    def __post_init__(self):
        if not 0.0 <= self.d0 <= 1.0:
            raise ValidationError(f"d0 must be in [0, 1], got {self.d0}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValidationError(f"tau must be in [0, 1], got {self.tau}")

    def rule_pos_weight(self, pattern: str) -> float:
        if pattern in self.w_rule_pos:
            return self.w_rule_pos[pattern]
        return self.w_assoc if pattern == ASSOC_PATTERN else 1.0

    def rule_neg_weight(self, pattern: str) -> float:
        if pattern in self.w_rule_neg:
            return self.w_rule_neg[pattern]
        return self.w_assoc if pattern == ASSOC_PATTERN else 1.0

    def to_dict(self) -> dict:
        return {
            "w_subclass": self.w_subclass,
            "w_domain_range": self.w_domain_range,
            "w_rule_pos": dict(sorted(self.w_rule_pos.items())),
            "w_rule_neg": dict(sorted(self.w_rule_neg.items())),
            "w_assoc": self.w_assoc,
            "w_constructor": self.w_constructor,
            "d0": self.d0,
            "bias_w": self.bias_w,
            "tau": self.tau,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WeightConfig":
        unknown = set(doc) - set(cls().to_dict())
        if unknown:
            raise ValidationError(f"unknown weight config keys: {sorted(unknown)}")
        return cls(**doc)

    def with_bias(self, bias_w: float) -> "WeightConfig":
        return replace(self, bias_w=bias_w)


@dataclass(frozen=True)
class GroundAtom:
    id: int
    candidate: Candidate


@dataclass(frozen=True)
class WeightedClause:
    literals: tuple[tuple[int, bool], ...]  # (atom id, required polarity)
    weight: float | None                    # None marks a hard clause
    origin: str
    kind: str = "or"

    def __post_init__(self):
        if not self.literals:
            raise ValidationError("clause needs at least one literal")
        atoms = [a for a, _ in self.literals]
        if len(set(atoms)) != len(atoms):
            raise ValidationError(f"duplicate atom in clause literals: {self.literals}")
        if self.kind not in CLAUSE_KINDS:
            raise ValidationError(f"unknown clause kind {self.kind!r}")
        if self.weight is HARD and self.kind != "or":
            raise ValidationError("hard clauses must be disjunctions")
        if self.weight is not HARD and self.weight <= 0:
            raise ValidationError(f"soft clause weight must be positive, got {self.weight}")

    @property
    def hard(self) -> bool:
        return self.weight is HARD

    def satisfied(self, values) -> bool:
        if self.kind == "or":
            return any(values[a] == pol for a, pol in self.literals)
        if self.kind == "and":
            return all(values[a] == pol for a, pol in self.literals)
        head, *body = self.literals
        if values[head[0]] != head[1]:
            return True
        return all(values[a] == pol for a, pol in body)

    def sort_key(self):
        return (self.origin, self.kind, self.literals,
                -1.0 if self.weight is HARD else self.weight)


class GroundProblem:
    """Atoms plus clauses; objective = total satisfied soft weight subject to
    all hard clauses."""

    def __init__(self, atoms, clauses, skipped_rule_tuples: int = 0):
        self.atoms: list[GroundAtom] = list(atoms)
        self.clauses: list[WeightedClause] = sorted(clauses, key=WeightedClause.sort_key)
        self.skipped_rule_tuples = skipped_rule_tuples
        for i, atom in enumerate(self.atoms):
            if atom.id != i:
                raise ValidationError("atom ids must be dense 0..n-1")
        n = len(self.atoms)
        for clause in self.clauses:
            for a, _ in clause.literals:
                if not 0 <= a < n:
                    raise ValidationError(f"clause references unknown atom {a}")

    def __len__(self):
        return len(self.atoms)

    def hard_clauses(self):
        return [c for c in self.clauses if c.hard]

    def soft_clauses(self):
        return [c for c in self.clauses if not c.hard]

    def family_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.clauses:
            out[c.origin] = out.get(c.origin, 0) + 1
        return dict(sorted(out.items()))

    def total_soft_weight(self) -> float:
        return sum(c.weight for c in self.soft_clauses())


class _Index:
    """Candidate lookups: by pair key and by either endpoint."""

    def __init__(self, atoms):
        self.key_to_atom: dict[tuple[str, str], int] = {}
        self.by1: dict[str, list[tuple[str, int]]] = {}
        self.by2: dict[str, list[tuple[str, int]]] = {}
        for atom in atoms:
            n1, n2 = atom.candidate.key
            self.key_to_atom[(n1, n2)] = atom.id
            self.by1.setdefault(n1, []).append((n2, atom.id))
            self.by2.setdefault(n2, []).append((n1, atom.id))
        for seq in self.by1.values():
            seq.sort()
        for seq in self.by2.values():
            seq.sort()

    def get(self, n1: str, n2: str):
        return self.key_to_atom.get((n1, n2))

    def partners(self, side: int, name: str) -> list[tuple[str, int]]:
        return (self.by1 if side == 1 else self.by2).get(name, [])

    def covered(self, side: int, args) -> list[list[tuple[str, int]]] | None:
        """Per-argument partner lists, or None if some argument has none."""
        lists = []
        for arg in args:
            partners = self.partners(side, arg.local_name)
            if not partners:
                return None
            lists.append(partners)
        return lists


class _Builder:
    def __init__(self):
        self.clauses: list[WeightedClause] = []
        self._hard_seen: set = set()

    def hard(self, literals, origin):
        key = (origin, frozenset(literals))
        if key in self._hard_seen:
            return
        self._hard_seen.add(key)
        self.clauses.append(WeightedClause(tuple(literals), HARD, origin))

    def soft_conjunction(self, atom_ids, weight, origin):
        """Signed weight on a conjunction of positive match literals. Negative
        weights become the equivalent reward on the negated disjunction."""
        if abs(weight) <= _EPS:
            return
        if weight > 0:
            lits = tuple((a, True) for a in atom_ids)
            self.clauses.append(WeightedClause(lits, weight, origin, kind="and"))
        else:
            lits = tuple((a, False) for a in atom_ids)
            self.clauses.append(WeightedClause(lits, -weight, origin, kind="or"))

    def soft_unit(self, atom_id, weight, origin):
        self.soft_conjunction((atom_id,), weight, origin)

    def soft_implication(self, premise, consequent_ids, weight, origin):
        if abs(weight) <= _EPS:
            return
        lits = (premise,) + tuple((a, True) for a in consequent_ids)
        self.clauses.append(WeightedClause(lits, weight, origin, kind="imp"))


def ground_problem(o1: Ontology, o2: Ontology, candidates: list[Candidate],
                   rules1: RuleStore, rules2: RuleStore, cfg: WeightConfig,
                   grid_n: int = 32) -> GroundProblem:
    """Ground every clause family for the given task. Deterministic: the same
    inputs produce an identical clause list."""
    if not candidates:
        raise ValidationError("candidate list is empty; nothing to ground")
    atoms = [GroundAtom(i, c) for i, c in enumerate(sorted(candidates, key=lambda c: c.key))]
    known1 = set(o1.entities) | set(o1.complex_concepts)
    known2 = set(o2.entities) | set(o2.complex_concepts)
    for atom in atoms:
        if atom.candidate.e1.local_name not in known1:
            raise ValidationError(f"candidate references unknown entity {atom.candidate.e1!r}")
        if atom.candidate.e2.local_name not in known2:
            raise ValidationError(f"candidate references unknown entity {atom.candidate.e2!r}")

    index = _Index(atoms)
    b = _Builder()
    skipped = 0

    # (a) a-priori name similarity evidence
    for atom in atoms:
        if atom.candidate.sim > 0:
            b.soft_unit(atom.id, atom.candidate.sim, "apriori")

    # (b) one-to-one cardinality, both directions
    for groups in (index.by1, index.by2):
        for _, entries in sorted(groups.items()):
            ids = [atom_id for _, atom_id in entries]
            for i, x in enumerate(ids):
                for y in ids[i + 1:]:
                    b.hard(tuple(sorted(((x, False), (y, False)))), "cardinality")

    # (c) coherence: a subsumption may not map onto a disjointness
    _ground_coherence(b, o1, o2, index)

    # (d) structure stability: penalize one-sided subsumption/domain/range
    _ground_stability(b, o1, o2, index, cfg)

    # (e) symbolic and association rule stability
    skipped += _ground_symbolic(b, rules1, rules2, index, cfg)
    skipped += _ground_assoc(b, rules1, rules2, index, cfg)

    # (f) conditional rules weighted by distribution distance
    skipped += _ground_conditionals(b, o1, o2, rules1, rules2, index, cfg, grid_n)

    # (g) constructor constraints for complex concept pairs
    _ground_constructors(b, o1, o2, index, cfg)

    # nominal values only match along with their owning attributes
    _ground_nominal_owners(b, o1, o2, atoms, index)

    # (h) match bias
    if abs(cfg.bias_w) > _EPS:
        for atom in atoms:
            b.soft_unit(atom.id, cfg.bias_w, "bias")

    problem = GroundProblem(atoms, b.clauses, skipped)
    # Every hard family leaves the empty alignment feasible; the local solver
    # relies on this for its starting point.
    all_false = [False] * len(atoms)
    for clause in problem.hard_clauses():
        if not clause.satisfied(all_false):
            raise AssertionError(f"grounding emitted a hard clause violated by all-false: {clause}")
    return problem


def _axiom_pairs(o: Ontology, kind: AxiomKind) -> list[tuple[str, str]]:
    return sorted((ax.args[0].local_name, ax.args[1].local_name)
                  for ax in o.axioms if ax.kind is kind)


def _ground_coherence(b, o1, o2, index: _Index):
    for sub_kind, dis_kind in ((AxiomKind.SUBCLASS_OF, AxiomKind.DISJOINT_CLASSES),
                               (AxiomKind.SUBPROPERTY_OF, AxiomKind.DISJOINT_PROPERTIES)):
        # subsumption in o1 vs disjointness in o2, and the mirror image
        for a, c in _axiom_pairs(o1, sub_kind):
            for a2, c2 in _axiom_pairs(o2, dis_kind):
                x, y = index.get(a, a2), index.get(c, c2)
                if x is not None and y is not None and x != y:
                    b.hard(tuple(sorted(((x, False), (y, False)))), "coherence")
        for a2, c2 in _axiom_pairs(o2, sub_kind):
            for a, c in _axiom_pairs(o1, dis_kind):
                x, y = index.get(a, a2), index.get(c, c2)
                if x is not None and y is not None and x != y:
                    b.hard(tuple(sorted(((x, False), (y, False)))), "coherence")


def _ground_stability(b, o1, o2, index: _Index, cfg: WeightConfig):
    weights = (
        (AxiomKind.SUBCLASS_OF, cfg.w_subclass),
        (AxiomKind.SUBPROPERTY_OF, cfg.w_subclass),
        (AxiomKind.DOMAIN, cfg.w_domain_range),
        (AxiomKind.RANGE, cfg.w_domain_range),
    )
    for kind, weight in weights:
        pairs1 = _axiom_pairs(o1, kind)
        pairs2 = _axiom_pairs(o2, kind)
        set1, set2 = set(pairs1), set(pairs2)
        for a, c in pairs1:
            for a2, x in index.partners(1, a):
                for c2, y in index.partners(1, c):
                    if x != y and (a2, c2) not in set2:
                        b.soft_conjunction((x, y), weight, "stability")
        for a2, c2 in pairs2:
            for a, x in index.partners(2, a2):
                for c, y in index.partners(2, c2):
                    if x != y and (a, c) not in set1:
                        b.soft_conjunction((x, y), weight, "stability")


def _ground_symbolic(b, rules1: RuleStore, rules2: RuleStore, index: _Index,
                     cfg: WeightConfig) -> int:
    skipped = 0
    for store, other, side in ((rules1, rules2, 1), (rules2, rules1, 2)):
        for rule in store.symbolic():
            lists = index.covered(side, rule.args)
            if lists is None:
                skipped += 1
                continue
            pos_w = cfg.rule_pos_weight(rule.pattern)
            neg_w = cfg.rule_neg_weight(rule.pattern)
            for combo in product(*lists):
                atom_ids = tuple(atom_id for _, atom_id in combo)
                if len(set(atom_ids)) != len(atom_ids):
                    continue
                # EntityId equality is (tag, name), so a placeholder kind works
                # for index probing.
                induced = tuple(EntityId(other.ontology_tag, name, Kind.CLASS)
                                for name, _ in combo)
                if other.has_symbolic(rule.pattern, induced, rule.params):
                    if side == 1:  # the both-sides reward is emitted once
                        b.soft_conjunction(atom_ids, pos_w, "rule_pos")
                else:
                    b.soft_conjunction(atom_ids, -neg_w, "rule_neg")
    return skipped


def _ground_assoc(b, rules1: RuleStore, rules2: RuleStore, index: _Index,
                  cfg: WeightConfig) -> int:
    skipped = 0
    pos_w = cfg.rule_pos_weight(ASSOC_PATTERN)
    neg_w = cfg.rule_neg_weight(ASSOC_PATTERN)
    for store, other, side in ((rules1, rules2, 1), (rules2, rules1, 2)):
        for rule in store.assoc():
            antecedent, consequent = rule.assoc_items()
            items = antecedent + (consequent,)
            lists = index.covered(side, [e for e, _ in items])
            if lists is None:
                skipped += 1
                continue
            for combo in product(*lists):
                atom_ids = tuple(atom_id for _, atom_id in combo)
                if len(set(atom_ids)) != len(atom_ids):
                    continue
                other_items = [
                    (EntityId(other.ontology_tag, name, Kind.CLASS), value)
                    for (name, _), (_, value) in zip(combo, items)
                ]
                # Antecedent items compare as a set: their order inside an
                # association rule carries no meaning.
                if other.has_assoc(frozenset(other_items[:-1]), other_items[-1]):
                    if side == 1:
                        b.soft_conjunction(atom_ids, pos_w, "rule_pos")
                else:
                    b.soft_conjunction(atom_ids, -neg_w, "rule_neg")
    return skipped


def _ground_conditionals(b, o1, o2, rules1, rules2, index: _Index,
                         cfg: WeightConfig, grid_n: int) -> int:
    skipped = 0
    for r1 in rules1.conditionals():
        n = len(r1.antecedents)
        covered_any = False
        for r2 in rules2.conditionals():
            if len(r2.antecedents) != n:
                continue
            cons_atom = index.get(r1.consequent.local_name, r2.consequent.local_name)
            if cons_atom is None:
                continue
            for perm in permutations(range(n)):
                atom_ids, maps = [], []
                ok = True
                for i in range(n):
                    p1 = r1.antecedents[i][0]
                    p2 = r2.antecedents[perm[i]][0]
                    atom = index.get(p1.local_name, p2.local_name)
                    if atom is None:
                        ok = False
                        break
                    atom_ids.append(atom)
                    maps.append(estimate_linear_map(
                        o1.numeric_stats[p1.local_name], o2.numeric_stats[p2.local_name]))
                if not ok:
                    continue
                atom_ids.append(cons_atom)
                if len(set(atom_ids)) != len(atom_ids):
                    continue
                covered_any = True
                d = rule_distance(r1, r2, maps, grid_n=grid_n, pairing=perm)
                b.soft_conjunction(tuple(atom_ids), cfg.d0 - d, "rule_dist")
        if not covered_any:
            skipped += 1
    return skipped


def _ground_constructors(b, o1: Ontology, o2: Ontology, index: _Index, cfg: WeightConfig):
    for name1 in sorted(o1.complex_concepts):
        c1 = o1.complex_concepts[name1]
        for name2 in sorted(o2.complex_concepts):
            c2 = o2.complex_concepts[name2]
            complex_atom = index.get(name1, name2)
            if complex_atom is None:
                continue
            for pairs in component_alignments(c1, c2, index.key_to_atom.keys()):
                comp_atoms = tuple(index.get(a.local_name, b2.local_name) for a, b2 in pairs)
                if complex_atom in comp_atoms or len(set(comp_atoms)) != len(comp_atoms):
                    continue
                literals = tuple((a, False) for a in sorted(comp_atoms)) + ((complex_atom, True),)
                b.hard(literals, "ctor_fwd")
                b.soft_implication((complex_atom, True), sorted(comp_atoms),
                                   cfg.w_constructor, "ctor_bwd")


def _ground_nominal_owners(b, o1: Ontology, o2: Ontology, atoms, index: _Index):
    for atom in atoms:
        e1, e2 = atom.candidate.e1, atom.candidate.e2
        if e1.kind is not Kind.NOMINAL_VALUE or e2.kind is not Kind.NOMINAL_VALUE:
            continue
        owner_atom = index.get(e1.owner, e2.owner)
        if owner_atom is None:
            # No attribute atom to support the value match: forbid it.
            b.hard(((atom.id, False),), "nominal_owner")
        else:
            b.hard(((atom.id, False), (owner_atom, True)), "nominal_owner")


# ---------------------------------------------------------------------------
# Debug dump format
# ---------------------------------------------------------------------------

def dump_ground_problem(problem: GroundProblem) -> str:
    """Text form: header, one clause per line (weight or ``H``, clause-kind
    token, then signed 1-based atom ids), then the atom table."""
    lines = [f"atoms {len(problem.atoms)}"]
    for c in problem.clauses:
        head = "H" if c.hard else repr(c.weight)
        kind = {"or": "o", "and": "a", "imp": "i"}[c.kind]
        ids = " ".join(str(a + 1 if pol else -(a + 1)) for a, pol in c.literals)
        lines.append(f"{head} {kind} {ids}")
    for atom in problem.atoms:
        c = atom.candidate
        lines.append(f"atom {atom.id + 1} {c.e1.local_name} {c.e2.local_name} {repr(c.sim)} {c.kind}")
    return "\n".join(lines) + "\n"


def load_ground_problem(text: str) -> GroundProblem:
    """Parse the dump format back into a solvable problem (atom candidates are
    reconstructed as plain class pairs; similarity and kind are preserved)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("atoms "):
        raise ValidationError("ground dump must start with an 'atoms N' header")
    n = int(lines[0].split()[1])
    kind_of = {"o": "or", "a": "and", "i": "imp"}
    clauses = []
    names: dict[int, tuple[str, str, float, str]] = {}
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "atom":
            names[int(parts[1]) - 1] = (parts[2], parts[3], float(parts[4]), parts[5])
            continue
        weight = HARD if parts[0] == "H" else float(parts[0])
        kind = kind_of[parts[1]]
        literals = tuple((abs(int(tok)) - 1, int(tok) > 0) for tok in parts[2:])
        clauses.append(WeightedClause(literals, weight, "loaded", kind=kind))
    atoms = []
    for i in range(n):
        n1, n2, sim, kind = names.get(i, (f"a{i}", f"b{i}", 0.0, "simple"))
        atoms.append(GroundAtom(i, Candidate(
            EntityId("O1", n1, Kind.CLASS), EntityId("O2", n2, Kind.CLASS), sim, kind)))
    return GroundProblem(atoms, clauses)
