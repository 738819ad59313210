"""Task assembly and the end-to-end match pipeline.

A match task bundles two parsed, saturated ontologies with their rule stores
and an optional reference alignment. ``run_match`` takes a task through
candidate generation, grounding, and solving, producing an alignment plus a
per-family diagnostic report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ValidationError
from .grounding import GroundProblem, WeightConfig, ground_problem
from .model import (Constructor, Kind, Ontology, enumerate_complex_concepts,
                    make_complex, parse_ontology, saturate)
from .rules import RuleStore, empty_rule_store, parse_rules
from .similarity import generate_candidates
from .solver import Assignment, evaluate, solve

MODE_FULL = "knowledge"      # every clause family
MODE_BASELINE = "baseline"   # structure and names only: rule families dropped
MODES = (MODE_FULL, MODE_BASELINE)


@dataclass(frozen=True)
class Correspondence:
    e1: str
    e2: str
    relation: str = "="

    def as_dict(self) -> dict:
        return {"e1": self.e1, "e2": self.e2, "relation": self.relation}


@dataclass(frozen=True)
class Alignment:
    o1_tag: str
    o2_tag: str
    correspondences: frozenset[Correspondence]
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lefts = [c.e1 for c in self.correspondences]
        rights = [c.e2 for c in self.correspondences]
        if len(set(lefts)) != len(lefts) or len(set(rights)) != len(rights):
            raise ValidationError("alignment must be one-to-one on both sides")

    def __len__(self):
        return len(self.correspondences)

    def pairs(self) -> set[tuple[str, str]]:
        return {(c.e1, c.e2) for c in self.correspondences}

    def sorted_correspondences(self) -> list[Correspondence]:
        return sorted(self.correspondences, key=lambda c: (c.e1, c.e2))

    def to_json(self) -> str:
        doc = {
            "o1": self.o1_tag,
            "o2": self.o2_tag,
            "correspondences": [c.as_dict() for c in self.sorted_correspondences()],
            "provenance": self.provenance,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def _canonical_ref(ref, ontology: Ontology) -> str:
    """Resolve a reference-alignment ref (name or constructor object) to a
    canonical entity name, validating against the ontology."""
    if isinstance(ref, str):
        ontology.entity(ref)  # raises for unknown names
        return ref
    if isinstance(ref, dict) and set(ref) == {"op", "args"}:
        try:
            ctor = Constructor(ref["op"])
        except ValueError:
            raise ValidationError(f"unknown constructor {ref['op']!r}") from None
        comps = tuple(ontology.entity(_canonical_ref(a, ontology)) for a in ref["args"])
        return make_complex(ctor, comps).canonical_name
    raise ValidationError(f"bad entity reference {ref!r}")


def parse_reference_alignment(text: str, o1: Ontology, o2: Ontology) -> Alignment:
    """Reference file: JSON list of {"e1": ref, "e2": ref, "relation": "="}."""
    doc = json.loads(text)
    if not isinstance(doc, list):
        raise ValidationError("reference alignment must be a JSON list")
    corrs = set()
    for entry in doc:
        if not isinstance(entry, dict) or "e1" not in entry or "e2" not in entry:
            raise ValidationError(f"reference entry needs 'e1' and 'e2': {entry!r}")
        relation = entry.get("relation", "=")
        if relation != "=":
            raise ValidationError(f"only equivalence references are supported, got {relation!r}")
        corrs.add(Correspondence(_canonical_ref(entry["e1"], o1),
                                 _canonical_ref(entry["e2"], o2), "="))
    return Alignment(o1.tag, o2.tag, frozenset(corrs))


@dataclass(frozen=True)
class MatchTask:
    o1: Ontology
    o2: Ontology
    rules1: RuleStore
    rules2: RuleStore
    reference: Alignment | None = None


def load_task(o1_text: str, o2_text: str, rules1_text: str | None,
              rules2_text: str | None, reference_text: str | None = None) -> MatchTask:
    """Parse everything, register rule-mentioned complex concepts, saturate."""
    o1 = parse_ontology(o1_text)
    o2 = parse_ontology(o2_text)
    if o1.tag == o2.tag:
        raise ValidationError(f"the two ontologies must have distinct tags, both are {o1.tag!r}")
    rules1 = parse_rules(rules1_text, o1) if rules1_text is not None else empty_rule_store(o1)
    rules2 = parse_rules(rules2_text, o2) if rules2_text is not None else empty_rule_store(o2)
    o1 = saturate(o1.with_complex_concepts(enumerate_complex_concepts(o1, rules1)))
    o2 = saturate(o2.with_complex_concepts(enumerate_complex_concepts(o2, rules2)))
    reference = (parse_reference_alignment(reference_text, o1, o2)
                 if reference_text is not None else None)
    return MatchTask(o1, o2, rules1, rules2, reference)


@dataclass(frozen=True)
class MatchResult:
    alignment: Alignment
    assignment: Assignment
    problem: GroundProblem
    report: dict


def extract_alignment(problem: GroundProblem, assignment: Assignment,
                      o1_tag: str, o2_tag: str, provenance: dict) -> Alignment:
    corrs = frozenset(
        Correspondence(atom.candidate.e1.local_name, atom.candidate.e2.local_name, "=")
        for atom in problem.atoms if assignment.values[atom.id]
    )
    return Alignment(o1_tag, o2_tag, corrs, provenance)


def run_match(task: MatchTask, cfg: WeightConfig, mode: str = MODE_FULL,
              solver_mode: str = "auto", seed: int = 0, grid_n: int = 32,
              use_name_sim: bool = True, atom_budget: int = 40,
              max_flips: int = 10_000, restarts: int = 20) -> MatchResult:
    if mode not in MODES:
        raise ValidationError(f"unknown match mode {mode!r}; expected one of {MODES}")
    candidates = generate_candidates(task.o1, task.o2, cfg.tau,
                                     task.rules1, task.rules2, use_name_sim=use_name_sim)
    if mode == MODE_BASELINE:
        rules1, rules2 = empty_rule_store(task.o1), empty_rule_store(task.o2)
    else:
        rules1, rules2 = task.rules1, task.rules2
    problem = ground_problem(task.o1, task.o2, candidates, rules1, rules2, cfg,
                             grid_n=grid_n)
    assignment = solve(problem, mode=solver_mode, seed=seed, atom_budget=atom_budget,
                       max_flips=max_flips, restarts=restarts)
    objective, feasible, by_family = evaluate(problem, assignment.values)
    provenance = {
        "mode": mode,
        "solver": assignment.solver_mode,
        "seed": seed,
        "grid_n": grid_n,
        "use_name_sim": use_name_sim,
        "weights": cfg.to_dict(),
    }
    alignment = extract_alignment(problem, assignment, task.o1.tag, task.o2.tag, provenance)
    report = {
        "atoms": len(problem.atoms),
        "clauses": len(problem.clauses),
        "family_counts": problem.family_counts(),
        "family_satisfied_weight": by_family,
        "objective": objective,
        "feasible": feasible,
        "matches": len(alignment),
        "skipped_rule_tuples": problem.skipped_rule_tuples,
        "provenance": provenance,
    }
    return MatchResult(alignment, assignment, problem, report)
