"""Name similarity and candidate-pair generation.

Names are normalized before comparison: camelCase boundaries, underscores,
hyphens, and spaces all split the name into tokens, which are lowercased and
joined back without a separator ("writePaper" and "write_paper" both become
"writepaper"). Similarity is 1 - edit_distance / max_length on the normalized
forms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .model import ComplexConcept, Constructor, EntityId, Kind, Ontology

_CAMEL = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")
_SEPARATORS = re.compile(r"[_\-\s]+")


def normalize_name(name: str) -> str:
    tokens = _SEPARATORS.split(_CAMEL.sub(" ", name))
    return "".join(t.lower() for t in tokens if t)


def _edit_distance(a: str, b: str) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def levenshtein_sim(a: str, b: str) -> float:
    """Normalized-name similarity in [0, 1]; 1.0 when both names are empty."""
    na, nb = normalize_name(a), normalize_name(b)
    if not na and not nb:
        return 1.0
    return 1.0 - _edit_distance(na, nb) / max(len(na), len(nb))


def complex_sim(simple: EntityId, concept: ComplexConcept,
                resolver: dict[str, ComplexConcept] | None = None) -> float:
    """Similarity of a simple entity to a constructor-built concept.

    exists(p, b) compares against the filler b; union/intersection take the
    best component; every other constructor has no usable name and scores 0.
    """
    ctor = concept.constructor
    if ctor is Constructor.EXISTS:
        return levenshtein_sim(simple.local_name, concept.components[1].value_token)
    if ctor in (Constructor.UNION, Constructor.INTERSECTION):
        best = 0.0
        for comp in concept.components:
            if comp.kind is Kind.COMPLEX and resolver and comp.local_name in resolver:
                best = max(best, complex_sim(simple, resolver[comp.local_name], resolver))
            else:
                best = max(best, levenshtein_sim(simple.local_name, comp.value_token))
        return best
    return 0.0


@dataclass(frozen=True)
class Candidate:
    """A scored, kind-compatible entity pair that may enter the alignment."""

    e1: EntityId
    e2: EntityId
    sim: float
    kind: str  # "simple" or "complex"

    @property
    def key(self) -> tuple[str, str]:
        return (self.e1.local_name, self.e2.local_name)


def _pair_sim(o1: Ontology, o2: Ontology, e1: EntityId, e2: EntityId) -> float:
    c1 = o1.complex_concepts.get(e1.local_name) if e1.kind is Kind.COMPLEX else None
    c2 = o2.complex_concepts.get(e2.local_name) if e2.kind is Kind.COMPLEX else None
    if c1 is not None and c2 is not None:
        return 0.0  # no name measure for complex-complex pairs
    if c2 is not None:
        return complex_sim(e1, c2, o2.complex_concepts)
    if c1 is not None:
        return complex_sim(e2, c1, o1.complex_concepts)
    if e1.kind is Kind.NOMINAL_VALUE:
        return levenshtein_sim(e1.value_token, e2.value_token)
    return levenshtein_sim(e1.local_name, e2.local_name)


def generate_candidates(o1: Ontology, o2: Ontology, tau: float,
                        rules1=None, rules2=None,
                        use_name_sim: bool = True) -> list[Candidate]:
    """All kind-compatible pairs with similarity above tau, plus pairs where
    either entity takes part in a knowledge rule (those survive with any
    similarity, including zero), plus same-constructor complex pairs whose
    components are already covered (needed so constructor constraints have
    atoms to talk about). Deterministic order.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    parts1 = rules1.participants() if rules1 is not None else set()
    parts2 = rules2.participants() if rules2 is not None else set()

    chosen: dict[tuple[str, str], Candidate] = {}
    ents1, ents2 = o1.matchable_entities(), o2.matchable_entities()
    for e1 in ents1:
        k1 = o1.effective_kind(e1)
        for e2 in ents2:
            if o2.effective_kind(e2) is not k1:
                continue
            sim = _pair_sim(o1, o2, e1, e2) if use_name_sim else 0.0
            # tau = 0 disables the filter entirely (zero-similarity pairs stay in)
            if sim > tau or tau == 0.0 or e1 in parts1 or e2 in parts2:
                kind = "complex" if Kind.COMPLEX in (e1.kind, e2.kind) else "simple"
                chosen[(e1.local_name, e2.local_name)] = Candidate(e1, e2, sim, kind)

    # Same-constructor complex pairs become candidates once every component
    # pair is covered; nested constructors make this a fixpoint.
    changed = True
    while changed:
        changed = False
        for name1 in sorted(o1.complex_concepts):
            c1 = o1.complex_concepts[name1]
            for name2 in sorted(o2.complex_concepts):
                c2 = o2.complex_concepts[name2]
                if (name1, name2) in chosen or c1.constructor is not c2.constructor:
                    continue
                if len(c1.components) != len(c2.components):
                    continue
                if component_alignments(c1, c2, chosen.keys()):
                    e1, e2 = c1.derived_id(o1.tag), c2.derived_id(o2.tag)
                    chosen[(name1, name2)] = Candidate(e1, e2, 0.0, "complex")
                    changed = True

    return sorted(chosen.values(), key=lambda c: c.key)


def component_alignments(c1: ComplexConcept, c2: ComplexConcept,
                         covered) -> list[tuple[tuple[EntityId, EntityId], ...]]:
    """Ways to pair the components of two same-constructor concepts such that
    every component pair is a covered candidate. Commutative constructors
    consider every bijection; the rest pair positionally.
    """
    from itertools import permutations

    if c1.constructor is not c2.constructor or len(c1.components) != len(c2.components):
        return []
    if c1.constructor in (Constructor.UNION, Constructor.INTERSECTION):
        orders = permutations(c2.components)
    else:
        orders = [c2.components]
    out = []
    for order in orders:
        pairs = tuple(zip(c1.components, order))
        if all((a.local_name, b.local_name) in covered for a, b in pairs):
            out.append(pairs)
    return out
