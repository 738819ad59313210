"""MAP inference over ground problems.

Three solvers share one objective convention (maximize the total weight of
satisfied soft clauses subject to every hard clause) and one tie-break: among
assignments whose objectives agree within 1e-9, the one whose sorted tuple of
true atom ids is lexicographically smallest wins.

* ``solve_exact``  - branch and bound; admissible bound = total weight of the
  soft clauses a partial assignment has not yet made unsatisfiable.
* ``brute_force``  - vectorized exhaustive enumeration, the test oracle.
* ``solve_local``  - stochastic local search in the WalkSAT family that never
  leaves the hard-feasible region (the all-false assignment is feasible for
  every grounded problem and is the starting point).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, InfeasibleProblemError, MatchError
from .grounding import GroundProblem, WeightedClause

TIE_TOL = 1e-9


@dataclass(frozen=True)
class Assignment:
    values: tuple[bool, ...]
    objective: float
    feasible: bool
    solver_mode: str

    def true_atom_ids(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.values) if v)


def evaluate(problem: GroundProblem, values) -> tuple[float, bool, dict[str, float]]:
    """Recompute (objective, feasible, satisfied weight per clause family)."""
    values = list(values)
    objective = 0.0
    feasible = True
    by_family: dict[str, float] = {}
    for clause in problem.clauses:
        sat = clause.satisfied(values)
        if clause.hard:
            feasible &= sat
        elif sat:
            objective += clause.weight
            by_family[clause.origin] = by_family.get(clause.origin, 0.0) + clause.weight
    return objective, feasible, dict(sorted(by_family.items()))


def _trueset_less(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    return a < b


def _better(obj_a, set_a, obj_b, set_b) -> bool:
    """Is (obj_a, set_a) a better solution than (obj_b, set_b)?"""
    if obj_a > obj_b + TIE_TOL:
        return True
    if obj_a < obj_b - TIE_TOL:
        return False
    return _trueset_less(set_a, set_b)


# ---------------------------------------------------------------------------
# Brute force
# ---------------------------------------------------------------------------

def brute_force(problem: GroundProblem, max_atoms: int = 22) -> Assignment:
    """Exhaustive enumeration. Reports feasible=False (with the all-false
    assignment) when the hard clauses are unsatisfiable."""
    n = len(problem.atoms)
    if n > max_atoms:
        raise BudgetExceededError(f"brute force limited to {max_atoms} atoms, problem has {n}")
    size = 1 << n
    codes = np.arange(size, dtype=np.int64)

    def column(atom_id: int) -> np.ndarray:
        return (codes >> atom_id) & 1 == 1

    objective = np.zeros(size, dtype=np.float64)
    feasible = np.ones(size, dtype=bool)
    for clause in problem.clauses:
        if clause.kind == "or":
            sat = np.zeros(size, dtype=bool)
            for a, pol in clause.literals:
                sat |= column(a) == pol
        elif clause.kind == "and":
            sat = np.ones(size, dtype=bool)
            for a, pol in clause.literals:
                sat &= column(a) == pol
        else:  # imp
            (a0, pol0), *body = clause.literals
            sat = np.ones(size, dtype=bool)
            for a, pol in body:
                sat &= column(a) == pol
            sat |= column(a0) != pol0
        if clause.hard:
            feasible &= sat
        else:
            objective += clause.weight * sat

    if not feasible.any():
        values = (False,) * n
        obj, _, _ = evaluate(problem, values)
        return Assignment(values, obj, False, "brute")

    best_obj = float(objective[feasible].max())
    tie_codes = np.nonzero(feasible & (objective >= best_obj - TIE_TOL))[0]
    best_code = None
    best_set = None
    for code in tie_codes.tolist():
        trueset = tuple(i for i in range(n) if (code >> i) & 1)
        if best_set is None or _trueset_less(trueset, best_set):
            best_set = trueset
            best_code = code
    values = tuple(bool((best_code >> i) & 1) for i in range(n))
    obj, ok, _ = evaluate(problem, values)
    assert ok
    return Assignment(values, obj, True, "brute")


# ---------------------------------------------------------------------------
# Exact branch and bound
# ---------------------------------------------------------------------------

class _Search:
    def __init__(self, problem: GroundProblem):
        self.problem = problem
        self.n = len(problem.atoms)
        self.clauses = problem.clauses
        unit_weight = [0.0] * self.n
        unit_gain = [0.0] * self.n
        for c in problem.soft_clauses():
            if len(c.literals) == 1:
                a, pol = c.literals[0]
                unit_weight[a] += c.weight
                unit_gain[a] += c.weight if pol else -c.weight
        self.order = sorted(range(self.n), key=lambda a: (-unit_weight[a], a))
        self.preferred = [unit_gain[a] >= 0 for a in range(self.n)]

    def clause_state(self, clause: WeightedClause, values) -> str:
        """'sat', 'unsat', or 'open' under a partial assignment (None = free)."""
        if clause.kind == "or":
            any_open = False
            for a, pol in clause.literals:
                v = values[a]
                if v is None:
                    any_open = True
                elif v == pol:
                    return "sat"
            return "open" if any_open else "unsat"
        if clause.kind == "and":
            any_open = False
            for a, pol in clause.literals:
                v = values[a]
                if v is None:
                    any_open = True
                elif v != pol:
                    return "unsat"
            return "open" if any_open else "sat"
        (a0, pol0), *body = clause.literals
        head = values[a0]
        if head is not None and head != pol0:
            return "sat"  # premise already falsified
        body_state = "sat"
        for a, pol in body:
            v = values[a]
            if v is None:
                if body_state == "sat":
                    body_state = "open"
            elif v != pol:
                body_state = "unsat"
                break
        if body_state == "sat":
            return "sat"
        if head is None:
            return "open"  # the premise can still be falsified
        return body_state

    def hard_violated(self, values) -> bool:
        for c in self.clauses:
            if c.hard and self.clause_state(c, values) == "unsat":
                return True
        return False

    def soft_bound(self, values) -> float:
        total = 0.0
        for c in self.clauses:
            if not c.hard and self.clause_state(c, values) != "unsat":
                total += c.weight
        return total


def solve_exact(problem: GroundProblem, atom_budget: int = 40) -> Assignment:
    """Globally optimal assignment; ties broken toward the lexicographically
    smallest set of true atoms. Raises InfeasibleProblemError (with an unsat
    core) when the hard clauses cannot be satisfied, BudgetExceededError when
    the problem has more atoms than the budget allows."""
    n = len(problem.atoms)
    if n > atom_budget:
        raise BudgetExceededError(
            f"exact solver budget is {atom_budget} atoms, problem has {n}")

    search = _Search(problem)
    best = {"obj": None, "values": None}
    values: list = [None] * n

    def dfs(depth: int):
        if search.hard_violated(values):
            return
        bound = search.soft_bound(values)
        if best["obj"] is not None and bound <= best["obj"]:
            return
        if depth == n:
            obj, ok, _ = evaluate(problem, values)
            if ok and (best["obj"] is None or obj > best["obj"]):
                best["obj"] = obj
                best["values"] = list(values)
            return
        atom = search.order[depth]
        first = search.preferred[atom]
        for value in (first, not first):
            values[atom] = value
            dfs(depth + 1)
        values[atom] = None

    dfs(0)

    if best["obj"] is None:
        raise InfeasibleProblemError(_unsat_core(problem))

    trueset = _lex_min_optimal(problem, search, best["obj"] - TIE_TOL)
    final = tuple(i in trueset for i in range(n))
    obj, ok, _ = evaluate(problem, final)
    assert ok
    return Assignment(final, obj, True, "exact")


def _lex_min_optimal(problem: GroundProblem, search: _Search, threshold: float) -> frozenset:
    """First (= lexicographically smallest) set of true atoms, in subset-trie
    preorder, whose assignment is feasible with objective >= threshold."""
    n = len(problem.atoms)

    def leaf_ok(chosen: list[int]) -> bool:
        vals = [False] * n
        for i in chosen:
            vals[i] = True
        obj, ok, _ = evaluate(problem, vals)
        return ok and obj >= threshold

    def promising(chosen: list[int], next_free: int) -> bool:
        vals: list = [None] * n
        for i in range(next_free):
            vals[i] = False
        for i in chosen:
            vals[i] = True
        if search.hard_violated(vals):
            return False
        return search.soft_bound(vals) >= threshold

    def visit(chosen: list[int], start: int):
        if leaf_ok(chosen):
            return frozenset(chosen)
        for j in range(start, n):
            chosen.append(j)
            if promising(chosen, j + 1):
                found = visit(chosen, j + 1)
                if found is not None:
                    return found
            chosen.pop()
        return None

    found = visit([], 0)
    assert found is not None, "phase 1 produced an optimum phase 2 cannot reach"
    return found


def _unsat_core(problem: GroundProblem) -> list[WeightedClause]:
    """Deletion-minimized unsatisfiable subset of the hard clauses."""
    n = len(problem.atoms)
    core = [c for c in problem.hard_clauses()]
    i = 0
    while i < len(core):
        trial = core[:i] + core[i + 1:]
        if _dpll_sat([c.literals for c in trial], n):
            i += 1
        else:
            core = trial
    return core


def _dpll_sat(clauses, n) -> bool:
    """Satisfiability of plain disjunctions with unit propagation."""
    assignment: dict[int, bool] = {}

    def propagate(clauses):
        clauses = list(clauses)
        changed = True
        while changed:
            changed = False
            next_clauses = []
            for lits in clauses:
                unassigned = []
                sat = False
                for a, pol in lits:
                    if a in assignment:
                        if assignment[a] == pol:
                            sat = True
                            break
                    else:
                        unassigned.append((a, pol))
                if sat:
                    continue
                if not unassigned:
                    return None
                if len(unassigned) == 1:
                    a, pol = unassigned[0]
                    assignment[a] = pol
                    changed = True
                else:
                    next_clauses.append(unassigned)
            clauses = next_clauses
        return clauses

    def solve(clauses) -> bool:
        clauses = propagate(clauses)
        if clauses is None:
            return False
        if not clauses:
            return True
        a, pol = clauses[0][0]
        for value in (pol, not pol):
            saved = dict(assignment)
            assignment[a] = value
            if solve(clauses):
                return True
            assignment.clear()
            assignment.update(saved)
        return False

    return solve([list(c) for c in clauses])


# ---------------------------------------------------------------------------
# Local search
# ---------------------------------------------------------------------------

_OR_LIT, _AND_LIT, _IMP_HEAD, _IMP_BODY = range(4)


class _LocalState:
    """Incremental clause bookkeeping for single-atom flips."""

    def __init__(self, problem: GroundProblem):
        self.problem = problem
        n = len(problem.atoms)
        self.values = [False] * n
        self.clauses = problem.clauses
        self.occurrences: list[list[tuple[int, int, bool]]] = [[] for _ in range(n)]
        self.or_sat = []      # per clause: satisfied literal count (or kind)
        self.bad = []         # per clause: unsatisfied AND/body literal count
        self.head_on = []     # per clause: 1 if imp premise currently holds
        self.is_sat = []
        self.unsat_soft: list[int] = []
        self.unsat_pos: dict[int, int] = {}
        self.objective = 0.0

        for ci, clause in enumerate(self.clauses):
            or_sat = bad = head_on = 0
            if clause.kind == "or":
                for a, pol in clause.literals:
                    self.occurrences[a].append((ci, _OR_LIT, pol))
                    or_sat += (self.values[a] == pol)
            elif clause.kind == "and":
                for a, pol in clause.literals:
                    self.occurrences[a].append((ci, _AND_LIT, pol))
                    bad += (self.values[a] != pol)
            else:
                (a0, pol0), *body = clause.literals
                self.occurrences[a0].append((ci, _IMP_HEAD, pol0))
                head_on = int(self.values[a0] == pol0)
                for a, pol in body:
                    self.occurrences[a].append((ci, _IMP_BODY, pol))
                    bad += (self.values[a] != pol)
            self.or_sat.append(or_sat)
            self.bad.append(bad)
            self.head_on.append(head_on)
            sat = self._clause_sat(ci)
            self.is_sat.append(sat)
            if sat and not clause.hard:
                self.objective += clause.weight
            if not sat and not clause.hard:
                self.unsat_pos[ci] = len(self.unsat_soft)
                self.unsat_soft.append(ci)

    def _clause_sat(self, ci: int) -> bool:
        kind = self.clauses[ci].kind
        if kind == "or":
            return self.or_sat[ci] > 0
        if kind == "and":
            return self.bad[ci] == 0
        return self.head_on[ci] == 0 or self.bad[ci] == 0

    def flip_breaks_hard(self, atom: int) -> bool:
        value = self.values[atom]
        for ci, role, pol in self.occurrences[atom]:
            clause = self.clauses[ci]
            if not clause.hard:
                continue
            # hard clauses are disjunctions
            holds_now = value == pol
            if holds_now and self.or_sat[ci] == 1:
                return True
        return False

    def flip_delta(self, atom: int) -> float:
        """Objective change if ``atom`` were flipped."""
        value = self.values[atom]
        delta = 0.0
        for ci, role, pol in self.occurrences[atom]:
            clause = self.clauses[ci]
            if clause.hard:
                continue
            before = self.is_sat[ci]
            after = self._sat_after_flip(ci, role, pol, value)
            if after != before:
                delta += clause.weight if after else -clause.weight
        return delta

    def _sat_after_flip(self, ci, role, pol, old_value) -> bool:
        holds_before = old_value == pol
        diff = -1 if holds_before else 1
        if role == _OR_LIT:
            return self.or_sat[ci] + diff > 0
        if role == _AND_LIT:
            return self.bad[ci] - diff == 0
        if role == _IMP_BODY:
            return self.head_on[ci] == 0 or self.bad[ci] - diff == 0
        return (self.head_on[ci] + diff) == 0 or self.bad[ci] == 0

    def flip(self, atom: int):
        value = self.values[atom]
        self.values[atom] = not value
        for ci, role, pol in self.occurrences[atom]:
            holds_before = value == pol
            diff = -1 if holds_before else 1
            if role == _OR_LIT:
                self.or_sat[ci] += diff
            elif role in (_AND_LIT, _IMP_BODY):
                self.bad[ci] -= diff
            else:
                self.head_on[ci] += diff
            clause = self.clauses[ci]
            sat = self._clause_sat(ci)
            if sat != self.is_sat[ci]:
                self.is_sat[ci] = sat
                if not clause.hard:
                    self.objective += clause.weight if sat else -clause.weight
                    if sat:
                        self._unsat_remove(ci)
                    else:
                        self._unsat_add(ci)

    def _unsat_add(self, ci: int):
        self.unsat_pos[ci] = len(self.unsat_soft)
        self.unsat_soft.append(ci)

    def _unsat_remove(self, ci: int):
        pos = self.unsat_pos.pop(ci)
        last = self.unsat_soft.pop()
        if last != ci:
            self.unsat_soft[pos] = last
            self.unsat_pos[last] = pos


def solve_local(problem: GroundProblem, seed: int, max_flips: int = 10_000,
                restarts: int = 20, noise: float = 0.1,
                stall_limit: int | None = None) -> Assignment:
    """Best feasible assignment found by seeded stochastic local search.

    Deterministic for a fixed seed; restart r uses seed + r. Each move picks
    an unsatisfied soft clause and flips one of its atoms, rejecting flips
    that would violate a hard clause. A restart ends after ``max_flips``
    flips, after ``stall_limit`` flips without improvement, or when every
    soft clause is satisfied.
    """
    if max_flips < 1 or restarts < 1:
        raise MatchError("max_flips and restarts must be at least 1")
    n = len(problem.atoms)
    if stall_limit is None:
        stall_limit = max(200, 30 * n)

    all_false_obj, all_false_ok, _ = evaluate(problem, [False] * n)
    if not all_false_ok:
        raise MatchError(
            "internal error: the all-false assignment violates a hard clause; "
            "grounding guarantees this cannot happen")

    best_values = (False,) * n
    best_obj = all_false_obj
    best_set: tuple[int, ...] = ()
    total_soft = problem.total_soft_weight()

    for r in range(restarts):
        rng = random.Random(seed + r)
        state = _LocalState(problem)
        since_improved = 0
        for _ in range(max_flips):
            if not state.unsat_soft:
                break  # every soft clause satisfied: global optimum
            ci = state.unsat_soft[rng.randrange(len(state.unsat_soft))]
            clause = state.clauses[ci]
            atoms = [a for a, _ in clause.literals]
            if rng.random() < noise:
                candidates = [a for a in atoms if not state.flip_breaks_hard(a)]
                if not candidates:
                    continue
                chosen = candidates[rng.randrange(len(candidates))]
            else:
                chosen, chosen_delta = None, None
                for a in atoms:
                    if state.flip_breaks_hard(a):
                        continue
                    delta = state.flip_delta(a)
                    if chosen is None or delta > chosen_delta:
                        chosen, chosen_delta = a, delta
                if chosen is None:
                    continue
            state.flip(chosen)
            since_improved += 1
            if state.objective > best_obj + TIE_TOL:
                current = tuple(state.values)
                best_values, best_obj = current, state.objective
                best_set = tuple(i for i, v in enumerate(current) if v)
                since_improved = 0
            elif state.objective >= best_obj - TIE_TOL:
                current_set = tuple(i for i, v in enumerate(state.values) if v)
                if _trueset_less(current_set, best_set):
                    best_values = tuple(state.values)
                    best_set = current_set
                    since_improved = 0
            if since_improved > stall_limit:
                break
        if best_obj >= total_soft - TIE_TOL:
            break  # nothing left to gain from more restarts

    obj, ok, _ = evaluate(problem, best_values)
    assert ok
    return Assignment(tuple(best_values), obj, True, "local")


def solve(problem: GroundProblem, mode: str = "auto", seed: int = 0,
          atom_budget: int = 40, max_flips: int = 10_000,
          restarts: int = 20) -> Assignment:
    """Dispatch: exact when the problem fits the budget (or on request),
    local search otherwise."""
    if mode not in ("auto", "exact", "local"):
        raise MatchError(f"unknown solver mode {mode!r}")
    if mode == "exact" or (mode == "auto" and len(problem.atoms) <= atom_budget):
        return solve_exact(problem, atom_budget=atom_budget)
    return solve_local(problem, seed, max_flips=max_flips, restarts=restarts)
