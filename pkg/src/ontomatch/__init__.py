"""Schema-level ontology matching driven by name, structure, and
knowledge-rule evidence, solved as weighted-constraint MAP inference."""

from .errors import (BudgetExceededError, InconsistencyError,
                     InfeasibleProblemError, InputParseError, MatchError,
                     ValidationError)
from .evaluation import pr_sweep, run_ablation, score_alignment
from .grounding import (GroundAtom, GroundProblem, WeightConfig, WeightedClause,
                        dump_ground_problem, ground_problem, load_ground_problem)
from .mining import (Dataset, discretize, load_dataset, mine_association_rules,
                     mine_to_rules_file)
from .model import (Axiom, AxiomKind, ComplexConcept, Constructor, EntityId,
                    Kind, Ontology, enumerate_complex_concepts, make_complex,
                    parse_ontology, saturate, serialize_ontology)
from .pipeline import (Alignment, Correspondence, MatchTask, load_task,
                       parse_reference_alignment, run_match)
from .rules import (ConditionalRule, KnowledgeRule, LinearMap, RulePattern,
                    RuleStore, estimate_linear_map, parse_rules, rule_distance)
from .similarity import (Candidate, complex_sim, generate_candidates,
                         levenshtein_sim, normalize_name)
from .solver import Assignment, brute_force, evaluate, solve, solve_exact, solve_local

__version__ = "0.1.0"
