"""Command-line entry point.

Subcommands wire the full pipeline: ``match`` (ontologies + rules -> alignment
and report), ``mine`` (dataset -> association rules file), ``eval`` (predicted
vs reference alignment -> metrics), and ``sweep`` (bias-weight sweep -> CSV
curve). All weights and paths live in a JSON config file; every field can be
overridden by a flag. Outputs are byte-deterministic for a fixed config and
seed.

Exit codes: 0 success, 2 input parse/validation error, 3 infeasible hard
constraints, 4 solver budget exceeded, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import (BudgetExceededError, InconsistencyError,
                     InfeasibleProblemError, InputParseError, MatchError,
                     ValidationError)
from .evaluation import pr_sweep, run_ablation, score_alignment, sweep_csv
from .grounding import WeightConfig, dump_ground_problem
from .mining import load_dataset, mine_to_rules_file
from .pipeline import MODE_FULL, MODES, load_task, parse_reference_alignment

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4


@dataclass(frozen=True)
class RunConfig:
    """Paths, weights, and solver/mining settings for one run."""

    ontology1: str = ""
    ontology2: str = ""
    rules1: str | None = None
    rules2: str | None = None
    dataset1: str | None = None
    dataset2: str | None = None
    reference: str | None = None
    weights: WeightConfig = field(default_factory=WeightConfig)
    solver: str = "auto"        # exact | local | auto
    mode: str = MODE_FULL       # knowledge | baseline
    seed: int = 0
    grid_n: int = 32
    use_name_sim: bool = True
    atom_budget: int = 40
    max_flips: int = 10_000
    restarts: int = 20
    min_conf: float = 0.9
    min_sup: float = 0.001
    max_attrs: int = 3
    n_bins: int = 5

    def __post_init__(self):
        if self.solver not in ("exact", "local", "auto"):
            raise ValidationError(f"unknown solver {self.solver!r}")
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["weights"] = self.weights.to_dict()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        unknown = set(doc) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        if "weights" in doc:
            doc["weights"] = WeightConfig.from_dict(doc["weights"])
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _read(path: str | None) -> str | None:
    if path is None:
        return None
    p = Path(path)
    if not p.exists():
        raise InputParseError(f"file not found: {path}")
    return p.read_text(encoding="utf-8")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_dict(json.loads(_read(args.config))) if args.config else RunConfig()
    overrides = {}
    for name in ("ontology1", "ontology2", "rules1", "rules2", "dataset1", "dataset2",
                 "reference", "solver", "mode", "seed", "grid_n", "atom_budget",
                 "max_flips", "restarts", "min_conf", "min_sup", "max_attrs", "n_bins"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "no_name_sim", False):
        overrides["use_name_sim"] = False
    weight_overrides = {}
    for name in ("tau", "d0", "bias_w", "w_subclass", "w_domain_range", "w_assoc",
                 "w_constructor"):
        value = getattr(args, name, None)
        if value is not None:
            weight_overrides[name] = value
    if weight_overrides:
        overrides["weights"] = replace(cfg.weights, **weight_overrides)
    return replace(cfg, **overrides) if overrides else cfg


def _build_task(cfg: RunConfig, require_rules_warning=True):
    missing = []
    rules1 = _read(cfg.rules1) if cfg.rules1 else None
    rules2 = _read(cfg.rules2) if cfg.rules2 else None
    if cfg.mode == MODE_FULL:
        if cfg.rules1 and rules1 is None:
            missing.append(cfg.rules1)
        if cfg.rules2 and rules2 is None:
            missing.append(cfg.rules2)
    if require_rules_warning and cfg.mode == MODE_FULL and rules1 is None and rules2 is None:
        print("warning: no rules files given; knowledge mode degenerates to the baseline",
              file=sys.stderr)
    return load_task(_read(cfg.ontology1), _read(cfg.ontology2), rules1, rules2,
                     _read(cfg.reference) if cfg.reference else None)


def _run_kwargs(cfg: RunConfig) -> dict:
    return {
        "mode": cfg.mode,
        "solver_mode": cfg.solver,
        "seed": cfg.seed,
        "grid_n": cfg.grid_n,
        "use_name_sim": cfg.use_name_sim,
        "atom_budget": cfg.atom_budget,
        "max_flips": cfg.max_flips,
        "restarts": cfg.restarts,
    }


def cmd_match(args) -> int:
    cfg = _load_config(args)
    task = _build_task(cfg)
    result = run_ablation(task, cfg.mode, cfg.weights,
                          **{k: v for k, v in _run_kwargs(cfg).items() if k != "mode"})
    Path(args.out).write_text(result.alignment.to_json() + "\n", encoding="utf-8")
    report = dict(result.report)
    if task.reference is not None:
        p, r, f1 = score_alignment(result.alignment, task.reference)
        report["scores"] = {"precision": p, "recall": r, "f1": f1}
    report["config"] = cfg.to_dict()
    report_path = args.report or (str(Path(args.out)) + ".report.json")
    Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")
    if args.dump_ground:
        Path(args.dump_ground).write_text(dump_ground_problem(result.problem),
                                          encoding="utf-8")
    print(f"matched {len(result.alignment)} pairs "
          f"(objective {result.report['objective']:.6f}, {result.report['atoms']} atoms, "
          f"{result.report['clauses']} clauses)")
    return EXIT_OK


def cmd_mine(args) -> int:
    cfg = _load_config(args)
    dataset_path = args.dataset or cfg.dataset1
    if not dataset_path:
        raise ValidationError("mine needs a dataset (--dataset or config dataset1)")
    ds = load_dataset(_read(dataset_path))
    text = mine_to_rules_file(ds, cfg.min_conf, cfg.min_sup, cfg.max_attrs, cfg.n_bins)
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"mined {len(text.splitlines())} rules from {dataset_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    task = _build_task(replace(cfg, reference=args.ref), require_rules_warning=False)
    pred = parse_reference_alignment(_read(args.pred), task.o1, task.o2)
    p, r, f1 = score_alignment(pred, task.reference)
    print(json.dumps({"precision": p, "recall": r, "f1": f1}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    task = _build_task(cfg)
    weights = [float(tok) for tok in args.bias_weights.split(",")]
    points = pr_sweep(task, weights, cfg.weights,
                      **{k: v for k, v in _run_kwargs(cfg).items()})
    csv_text = sweep_csv(points)
    Path(args.out).write_text(csv_text, encoding="utf-8")
    print(csv_text, end="")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--ontology1", "--o1", dest="ontology1")
    p.add_argument("--ontology2", "--o2", dest="ontology2")
    p.add_argument("--rules1")
    p.add_argument("--rules2")
    p.add_argument("--reference")
    p.add_argument("--solver", choices=["exact", "local", "auto"])
    p.add_argument("--mode", choices=list(MODES))
    p.add_argument("--seed", type=int)
    p.add_argument("--grid-n", dest="grid_n", type=int)
    p.add_argument("--atom-budget", dest="atom_budget", type=int)
    p.add_argument("--max-flips", dest="max_flips", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--d0", type=float)
    p.add_argument("--bias", dest="bias_w", type=float)
    p.add_argument("--no-name-sim", action="store_true",
                   help="ignore name similarity entirely (every similarity becomes 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontomatch",
        description="Ontology matching with name, structure, and knowledge-rule evidence.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="run the full pipeline and write an alignment")
    _add_common(p)
    p.add_argument("--out", required=True, help="alignment JSON output path")
    p.add_argument("--report", help="report JSON path (default: <out>.report.json)")
    p.add_argument("--dump-ground", help="also write the ground problem in text form")
    p.set_defaults(fn=cmd_match)

    p = sub.add_parser("mine", help="discretize a dataset and mine association rules")
    p.add_argument("--config")
    p.add_argument("--dataset", help="CSV dataset (defaults to config dataset1)")
    p.add_argument("--out", required=True, help="rules JSONL output path")
    p.add_argument("--min-conf", dest="min_conf", type=float)
    p.add_argument("--min-sup", dest="min_sup", type=float)
    p.add_argument("--max-attrs", dest="max_attrs", type=int)
    p.add_argument("--bins", dest="n_bins", type=int)
    p.set_defaults(fn=cmd_mine)

    p = sub.add_parser("eval", help="score a predicted alignment against a reference")
    _add_common(p)
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="trace a precision/recall curve over bias weights")
    _add_common(p)
    p.add_argument("--bias-weights", required=True,
                   help="comma-separated ascending weights, e.g. '-1,-0.5,0,0.5,1'")
    p.add_argument("--out", required=True, help="curve CSV output path")
    p.set_defaults(fn=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InputParseError, ValidationError, InconsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except MatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
