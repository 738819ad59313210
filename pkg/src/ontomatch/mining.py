"""Datasets, discretization, and association rule mining.

Datasets are CSV files whose header names data properties. A column is
numeric when every value parses as a float, nominal otherwise. Mining runs on
discrete data only; numeric columns are discretized first (quantile bins by
default), and each mined rule is serialized in the rules-file format with
numeric items carrying their bin as a parameter and nominal items referenced
as qualified ``attribute=value`` names.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from itertools import combinations

from .errors import InputParseError, ValidationError


@dataclass(frozen=True)
class Dataset:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]  # floats for numeric columns, strings otherwise
    numeric: tuple[bool, ...]

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise ValidationError("dataset column names must be distinct")
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValidationError("dataset rows must be rectangular")

    def column(self, i: int) -> list:
        return [row[i] for row in self.rows]


def load_dataset(text: str) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputParseError("dataset has no header row") from None
    raw_rows = [row for row in reader if row]
    if not raw_rows:
        raise ValidationError("dataset has no data rows")
    for lineno, row in enumerate(raw_rows, 2):
        if len(row) != len(header):
            raise InputParseError(f"row has {len(row)} cells, expected {len(header)}", line=lineno)
        if any(cell.strip() == "" for cell in row):
            raise InputParseError("empty cell", line=lineno)

    numeric = []
    for i in range(len(header)):
        try:
            for row in raw_rows:
                float(row[i])
            numeric.append(True)
        except ValueError:
            numeric.append(False)

    rows = tuple(
        tuple(float(cell) if is_num else cell.strip()
              for cell, is_num in zip(row, numeric))
        for row in raw_rows
    )
    return Dataset(tuple(h.strip() for h in header), rows, tuple(numeric))


# ---------------------------------------------------------------------------
# Discretization
# ---------------------------------------------------------------------------

def quantile_edges(values, n_bins: int) -> list[float]:
    """Right-closed cut points targeting equal bin counts. A run of tied
    values is atomic: each cut lands on the value whose cumulative count is
    closest to the ideal cut position, so ties all fall in the lower bin.
    """
    ordered = sorted(values)
    n = len(ordered)
    uniques, cumulative = [], []
    for v in ordered:
        if uniques and uniques[-1] == v:
            cumulative[-1] += 1
        else:
            uniques.append(v)
            cumulative.append((cumulative[-1] if cumulative else 0) + 1)
    if len(uniques) < n_bins:
        raise ValidationError(
            f"quantile discretization into {n_bins} bins needs at least {n_bins} "
            f"distinct values, got {len(uniques)}")
    edges = []
    for k in range(1, n_bins):
        ideal = k * n / n_bins
        best = min(range(len(uniques) - 1), key=lambda i: (abs(cumulative[i] - ideal), i))
        edges.append(uniques[best])
    return edges


def equal_width_edges(values, n_bins: int) -> list[float]:
    lo, hi = min(values), max(values)
    if lo == hi:
        raise ValidationError("equal-width discretization needs a nondegenerate range")
    return [lo + k * (hi - lo) / n_bins for k in range(1, n_bins)]


def assign_bins(values, edges) -> list[int]:
    """Bin ids 1..len(edges)+1 with right-closed intervals: bin(x) counts the
    edges strictly below x, so boundary values fall in the lower bin."""
    return [1 + sum(1 for e in edges if x > e) for x in values]


def discretize(ds: Dataset, n_bins: int, strategy: str = "quantile"):
    """Replace numeric columns by bin ids; returns the new dataset and the cut
    points per column so the same cuts can be replayed on other data."""
    if n_bins < 2:
        raise ValidationError(f"n_bins must be at least 2, got {n_bins}")
    if strategy not in ("quantile", "equal_width"):
        raise ValidationError(f"unknown discretization strategy {strategy!r}")
    edge_fn = quantile_edges if strategy == "quantile" else equal_width_edges

    per_column_edges: dict[str, list[float]] = {}
    new_columns = []
    for i, name in enumerate(ds.columns):
        values = ds.column(i)
        if ds.numeric[i]:
            edges = edge_fn(values, n_bins)
            per_column_edges[name] = edges
            new_columns.append(assign_bins(values, edges))
        else:
            new_columns.append(values)
    rows = tuple(zip(*new_columns))
    return Dataset(ds.columns, rows, ds.numeric), per_column_edges


# ---------------------------------------------------------------------------
# Association rule mining
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MinedRule:
    """An association rule over (column, value) items, with exact counts."""

    antecedent: tuple[tuple[str, object], ...]  # sorted items
    consequent: tuple[str, object]
    support_count: int       # count of antecedent + consequent
    antecedent_count: int
    n_rows: int

    @property
    def support(self) -> float:
        return self.support_count / self.n_rows

    @property
    def confidence(self) -> float:
        return self.support_count / self.antecedent_count

    @property
    def sort_key(self):
        return (len(self.antecedent), self.antecedent, self.consequent)


def mine_association_rules(ds: Dataset, min_conf: float, min_sup: float,
                           max_attrs: int) -> list[MinedRule]:
    """Apriori over row transactions of (column, value) items.

    Emits every rule with a nonempty antecedent of at most ``max_attrs``
    items, a single consequent item from a further attribute, support >=
    ``min_sup`` and confidence >= ``min_conf``. Output is sorted.
    """
    if not ds.rows:
        raise ValidationError("cannot mine an empty dataset")
    if not 0 < min_sup <= 1 or not 0 < min_conf <= 1:
        raise ValidationError("min_sup and min_conf must be in (0, 1]")
    if max_attrs < 2:
        raise ValidationError(f"max_attrs must be at least 2, got {max_attrs}")
    for i, is_num in enumerate(ds.numeric):
        if is_num and any(v != int(v) for v in ds.column(i)):
            raise ValidationError(
                f"column {ds.columns[i]!r} is not discrete; run discretize() first")

    n = len(ds.rows)
    min_count = max(1, math.ceil(min_sup * n))
    transactions = [
        frozenset((col, int(v) if is_num else v)
                  for col, v, is_num in zip(ds.columns, row, ds.numeric))
        for row in ds.rows
    ]
    # Collapse duplicate rows; counting then scales by multiplicity.
    weights: dict[frozenset, int] = {}
    for t in transactions:
        weights[t] = weights.get(t, 0) + 1

    max_size = max_attrs + 1  # antecedent attributes plus the consequent

    counts: dict[frozenset, int] = {}
    level = {}
    for t, w in weights.items():
        for item in t:
            key = frozenset([item])
            level[key] = level.get(key, 0) + w
    level = {k: c for k, c in level.items() if c >= min_count}
    counts.update(level)

    size = 1
    while level and size < max_size:
        size += 1
        frequent_prev = set(level)
        candidates = set()
        for a, b in combinations(sorted(frequent_prev, key=sorted), 2):
            union = a | b
            if len(union) != size:
                continue
            if len({col for col, _ in union}) != size:
                continue  # one attribute cannot take two values in a row
            if all(frozenset(sub) in frequent_prev for sub in combinations(union, size - 1)):
                candidates.add(union)
        level = {}
        for t, w in weights.items():
            if len(t) < size:
                continue
            for c in candidates:
                if c <= t:
                    level[c] = level.get(c, 0) + w
        level = {k: c for k, c in level.items() if c >= min_count}
        counts.update(level)

    rules = []
    for itemset, count in counts.items():
        if len(itemset) < 2:
            continue
        for consequent in itemset:
            antecedent = itemset - {consequent}
            if len(antecedent) > max_attrs:
                continue
            base = counts.get(antecedent)
            if base is None:
                continue
            if count / base >= min_conf:
                rules.append(MinedRule(tuple(sorted(antecedent)), consequent, count, base, n))
    rules.sort(key=lambda r: r.sort_key)
    return rules


def mined_rule_to_json(rule: MinedRule, numeric_columns) -> str:
    """One rules-file line for a mined rule. Numeric items reference the
    attribute and carry the bin as a parameter; nominal items reference the
    qualified value entity."""
    args, params = [], []
    for col, value in (*rule.antecedent, rule.consequent):
        if col in numeric_columns:
            args.append(col)
            params.append(value)
        else:
            args.append(f"{col}={value}")
    doc = {"pattern": "assoc_implies", "args": args, "p": rule.confidence}
    if params:
        doc["params"] = params
    return json.dumps(doc, sort_keys=True)


def mine_to_rules_file(ds: Dataset, min_conf: float, min_sup: float,
                       max_attrs: int, n_bins: int,
                       strategy: str = "quantile") -> str:
    """Discretize, mine, serialize: the full dataset-to-rules-file pipeline."""
    discrete, _ = discretize(ds, n_bins, strategy)
    mined = mine_association_rules(discrete, min_conf, min_sup, max_attrs)
    numeric_columns = {c for c, is_num in zip(ds.columns, ds.numeric) if is_num}
    return "".join(mined_rule_to_json(r, numeric_columns) + "\n" for r in mined)
