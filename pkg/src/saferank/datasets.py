"""Ranking datasets: SVMlight-style ingestion, synthetic generation, splits.

A dataset is a list of queries, each with a candidate document set,
per-document feature vectors and graded relevance labels in {0..4}.
Datasets are immutable after construction and safe to share across runs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

VALID_GRADES = (0, 1, 2, 3, 4)
SPLIT_TAGS = ("train", "validation", "test", "full")


class SvmlightParseError(ValueError):
    """Malformed line in an SVMlight-style ranking file."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


@dataclass
class Query:
    """One query with its candidate documents.

    ``features`` has shape ``(num_docs, feature_dim)`` and ``grades`` holds
    integer relevance labels aligned with ``doc_ids``.
    """

    query_id: str
    doc_ids: tuple[str, ...]
    features: np.ndarray
    grades: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.grades = np.asarray(self.grades, dtype=np.int64)
        if len(self.doc_ids) == 0:
            raise ValueError(f"query {self.query_id!r} has no documents")
        if len(set(self.doc_ids)) != len(self.doc_ids):
            raise ValueError(f"query {self.query_id!r} has duplicate doc_ids")
        if self.features.ndim != 2 or self.features.shape[0] != len(self.doc_ids):
            raise ValueError(
                f"query {self.query_id!r}: features must be (num_docs, dim), "
                f"got {self.features.shape} for {len(self.doc_ids)} docs"
            )
        if self.grades.shape != (len(self.doc_ids),):
            raise ValueError(f"query {self.query_id!r}: grades misaligned with doc_ids")
        bad = (self.grades < VALID_GRADES[0]) | (self.grades > VALID_GRADES[-1])
        if bad.any():
            raise ValueError(
                f"query {self.query_id!r}: relevance grades must be in "
                f"{list(VALID_GRADES)}, got {self.grades[bad].tolist()}"
            )
        self.features.setflags(write=False)
        self.grades.setflags(write=False)

    @property
    def num_docs(self) -> int:
        return len(self.doc_ids)

    def doc_index(self, doc_id: str) -> int:
        try:
            return self.doc_ids.index(doc_id)
        except ValueError:
            raise KeyError(f"doc {doc_id!r} not in query {self.query_id!r}") from None


@dataclass
class RankingDataset:
    queries: list[Query]
    feature_dim: int
    split_tag: str = "full"

    def __post_init__(self):
        if self.split_tag not in SPLIT_TAGS:
            raise ValueError(f"unknown split_tag {self.split_tag!r}")
        seen = set()
        for q in self.queries:
            if q.query_id in seen:
                raise ValueError(f"duplicate query_id {q.query_id!r}")
            seen.add(q.query_id)
            if q.features.shape[1] != self.feature_dim:
                raise ValueError(
                    f"query {q.query_id!r}: feature dim {q.features.shape[1]} "
                    f"!= dataset feature_dim {self.feature_dim}"
                )
        self._by_id = {q.query_id: q for q in self.queries}

    @property
    def num_queries(self) -> int:
        return len(self.queries)

    def query(self, query_id: str) -> Query:
        try:
            return self._by_id[query_id]
        except KeyError:
            raise KeyError(f"query {query_id!r} not in dataset") from None

    def __iter__(self):
        return iter(self.queries)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a seeded synthetic ranking dataset.

    Latent document quality is ``w . x + noise`` with a seeded weight vector;
    grades come from quantile-thresholding the latent scores so every grade
    occurs for datasets of reasonable size. Equal specs yield bit-identical
    datasets.
    """

    num_queries: int
    docs_per_query: int
    feature_dim: int
    relevance_rule: str = "quintile"
    seed: int = 0
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.num_queries <= 0 or self.docs_per_query <= 0 or self.feature_dim <= 0:
            raise ValueError("num_queries, docs_per_query, feature_dim must be positive")
        if self.relevance_rule != "quintile":
            raise ValueError(f"unknown relevance_rule {self.relevance_rule!r}")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be nonnegative")


_FEATURE_TOKEN = re.compile(r"^(\d+):([^\s]+)$")


def load_svmlight_ranking(path) -> RankingDataset:
    """Parse an SVMlight-style ranking file into a dataset.

    Each line reads ``<grade> qid:<id> <idx>:<val> ...`` with 1-based feature
    indices; missing indices default to 0. Documents are grouped by qid in
    file order, and ``feature_dim`` is the maximum index seen anywhere.
    Text after ``#`` is ignored.
    """
    grouped: dict[str, list[tuple[int, dict[int, float]]]] = {}
    order: list[str] = []
    max_index = 0

    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) < 2:
                raise SvmlightParseError(line_number, "expected '<grade> qid:<id> ...'")
            try:
                grade = int(tokens[0])
            except ValueError:
                raise SvmlightParseError(
                    line_number, f"grade {tokens[0]!r} is not an integer"
                ) from None
            if grade not in VALID_GRADES:
                raise ValueError(
                    f"line {line_number}: grade {grade} outside {list(VALID_GRADES)}"
                )
            if not tokens[1].startswith("qid:") or len(tokens[1]) <= 4:
                raise SvmlightParseError(line_number, f"expected qid token, got {tokens[1]!r}")
            qid = tokens[1][4:]
            values: dict[int, float] = {}
            for token in tokens[2:]:
                match = _FEATURE_TOKEN.match(token)
                if match is None:
                    raise SvmlightParseError(line_number, f"bad feature token {token!r}")
                index = int(match.group(1))
                if index < 1:
                    raise SvmlightParseError(line_number, "feature indices are 1-based")
                try:
                    values[index] = float(match.group(2))
                except ValueError:
                    raise SvmlightParseError(
                        line_number, f"bad feature value in {token!r}"
                    ) from None
                max_index = max(max_index, index)
            if qid not in grouped:
                grouped[qid] = []
                order.append(qid)
            grouped[qid].append((grade, values))

    queries = []
    for qid in order:
        docs = grouped[qid]
        features = np.zeros((len(docs), max_index), dtype=np.float64)
        grades = np.zeros(len(docs), dtype=np.int64)
        for j, (grade, values) in enumerate(docs):
            grades[j] = grade
            for index, value in values.items():
                features[j, index - 1] = value
        doc_ids = tuple(f"d{j}" for j in range(len(docs)))
        queries.append(Query(qid, doc_ids, features, grades))
    return RankingDataset(queries, feature_dim=max_index)


def save_svmlight_ranking(dataset: RankingDataset, path) -> None:
    """Write a dataset in the SVMlight ranking format (sparse, full precision)."""
    with open(path, "w", encoding="utf-8") as handle:
        for query in dataset:
            for j in range(query.num_docs):
                parts = [str(int(query.grades[j])), f"qid:{query.query_id}"]
                row = query.features[j]
                for index in np.nonzero(row)[0]:
                    parts.append(f"{index + 1}:{row[index]!r}")
                handle.write(" ".join(parts) + "\n")


def generate_synthetic(spec: SyntheticSpec) -> RankingDataset:
    """Generate a seeded synthetic dataset per ``spec``.

    Deterministic: the same spec always produces the same dataset.
    """
    rng = np.random.default_rng(spec.seed)
    weights = rng.normal(size=spec.feature_dim) / np.sqrt(spec.feature_dim)
    features = rng.normal(size=(spec.num_queries, spec.docs_per_query, spec.feature_dim))
    latent = features @ weights + spec.noise_scale * rng.normal(
        size=(spec.num_queries, spec.docs_per_query)
    )
    thresholds = np.quantile(latent, [0.2, 0.4, 0.6, 0.8])
    grades = np.searchsorted(thresholds, latent, side="left")

    qid_width = len(str(spec.num_queries - 1))
    doc_width = len(str(spec.docs_per_query - 1))
    doc_ids = tuple(f"d{j:0{doc_width}d}" for j in range(spec.docs_per_query))
    queries = [
        Query(f"q{i:0{qid_width}d}", doc_ids, features[i], grades[i])
        for i in range(spec.num_queries)
    ]
    return RankingDataset(queries, feature_dim=spec.feature_dim)


def split(
    dataset: RankingDataset,
    fractions: tuple[float, float, float],
    seed: int = 0,
) -> tuple[RankingDataset, RankingDataset, RankingDataset]:
    """Partition queries into train/validation/test datasets.

    The partition is by query (estimators assume i.i.d. queries), uses
    largest-remainder apportionment of the fractions, and is deterministic
    under ``seed``. Every split receives at least one query.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ValueError("fractions must be (train, validation, test)")
    if any(f <= 0 for f in fractions):
        raise ValueError("fractions must be positive")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    n = dataset.num_queries
    if n < 3:
        raise ValueError(f"need at least 3 queries to form 3 splits, got {n}")

    exact = np.array(fractions) * n
    counts = np.floor(exact).astype(int)
    remainder = exact - counts
    for _ in range(n - counts.sum()):
        pick = int(np.argmax(remainder))
        counts[pick] += 1
        remainder[pick] = -1.0
    # Guarantee nonempty splits by stealing from the largest.
    while (counts == 0).any():
        counts[int(np.argmax(counts))] -= 1
        counts[int(np.argmin(counts))] += 1

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    bounds = np.cumsum(counts)[:-1]
    pieces = np.split(order, bounds)
    out = []
    for tag, indices in zip(("train", "validation", "test"), pieces):
        selected = [dataset.queries[i] for i in sorted(indices)]
        out.append(RankingDataset(selected, dataset.feature_dim, split_tag=tag))
    return tuple(out)
