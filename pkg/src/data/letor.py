"""
Learning-to-Rank Generalization Workbench
Data module - reading and writing LETOR / SVMlight ranking files

    <relevance> qid:<id> <index>:<value> ... [# comment]

Indices are 1-based; missing indices are zero.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.core.errors import LetorFormatError
from src.core.ranking import Dataset, QueryInstance

logger = logging.getLogger(__name__)


@dataclass
class LetorRecord:
    relevance: int
    query_id: str
    features: dict = field(default_factory=dict)
    line_number: int = 0


@dataclass(frozen=True)
class LetorCorpus:
    dataset: Dataset
    query_ids: tuple


def parse_line(line, line_number):
    """Parse one line; blank and comment-only lines give None"""
    content = line.split("#", 1)[0].strip()
    if not content:
        return None
    tokens = content.split()
    try:
        relevance = int(tokens[0])
    except ValueError:
        raise LetorFormatError(f"relevance {tokens[0]!r} is not an integer", line_number) from None
    if relevance < 0:
        raise LetorFormatError(f"relevance must be nonnegative, got {relevance}", line_number)
    if len(tokens) < 2 or not tokens[1].startswith("qid:") or len(tokens[1]) == 4:
        raise LetorFormatError("expected 'qid:<id>' after the relevance", line_number)

    record = LetorRecord(relevance, tokens[1][4:], line_number=line_number)
    for token in tokens[2:]:
        index, sep, value = token.partition(":")
        try:
            if not sep:
                raise ValueError
            index, value = int(index), float(value)
        except ValueError:
            raise LetorFormatError(f"malformed feature token {token!r}", line_number) from None
        if index < 1:
            raise LetorFormatError(f"feature index must be >= 1, got {index}", line_number)
        if not math.isfinite(value):
            raise LetorFormatError(f"feature {index} is not finite", line_number)
        if index in record.features:
            raise LetorFormatError(f"feature {index} appears twice", line_number)
        record.features[index] = value
    return record


def parse_letor(stream):
    """Group documents by qid in order of first appearance into a Dataset

    The feature dimension is the largest index seen anywhere in the input.
    """
    if isinstance(stream, str):
        stream = stream.splitlines()
    records = [r for n, line in enumerate(stream, start=1) if (r := parse_line(line, n)) is not None]
    if not records:
        raise LetorFormatError("no documents found")
    d = max((max(r.features) for r in records if r.features), default=0)
    if d == 0:
        raise LetorFormatError("no feature values found")

    groups = {}
    for record in records:
        groups.setdefault(record.query_id, []).append(record)

    instances = []
    for qid, docs in groups.items():
        X = np.zeros((len(docs), d))
        for row, doc in enumerate(docs):
            for index, value in doc.features.items():
                X[row, index - 1] = value
        y = np.array([doc.relevance for doc in docs], dtype=np.float64)
        instances.append(QueryInstance(X, y, qid=qid))

    logger.info("parsed %d documents in %d queries (d=%d)", len(records), len(instances), d)
    return LetorCorpus(Dataset(tuple(instances)), tuple(groups))


def read_letor(path):
    with open(path, encoding="utf-8") as handle:
        return parse_letor(handle)


def serialize_letor(dataset, query_ids=None):
    """Write every feature in ascending index order with 9 significant digits"""
    lines = []
    for i, inst in enumerate(dataset):
        qid = query_ids[i] if query_ids is not None else (inst.qid or str(i + 1))
        for x, y in zip(inst.features, inst.labels):
            features = " ".join(f"{j}:{value:.9g}" for j, value in enumerate(x, start=1))
            lines.append(f"{int(round(y))} qid:{qid} {features}")
    return "\n".join(lines) + "\n"


def write_letor(path, dataset, query_ids=None):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(serialize_letor(dataset, query_ids))
