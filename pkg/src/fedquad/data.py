"""Dataset ingestion, vertical partitioning, and seeded synthetic data.

Datasets are plain CSV with a header row. A partition spec is a small JSON
document naming which client owns which feature columns and who holds the
label column:

    {
      "clients": [
        {"name": "alpha", "features": ["x0", "x1"]},
        {"name": "beta", "features": ["x2"]}
      ],
      "label": {"client": "alpha", "column": "y"}
    }

Feature columns must be disjoint across clients and together cover every
non-label column, so the vertical split is total and unambiguous.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .baseline import MODEL_LINEAR, MODEL_LOGISTIC_TAYLOR, CentralDataset
from .protocol import ClientShard


@dataclass(frozen=True)
class ClientSpec:
    name: str
    feature_columns: tuple[str, ...]


@dataclass(frozen=True)
class PartitionSpec:
    clients: tuple[ClientSpec, ...]
    label_client: str
    label_column: str


def load_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a headered numeric CSV into (column names, row matrix)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        if len(set(header)) != len(header):
            raise ValueError(f"{path}: duplicate column names in header {header}")
        rows = []
        for line_no, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise ValueError(
                    f"{path}: row at line {line_no} has {len(record)} cells, "
                    f"expected {len(header)}"
                )
            parsed = []
            for name, cell in zip(header, record):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: line {line_no}, column {name!r}: "
                        f"non-numeric cell {cell!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def write_csv(path, header: Sequence[str], rows: np.ndarray) -> None:
    """Write a numeric matrix under the given header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in np.asarray(rows):
            writer.writerow([repr(float(v)) for v in row])


def load_partition_spec(path) -> PartitionSpec:
    """Parse and structurally validate a partition spec document."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        clients = tuple(
            ClientSpec(name=c["name"], feature_columns=tuple(c["features"]))
            for c in doc["clients"]
        )
        label_client = doc["label"]["client"]
        label_column = doc["label"]["column"]
    except (KeyError, TypeError) as err:
        raise ValueError(f"{path}: malformed partition spec ({err})") from None
    return PartitionSpec(clients, label_client, label_column)


def save_partition_spec(spec: PartitionSpec, path) -> None:
    doc = {
        "clients": [
            {"name": c.name, "features": list(c.feature_columns)}
            for c in spec.clients
        ],
        "label": {"client": spec.label_client, "column": spec.label_column},
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def partition_dataset(header: Sequence[str], rows: np.ndarray,
                      spec: PartitionSpec) -> tuple[list[ClientShard], CentralDataset]:
    """Slice columns per client; the central dataset keeps the same column order."""
    column_index = {name: i for i, name in enumerate(header)}
    if spec.label_column not in column_index:
        raise ValueError(f"label column {spec.label_column!r} not in header")
    owners = [c.name for c in spec.clients]
    if spec.label_client not in owners:
        raise ValueError(f"label client {spec.label_client!r} not among clients {owners}")
    if len(set(owners)) != len(owners):
        raise ValueError(f"duplicate client names in {owners}")

    seen: dict[str, str] = {}
    for client in spec.clients:
        if not client.feature_columns:
            raise ValueError(f"client {client.name!r} owns no feature columns")
        for col in client.feature_columns:
            if col == spec.label_column:
                raise ValueError(
                    f"label column {col!r} also assigned to client {client.name!r}"
                )
            if col not in column_index:
                raise ValueError(
                    f"column {col!r} (client {client.name!r}) not in header"
                )
            if col in seen:
                raise ValueError(
                    f"column {col!r} assigned to both {seen[col]!r} and {client.name!r}"
                )
            seen[col] = client.name
    uncovered = [name for name in header
                 if name != spec.label_column and name not in seen]
    if uncovered:
        raise ValueError(f"columns {uncovered} belong to no client")

    y = rows[:, column_index[spec.label_column]].copy()
    shards = []
    for client in spec.clients:
        cols = [column_index[c] for c in client.feature_columns]
        labels = y if client.name == spec.label_client else None
        shards.append(ClientShard(rows[:, cols].copy(), labels))
    X = np.hstack([sh.features for sh in shards])
    return shards, CentralDataset(X=X, y=y)


@dataclass
class SyntheticDataset:
    """A generated dataset with its partition and generating weights."""

    header: list[str]
    rows: np.ndarray
    spec: PartitionSpec
    true_weights: np.ndarray


def _feature_frame(rng: np.random.Generator, n_rows: int, n_features: int,
                   feature_range: int) -> np.ndarray:
    return rng.integers(-feature_range, feature_range + 1,
                        size=(n_rows, n_features)).astype(float)


def _partition_for(features_per_client: Sequence[int]) -> tuple[list[str], PartitionSpec]:
    names = []
    clients = []
    start = 0
    for i, count in enumerate(features_per_client):
        cols = tuple(f"x{start + k}" for k in range(count))
        names.extend(cols)
        clients.append(ClientSpec(name=f"c{i}", feature_columns=cols))
        start += count
    names.append("y")
    spec = PartitionSpec(tuple(clients), label_client="c0", label_column="y")
    return names, spec


def synthesize_linear(n_rows: int, features_per_client: Sequence[int], seed: int,
                      feature_range: int = 4, weight_range: int = 3,
                      noise_range: int = 1) -> SyntheticDataset:
    """Integer-valued linear data: y = Xw + e with integer w and e.

    Integer values keep the dataset lossless under exact-mode
    quantization, so secure runs on it can be compared bitwise against
    plaintext descent.
    """
    rng = np.random.default_rng(seed)
    F = sum(features_per_client)
    X = _feature_frame(rng, n_rows, F, feature_range)
    w = rng.integers(-weight_range, weight_range + 1, size=F).astype(float)
    noise = rng.integers(-noise_range, noise_range + 1, size=n_rows).astype(float)
    y = X @ w + noise
    header, spec = _partition_for(features_per_client)
    rows = np.column_stack([X, y])
    return SyntheticDataset(header, rows, spec, w)


def synthesize_logistic(n_rows: int, features_per_client: Sequence[int], seed: int,
                        feature_range: int = 2,
                        weight_range: int = 2) -> SyntheticDataset:
    """Integer features with 0/1 labels from the sign of a linear score."""
    rng = np.random.default_rng(seed)
    F = sum(features_per_client)
    X = _feature_frame(rng, n_rows, F, feature_range)
    w = rng.integers(-weight_range, weight_range + 1, size=F).astype(float)
    y = (X @ w > 0).astype(float)
    header, spec = _partition_for(features_per_client)
    rows = np.column_stack([X, y])
    return SyntheticDataset(header, rows, spec, w)


def synthesize(model_kind: str, n_rows: int, features_per_client: Sequence[int],
               seed: int) -> SyntheticDataset:
    if model_kind == MODEL_LINEAR:
        return synthesize_linear(n_rows, features_per_client, seed)
    if model_kind == MODEL_LOGISTIC_TAYLOR:
        return synthesize_logistic(n_rows, features_per_client, seed)
    raise ValueError(f"unknown model kind {model_kind!r}")
