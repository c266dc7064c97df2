"""Sparse coefficient vectors whose Kronecker inner products are gradient slices.

The concatenated input is x = [x_0 || ... || x_{N-1} || y], where x_i stacks
the columns of client i's feature matrix and y is the label vector. For each
client i and local feature p there is one coefficient vector c over x (x) x
such that

    <c, x (x) x> = ((y - sum_j X_j w_j)^T X_i)[p]

exactly, in integer arithmetic. Only S*(F+1) of the L**2 coefficients are
nonzero, so vectors are kept as sorted (index, value) entry lists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# to_dense exists for test oracles; this caps it at desk scale.
DENSE_DIMENSION_LIMIT = 65536


@dataclass(frozen=True)
class Layout:
    """Index geometry of the concatenated vector x and its Kronecker square."""

    n_clients: int
    batch_size: int
    features_per_client: tuple[int, ...]
    feature_total: int
    offsets: tuple[int, ...]
    label_offset: int
    vector_length: int


def build_layout(n_clients: int, batch_size: int,
                 features_per_client: Sequence[int]) -> Layout:
    """Compute block offsets for N clients, batch size S, and per-client features."""
    counts = tuple(int(f) for f in features_per_client)
    if n_clients < 1 or batch_size < 1:
        raise ValueError(
            f"need n_clients >= 1 and batch_size >= 1, got {n_clients}, {batch_size}"
        )
    if len(counts) != n_clients:
        raise ValueError(
            f"features_per_client has {len(counts)} entries for {n_clients} clients"
        )
    if any(f < 1 for f in counts):
        raise ValueError(f"every client needs at least one feature, got {counts}")
    offsets = []
    off = 0
    for f in counts:
        offsets.append(off)
        off += batch_size * f
    feature_total = sum(counts)
    label_offset = off
    return Layout(
        n_clients=n_clients,
        batch_size=batch_size,
        features_per_client=counts,
        feature_total=feature_total,
        offsets=tuple(offsets),
        label_offset=label_offset,
        vector_length=label_offset + batch_size,
    )


@dataclass(frozen=True)
class SparseFunctionVector:
    """Sorted nonzero (flat index, value) entries over a dimension-L**2 space."""

    dimension: int
    entries: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        prev = -1
        for index, value in self.entries:
            if not (0 <= index < self.dimension):
                raise ValueError(
                    f"entry index {index} out of range for dimension {self.dimension}"
                )
            if index <= prev:
                raise ValueError(f"entry indices must be strictly increasing at {index}")
            if value == 0:
                raise ValueError(f"zero value stored at index {index}")
            prev = index

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def to_dense(self) -> list[int]:
        """Dense coefficient list; test-oracle use only, size guarded."""
        if self.dimension > DENSE_DIMENSION_LIMIT:
            raise ValueError(
                f"dense expansion is capped at dimension {DENSE_DIMENSION_LIMIT}, "
                f"got {self.dimension}"
            )
        dense = [0] * self.dimension
        for index, value in self.entries:
            dense[index] = value
        return dense


def residual_coefficients(quantized_weights: Sequence[Sequence[int]],
                          one_quantized: int,
                          layout: Layout) -> tuple[tuple[int, int], ...]:
    """Coefficient entries of one row block, relative to that block's origin.

    For each sample s the entries pair position s of the block's rows with
    the s-th component of every feature column (value: minus the quantized
    weight) and of the label vector (value: the quantized constant 1), so a
    row's inner product with x is the quantized residual of sample s.
    Relative index of (row s, column c) is s*L + c. Zero weights are dropped.
    """
    if len(quantized_weights) != layout.n_clients:
        raise ValueError(
            f"got weight segments for {len(quantized_weights)} clients, "
            f"layout has {layout.n_clients}"
        )
    for j, segment in enumerate(quantized_weights):
        if len(segment) != layout.features_per_client[j]:
            raise ValueError(
                f"client {j} weight segment has length {len(segment)}, "
                f"expected {layout.features_per_client[j]}"
            )
    S = layout.batch_size
    L = layout.vector_length
    entries = []
    for s in range(S):
        row_base = s * L
        for j, segment in enumerate(quantized_weights):
            for f, w in enumerate(segment):
                if w != 0:
                    entries.append((row_base + layout.offsets[j] + f * S + s, -int(w)))
        if one_quantized != 0:
            entries.append((row_base + layout.label_offset + s, int(one_quantized)))
    return tuple(entries)


def gradient_slice_vector(quantized_weights: Sequence[Sequence[int]],
                          one_quantized: int,
                          layout: Layout,
                          client: int,
                          feature: int) -> SparseFunctionVector:
    """The coefficient vector whose decryption is gradient slice (client, feature).

    The shared residual entries land in the row block of client's feature
    column `feature` (rows off_client + feature*S .. + S), every other block
    of x (x) x is zero. Flat index of a relative entry r is base_row*L + r.
    """
    if not (0 <= client < layout.n_clients):
        raise ValueError(f"client index {client} out of range for {layout.n_clients}")
    if not (0 <= feature < layout.features_per_client[client]):
        raise ValueError(
            f"feature index {feature} out of range for client {client} "
            f"with {layout.features_per_client[client]} features"
        )
    L = layout.vector_length
    base_row = layout.offsets[client] + feature * layout.batch_size
    relative = residual_coefficients(quantized_weights, one_quantized, layout)
    entries = tuple((base_row * L + rel, value) for rel, value in relative)
    return SparseFunctionVector(dimension=L * L, entries=entries)


def all_gradient_slice_vectors(quantized_weights: Sequence[Sequence[int]],
                               one_quantized: int,
                               layout: Layout) -> list[SparseFunctionVector]:
    """All F slice vectors, ordered (client ascending, feature ascending).

    The order matches the flat gradient layout: slice (i, p) sits at global
    index sum(F_j for j < i) + p.
    """
    relative = residual_coefficients(quantized_weights, one_quantized, layout)
    L = layout.vector_length
    vectors = []
    for client in range(layout.n_clients):
        for feature in range(layout.features_per_client[client]):
            base_row = layout.offsets[client] + feature * layout.batch_size
            entries = tuple((base_row * L + rel, value) for rel, value in relative)
            vectors.append(SparseFunctionVector(dimension=L * L, entries=entries))
    return vectors


def logistic_adjust(weights, labels) -> tuple[np.ndarray, np.ndarray]:
    """Inputs for the quadratic logistic surrogate: quarter weights, centered labels.

    Feeding (w/4, y - 1/2) through the unchanged linear pipeline makes the
    decrypted slices equal ((y - 1/2 - X(w/4))^T X_i)[p], which is -S times
    the surrogate gradient before regularization.
    """
    w = np.asarray(weights, dtype=float)
    y = np.asarray(labels, dtype=float)
    return w / 4.0, y - 0.5
