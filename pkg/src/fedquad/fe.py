"""Ideal-functionality stand-in for quadratic multi-input functional encryption.

No cryptography happens here. The module enforces, at the API boundary, the
exact input/output behavior a secure scheme would provide: a ciphertext
reveals nothing but its header; a secret key bound to a coefficient vector c
decrypts a full set of slot ciphertexts to <c, x (x) x> for the concatenated
x, and to nothing else; decryption across instances, across tags, or with an
incomplete slot set fails with a typed error instead of a value.

Slot convention: one slot per feature-holding client plus one final slot for
the label vector, so the concatenation in slot order is [x_0||...||x_{N-1}||y].
"""

from __future__ import annotations

import itertools
import threading
from typing import Iterable, Sequence

from .funcvec import SparseFunctionVector
from .tensor import sparse_inner_kron


class FEError(Exception):
    """Base class for functional-encryption failures."""


class InstanceMismatch(FEError):
    """Key and ciphertexts come from different setup calls."""


class TagMismatch(FEError):
    """Ciphertext tags and key tag disagree."""


class MissingSlot(FEError):
    """Decryption needs every slot exactly once; one or more are absent."""


class DuplicateSlot(FEError):
    """A slot appears more than once where exactly one ciphertext is allowed."""


_instance_ids = itertools.count()


class FEInstance:
    """One setup's worth of keys and counters; payloads never leave the module."""

    def __init__(self, n_slots: int, slot_lengths: tuple[int, ...],
                 tag_space_id: int) -> None:
        self.instance_id = next(_instance_ids)
        self.n_slots = n_slots
        self.slot_lengths = slot_lengths
        self.tag_space_id = tag_space_id
        self.master_key = f"msk:{self.instance_id}"
        self.total_length = sum(slot_lengths)
        self._lock = threading.Lock()
        self._n_encrypt = 0
        self._n_keygen = 0
        self._n_decrypt = 0
        self._tagged_slots: set[tuple[int, object]] = set()

    def __repr__(self) -> str:
        return (f"FEInstance(instance_id={self.instance_id}, "
                f"n_slots={self.n_slots}, tag_space_id={self.tag_space_id})")


class EncryptionKey:
    """Capability to encrypt into one slot of one instance."""

    __slots__ = ("instance_id", "slot", "_instance")

    def __init__(self, instance: FEInstance, slot: int) -> None:
        self.instance_id = instance.instance_id
        self.slot = slot
        self._instance = instance

    def __repr__(self) -> str:
        return f"EncryptionKey(instance_id={self.instance_id}, slot={self.slot})"


class Ciphertext:
    """Sealed integer vector; only the header is public.

    The payload has no accessor and never appears in repr or header
    output. Decryption inside this module is the single reader.
    """

    __slots__ = ("instance_id", "slot", "tag", "_payload")

    def __init__(self, instance_id: int, slot: int, tag: object,
                 payload: tuple[int, ...]) -> None:
        self.instance_id = instance_id
        self.slot = slot
        self.tag = tag
        self._payload = payload

    def header(self) -> dict:
        """Public fields only, safe to serialize or log."""
        return {
            "instance_id": self.instance_id,
            "slot": self.slot,
            "tag": self.tag,
            "length": len(self._payload),
        }

    def __repr__(self) -> str:
        return (f"Ciphertext(instance_id={self.instance_id}, slot={self.slot}, "
                f"tag={self.tag!r}, length={len(self._payload)})")


class SecretKey:
    """Decryption key bound to one instance, one tag, one coefficient vector."""

    __slots__ = ("instance_id", "tag", "funcvec", "_instance")

    def __init__(self, instance: FEInstance, tag: object,
                 funcvec: SparseFunctionVector) -> None:
        self.instance_id = instance.instance_id
        self.tag = tag
        self.funcvec = funcvec
        self._instance = instance

    def __repr__(self) -> str:
        return (f"SecretKey(instance_id={self.instance_id}, tag={self.tag!r}, "
                f"nnz={self.funcvec.nnz})")


def setup(n_slots: int, slot_lengths: Sequence[int],
          tag_space_id: int = 0) -> tuple[FEInstance, list[EncryptionKey]]:
    """Create a fresh instance and one encryption key per slot."""
    lengths = tuple(int(n) for n in slot_lengths)
    if n_slots < 2:
        raise ValueError(f"need at least 2 slots (features + labels), got {n_slots}")
    if len(lengths) != n_slots:
        raise ValueError(
            f"slot_lengths has {len(lengths)} entries for {n_slots} slots"
        )
    if any(n < 1 for n in lengths):
        raise ValueError(f"every slot length must be >= 1, got {lengths}")
    instance = FEInstance(n_slots, lengths, tag_space_id)
    keys = [EncryptionKey(instance, slot) for slot in range(n_slots)]
    return instance, keys


def encrypt(ek: EncryptionKey, tag: object, values: Sequence[int]) -> Ciphertext:
    """Seal an integer vector into the key's slot under the given tag.

    With a non-None tag, at most one ciphertext may exist per (slot, tag)
    within an instance; re-encryption raises DuplicateSlot. Untagged use
    (tag None) has no such restriction.
    """
    instance = ek._instance
    payload = tuple(int(v) for v in values)
    expected = instance.slot_lengths[ek.slot]
    if len(payload) != expected:
        raise ValueError(
            f"slot {ek.slot} expects a vector of length {expected}, got {len(payload)}"
        )
    with instance._lock:
        if tag is not None:
            claim = (ek.slot, tag)
            if claim in instance._tagged_slots:
                raise DuplicateSlot(
                    f"slot {ek.slot} already holds a ciphertext under tag {tag!r}"
                )
            instance._tagged_slots.add(claim)
        instance._n_encrypt += 1
    return Ciphertext(instance.instance_id, ek.slot, tag, payload)


def keygen(instance: FEInstance, tag: object,
           funcvec: SparseFunctionVector) -> SecretKey:
    """Bind a coefficient vector to the instance and tag."""
    expected = instance.total_length ** 2
    if funcvec.dimension != expected:
        raise ValueError(
            f"function vector dimension {funcvec.dimension} does not match "
            f"the instance's {expected}"
        )
    with instance._lock:
        instance._n_keygen += 1
    return SecretKey(instance, tag, funcvec)


def decrypt(ciphertexts: Iterable[Ciphertext], sk: SecretKey) -> int:
    """Reveal <c, x (x) x> for the concatenation of all slot payloads.

    Checks run in order: every ciphertext must share the key's instance,
    then its tag, then the slots must cover 0..n_slots-1 exactly once.
    Any violation raises; no partial value is ever returned.
    """
    cts = list(ciphertexts)
    instance = sk._instance
    for ct in cts:
        if ct.instance_id != sk.instance_id:
            raise InstanceMismatch(
                f"ciphertext from instance {ct.instance_id} cannot be decrypted "
                f"with a key from instance {sk.instance_id}"
            )
    for ct in cts:
        if ct.tag != sk.tag:
            raise TagMismatch(
                f"ciphertext tag {ct.tag!r} does not match key tag {sk.tag!r}"
            )
    by_slot: dict[int, Ciphertext] = {}
    for ct in cts:
        if ct.slot in by_slot:
            raise DuplicateSlot(f"slot {ct.slot} appears more than once")
        by_slot[ct.slot] = ct
    missing = [slot for slot in range(instance.n_slots) if slot not in by_slot]
    if missing:
        raise MissingSlot(f"no ciphertext for slots {missing}")
    x: list[int] = []
    for slot in range(instance.n_slots):
        x.extend(by_slot[slot]._payload)
    value = sparse_inner_kron(sk.funcvec, x)
    with instance._lock:
        instance._n_decrypt += 1
    return value


def audit_counters(instance: FEInstance) -> tuple[int, int, int]:
    """Successful (encrypt, keygen, decrypt) counts since setup."""
    with instance._lock:
        return (instance._n_encrypt, instance._n_keygen, instance._n_decrypt)
