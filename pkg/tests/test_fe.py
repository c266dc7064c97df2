import json

import numpy as np
import pytest

from fedquad import fe
from fedquad.funcvec import SparseFunctionVector, all_gradient_slice_vectors, build_layout
from fedquad.tensor import dense_kron, kron_flat, vec_columns


def _single_product_key(instance, tag=None):
    c = SparseFunctionVector(dimension=4, entries=((kron_flat(0, 1, 2), 1),))
    return fe.keygen(instance, tag, c)


class TestSetup:
    def test_minimal_instance(self):
        instance, keys = fe.setup(2, [1, 1])
        assert len(keys) == 2
        assert instance.total_length == 2
        assert [k.slot for k in keys] == [0, 1]

    def test_instances_are_fresh(self):
        a, _ = fe.setup(2, [1, 1])
        b, _ = fe.setup(2, [1, 1])
        assert a.instance_id != b.instance_id
        assert a.master_key != b.master_key

    def test_three_clients_plus_label_slot(self):
        _, keys = fe.setup(4, [6, 6, 6, 3])
        assert len(keys) == 4

    @pytest.mark.parametrize("n_slots,lengths", [
        (1, [1]), (2, [1]), (2, [1, 0]),
    ])
    def test_rejects_bad_shapes(self, n_slots, lengths):
        with pytest.raises(ValueError):
            fe.setup(n_slots, lengths)


class TestEncrypt:
    def test_public_fields_only(self):
        instance, keys = fe.setup(2, [2, 1])
        ct = fe.encrypt(keys[0], "t", [11, 22])
        assert ct.instance_id == instance.instance_id
        assert ct.slot == 0
        assert ct.tag == "t"
        assert not hasattr(ct, "payload")
        assert not hasattr(ct, "__dict__")

    def test_reencryption_decrypts_identically(self):
        instance, keys = fe.setup(2, [1, 1])
        sk = _single_product_key(instance)
        ct_y = fe.encrypt(keys[1], None, [3])
        first = fe.encrypt(keys[0], None, [5])
        second = fe.encrypt(keys[0], None, [5])
        assert fe.decrypt([first, ct_y], sk) == fe.decrypt([second, ct_y], sk) == 15

    def test_wrong_length_rejected(self):
        _, keys = fe.setup(2, [2, 1])
        with pytest.raises(ValueError):
            fe.encrypt(keys[0], None, [1])

    def test_tagged_slot_is_single_use(self):
        _, keys = fe.setup(2, [1, 1])
        fe.encrypt(keys[0], 7, [1])
        with pytest.raises(fe.DuplicateSlot):
            fe.encrypt(keys[0], 7, [2])
        # a different tag opens a new slot claim
        fe.encrypt(keys[0], 8, [3])


class TestKeygen:
    def test_wrong_dimension_rejected(self):
        instance, _ = fe.setup(2, [1, 1])
        c = SparseFunctionVector(dimension=9, entries=())
        with pytest.raises(ValueError):
            fe.keygen(instance, None, c)

    def test_two_keys_same_function_agree(self):
        instance, keys = fe.setup(2, [1, 1])
        cts = [fe.encrypt(keys[0], None, [5]), fe.encrypt(keys[1], None, [3])]
        sk1 = _single_product_key(instance)
        sk2 = _single_product_key(instance)
        assert fe.decrypt(cts, sk1) == fe.decrypt(cts, sk2)

    def test_key_from_other_instance_rejected(self):
        inst_a, keys_a = fe.setup(2, [1, 1])
        inst_b, _ = fe.setup(2, [1, 1])
        cts = [fe.encrypt(keys_a[0], None, [5]), fe.encrypt(keys_a[1], None, [3])]
        sk_b = _single_product_key(inst_b)
        with pytest.raises(fe.InstanceMismatch):
            fe.decrypt(cts, sk_b)


class TestDecrypt:
    def test_single_product(self):
        instance, keys = fe.setup(2, [1, 1])
        cts = [fe.encrypt(keys[0], None, [5]), fe.encrypt(keys[1], None, [3])]
        assert fe.decrypt(cts, _single_product_key(instance)) == 15

    def test_cross_iteration_mix_rejected(self):
        inst_t, keys_t = fe.setup(2, [1, 1])
        inst_next, _ = fe.setup(2, [1, 1])
        cts = [fe.encrypt(keys_t[0], None, [5]), fe.encrypt(keys_t[1], None, [3])]
        with pytest.raises(fe.InstanceMismatch):
            fe.decrypt(cts, _single_product_key(inst_next))

    def test_missing_slot(self):
        instance, keys = fe.setup(2, [1, 1])
        with pytest.raises(fe.MissingSlot):
            fe.decrypt([fe.encrypt(keys[0], None, [5])],
                       _single_product_key(instance))

    def test_duplicate_slot(self):
        instance, keys = fe.setup(2, [1, 1])
        cts = [fe.encrypt(keys[0], None, [5]), fe.encrypt(keys[0], None, [6]),
               fe.encrypt(keys[1], None, [3])]
        with pytest.raises(fe.DuplicateSlot):
            fe.decrypt(cts, _single_product_key(instance))

    def test_tag_gate_exhaustive(self):
        instance, keys = fe.setup(2, [1, 1])
        cts = {(slot, tag): fe.encrypt(keys[slot], tag, [slot + 2])
               for slot in (0, 1) for tag in ("a", "b")}
        sks = {tag: _single_product_key(instance, tag) for tag in ("a", "b")}
        for t0 in ("a", "b"):
            for t1 in ("a", "b"):
                for tk in ("a", "b"):
                    group = [cts[(0, t0)], cts[(1, t1)]]
                    if t0 == t1 == tk:
                        assert fe.decrypt(group, sks[tk]) == 6
                    else:
                        with pytest.raises(fe.TagMismatch):
                            fe.decrypt(group, sks[tk])

    def test_full_vector_set_matches_dense_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 4))
            S = int(rng.integers(1, 5))
            counts = [int(rng.integers(1, 4)) for _ in range(n)]
            layout = build_layout(n, S, counts)
            blocks = [rng.integers(-6, 7, size=(S, f)).astype(int) for f in counts]
            y = [int(v) for v in rng.integers(-6, 7, size=S)]
            weights = [list(map(int, rng.integers(-4, 5, size=f))) for f in counts]

            instance, keys = fe.setup(n + 1, [S * f for f in counts] + [S])
            cts = [fe.encrypt(keys[i], None, [int(v) for v in vec_columns(blocks[i])])
                   for i in range(n)]
            cts.append(fe.encrypt(keys[n], None, y))

            x = [int(v) for block in blocks for v in vec_columns(block)] + y
            kron = dense_kron(x)
            for c in all_gradient_slice_vectors(weights, 1, layout):
                sk = fe.keygen(instance, None, c)
                expected = sum(a * b for a, b in zip(c.to_dense(), kron))
                assert fe.decrypt(cts, sk) == expected


class TestAuditCounters:
    def test_fresh_instance(self):
        instance, _ = fe.setup(2, [1, 1])
        assert fe.audit_counters(instance) == (0, 0, 0)

    def test_counts_one_protocol_iteration(self):
        # N=3 clients, F=6 features: label client encrypts twice,
        # aggregator decrypts once per feature.
        n, S, counts = 3, 2, [2, 2, 2]
        layout = build_layout(n, S, counts)
        instance, keys = fe.setup(n + 1, [S * f for f in counts] + [S])
        rng = np.random.default_rng(8)
        cts = []
        for i in range(n):
            block = rng.integers(-3, 4, size=(S, counts[i]))
            cts.append(fe.encrypt(keys[i], None,
                                  [int(v) for v in vec_columns(block)]))
        cts.append(fe.encrypt(keys[n], None, [1, -1]))
        weights = [[1, 2], [3, 4], [5, 6]]
        for c in all_gradient_slice_vectors(weights, 1, layout):
            sk = fe.keygen(instance, None, c)
            fe.decrypt(cts, sk)
        assert fe.audit_counters(instance) == (n + 1, 6, 6)

    def test_counters_never_decrease(self):
        instance, keys = fe.setup(2, [1, 1])
        seen = [fe.audit_counters(instance)]
        fe.encrypt(keys[0], None, [1])
        seen.append(fe.audit_counters(instance))
        fe.encrypt(keys[1], None, [2])
        seen.append(fe.audit_counters(instance))
        _single_product_key(instance)
        seen.append(fe.audit_counters(instance))
        for before, after in zip(seen, seen[1:]):
            assert all(b <= a for b, a in zip(before, after))


class TestSealing:
    def test_serialized_forms_are_payload_free(self):
        _, keys = fe.setup(2, [2, 1])
        sentinel = [987654321, 246813579]
        ct = fe.encrypt(keys[0], None, sentinel)
        surfaces = [repr(ct), str(ct), json.dumps(ct.header(), sort_keys=True)]
        for surface in surfaces:
            for value in sentinel:
                assert str(value) not in surface

    def test_header_fields(self):
        instance, keys = fe.setup(2, [2, 1])
        ct = fe.encrypt(keys[0], 5, [1, 2])
        assert ct.header() == {
            "instance_id": instance.instance_id,
            "slot": 0,
            "tag": 5,
            "length": 2,
        }
