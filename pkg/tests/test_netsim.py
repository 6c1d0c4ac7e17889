"""Trusted-node relay layer: stores, hop encryption, exposure audit.

The relay oracle is recomputed in-test: each hop ciphertext, decrypted
with the pad recovered from that store's consumption log, must yield the
carried key, and only interior nodes may ever log it.
"""

import numpy as np
import pytest

from qkdsim.auth import AuthenticatedMessage, AuthenticationFailure
from qkdsim.netsim import (InsufficientLinkKey, KeyStore, LengthMismatch,
                           Link, Network, Node, RelayTranscript,
                           SessionAborted, StubKeySource, combine_keys,
                           provision_link, relay_key)
from qkdsim.photonics import ConstantSource, DetectorPair, FiberChannel
from qkdsim.protocol import SessionConfig
from qkdsim.rng import RandomSource


def stub_network(edges, n_bits=2048, seed_base=500):
    net = Network()
    for i, (a, b) in enumerate(edges):
        net.add_link(a, b, StubKeySource(seed_base + i, n_bits))
    net.provision_all()
    return net


class TestCombineKeys:
    def test_xor_identities(self):
        k = RandomSource(1).bits(64)
        assert np.array_equal(combine_keys(k, np.zeros(64, np.uint8)), k)
        assert not np.any(combine_keys(k, k))

    def test_order_irrelevant(self):
        a, b = RandomSource(2).bits(32), RandomSource(3).bits(32)
        assert np.array_equal(combine_keys(a, b), combine_keys(b, a))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            combine_keys(np.zeros(4, np.uint8), np.zeros(5, np.uint8))

    def test_recovering_either_input_needs_the_other(self):
        a, b = RandomSource(4).bits(128), RandomSource(5).bits(128)
        c = combine_keys(a, b)
        assert np.array_equal(c ^ b, a)
        assert np.array_equal(c ^ a, b)


class TestKeyStore:
    def test_deposit_consume_cycle(self):
        store = KeyStore()
        assert store.remaining == 0
        store.deposit([1, 0, 1, 1])
        assert store.remaining == 4
        assert np.array_equal(store.consume(3), [1, 0, 1])
        assert store.remaining == 1
        assert store.consumed_log == [(0, 3)]

    def test_overdraw_raises_and_spends_nothing(self):
        store = KeyStore()
        store.deposit(RandomSource(6).bits(10))
        with pytest.raises(InsufficientLinkKey):
            store.consume(11)
        assert store.remaining == 10
        assert store.consumed_log == []

    def test_consumed_ranges_disjoint(self):
        store = KeyStore()
        store.deposit(RandomSource(7).bits(100))
        for n in (10, 20, 30):
            store.consume(n)
        assert store.consumed_log == [(0, 10), (10, 30), (30, 60)]


class TestProvisioning:
    def test_stub_source_deposits_same_bits_both_ends(self):
        net = Network()
        link = net.add_link("A", "B", StubKeySource(510, 256))
        bits = provision_link(link)
        want = RandomSource(510).split("stub_link_key").bits(256)
        assert np.array_equal(bits, want)
        assert np.array_equal(net.node("A").store_for("B").bits, want)
        assert np.array_equal(net.node("B").store_for("A").bits, want)

    def test_session_source_deposits_distilled_key(self):
        config = SessionConfig(
            n_pulses=20_000, source=ConstantSource(1),
            channel=FiberChannel(0.0), detectors=DetectorPair(1.0, 0.0),
            seed=511)
        net = Network()
        link = net.add_link("A", "B", config)
        bits = provision_link(link)
        assert len(link.reports) == 1
        report = link.reports[0]
        assert report.final_len == len(bits) > 0
        assert np.array_equal(bits, report.secret_key.bits)
        assert np.array_equal(net.node("A").store_for("B").bits, bits)

    def test_aborting_session_leaves_stores_empty(self):
        from qkdsim.adversary import InterceptResend
        config = SessionConfig(
            n_pulses=20_000, source=ConstantSource(1),
            channel=FiberChannel(0.0), detectors=DetectorPair(1.0, 0.0),
            seed=512, eve=InterceptResend(1.0))
        net = Network()
        link = net.add_link("A", "B", config)
        with pytest.raises(SessionAborted):
            provision_link(link)
        assert net.node("A").store_for("B").remaining == 0
        assert net.node("B").store_for("A").remaining == 0

    def test_link_wires_one_shared_channel(self):
        net = Network()
        net.add_link("A", "B", StubKeySource(513, 64))
        assert net.node("A").channels["B"] is net.node("B").channels["A"]


class TestRelay:
    def test_two_nodes_direct(self):
        net = stub_network([("A", "B")])
        transcript = net.relay(["A", "B"], 128, RandomSource(514))
        assert isinstance(transcript, RelayTranscript)
        assert transcript.path == ("A", "B")
        assert np.array_equal(transcript.end_key,
                              RandomSource(514).bits(128))
        assert net.node("A").knowledge_log == []
        assert net.node("B").knowledge_log == []
        assert net.node("A").store_for("B").cursor == 128

    def test_four_node_chain_hop_oracle(self):
        # Recompute every hop: ciphertext XOR the pad recovered from the
        # store's consumption log must equal the carried key, and the
        # carried key never changes along the path.
        net = stub_network([("A", "B"), ("B", "C"), ("C", "D")])
        transcript = net.relay(["A", "B", "C", "D"], 96, RandomSource(515))
        fresh = RandomSource(515).bits(96)
        assert np.array_equal(transcript.end_key, fresh)
        path = ["A", "B", "C", "D"]
        for i, msg in enumerate(transcript.hop_messages):
            sender = net.node(path[i])
            store = sender.store_for(path[i + 1])
            lo, hi = store.consumed_log[-1]
            pad = store.bits[lo:hi]
            cipher = np.unpackbits(
                np.frombuffer(msg.payload, dtype=np.uint8))[:96]
            assert np.array_equal(cipher ^ pad, fresh)

    def test_interior_exposure_exact(self):
        net = stub_network([("A", "B"), ("B", "C"), ("C", "D")])
        transcript = net.relay(["A", "B", "C", "D"], 64, RandomSource(516))
        for interior in ("B", "C"):
            log = net.node(interior).knowledge_log
            assert len(log) == 1
            assert np.array_equal(log[0], transcript.end_key)
        assert net.node("A").knowledge_log == []
        assert net.node("D").knowledge_log == []

    def test_repeated_relays_use_disjoint_key_ranges(self):
        net = stub_network([("A", "B"), ("B", "C")])
        t1 = net.relay(["A", "B", "C"], 100, RandomSource(517))
        t2 = net.relay(["A", "B", "C"], 100, RandomSource(518))
        assert not np.array_equal(t1.end_key, t2.end_key)
        log = net.node("A").store_for("B").consumed_log
        assert log == [(0, 100), (100, 200)]

    def test_precheck_spends_nothing_on_failure(self):
        # Second hop is underfunded: the relay must refuse before the
        # first hop consumes anything.
        net = Network()
        net.add_link("A", "B", StubKeySource(519, 256))
        net.add_link("B", "C", StubKeySource(520, 32))
        net.provision_all()
        with pytest.raises(InsufficientLinkKey) as exc_info:
            net.relay(["A", "B", "C"], 64, RandomSource(521))
        assert "B-C" in str(exc_info.value)
        assert net.node("A").store_for("B").cursor == 0
        assert net.node("B").store_for("C").cursor == 0
        assert net.node("B").knowledge_log == []

    def test_short_path_rejected(self):
        net = stub_network([("A", "B")])
        with pytest.raises(ValueError):
            net.relay(["A"], 16, RandomSource(522))

    def test_desynchronized_stores_detected(self):
        net = Network()
        net.add_link("A", "B", StubKeySource(523, 0))
        net.node("A").store_for("B").deposit(np.ones(32, np.uint8))
        net.node("B").store_for("A").deposit(np.zeros(32, np.uint8))
        with pytest.raises(RuntimeError):
            net.relay(["A", "B"], 32, RandomSource(524))

    def test_tampered_hop_detected(self):
        net = stub_network([("A", "B"), ("B", "C")])
        channel = net.node("B").channels["C"]
        original_send = channel.send

        def corrupting_send(payload: bytes):
            msg = original_send(payload)
            flipped = bytes([payload[0] ^ 0x80]) + payload[1:]
            return AuthenticatedMessage(flipped, msg.tag)

        channel.send = corrupting_send
        with pytest.raises(AuthenticationFailure):
            net.relay(["A", "B", "C"], 64, RandomSource(525))


class TestNetwork:
    def test_node_idempotent(self):
        net = Network()
        assert net.node("X") is net.node("X")
        assert isinstance(net.node("X"), Node)

    def test_shortest_path_line(self):
        net = stub_network([("A", "B"), ("B", "C"), ("C", "D")])
        assert [n.id for n in net.shortest_path("A", "D")] == \
            ["A", "B", "C", "D"]

    def test_shortest_path_prefers_shortcut(self):
        net = stub_network([("A", "B"), ("B", "C"), ("C", "D"), ("A", "D")])
        assert [n.id for n in net.shortest_path("A", "D")] == ["A", "D"]

    def test_shortest_path_deterministic_tie_break(self):
        # Two equal-length routes: BFS visits sorted neighbors, so the
        # lexicographically earlier branch wins.
        net = stub_network([("A", "B"), ("B", "D"), ("A", "C"), ("C", "D")])
        assert [n.id for n in net.shortest_path("A", "D")] == ["A", "B", "D"]

    def test_no_path_raises(self):
        net = stub_network([("A", "B"), ("C", "D")])
        with pytest.raises(ValueError):
            net.shortest_path("A", "D")

    @pytest.mark.parametrize("trial", range(10))
    def test_randomized_ring_topologies(self, trial):
        # Ring of 4-7 nodes plus random chords; relay along the BFS
        # path: the endpoints agree on the fresh key, exactly the
        # interior nodes saw it, and no store range is spent twice.
        rand = RandomSource(5300 + trial)
        n = int(rand.integers(4, 8))
        names = [f"N{i}" for i in range(n)]
        edges = [(names[i], names[(i + 1) % n]) for i in range(n)]
        for _ in range(int(rand.integers(0, 3))):
            i, j = sorted(int(x) for x in rand.integers(0, n, size=2))
            if j - i > 1 and (names[i], names[j]) not in edges:
                edges.append((names[i], names[j]))
        net = stub_network(edges, n_bits=512,
                           seed_base=6000 + 100 * trial)
        src, dst = names[0], names[n // 2]
        path = [node.id for node in net.shortest_path(src, dst)]

        relay_seed = 7000 + trial
        transcript = net.relay(path, 200, RandomSource(relay_seed))
        assert np.array_equal(transcript.end_key,
                              RandomSource(relay_seed).bits(200))

        interior = set(path[1:-1])
        for name in names:
            log = net.node(name).knowledge_log
            if name in interior:
                assert len(log) == 1
                assert np.array_equal(log[0], transcript.end_key)
            else:
                assert log == []

        for node in net.nodes.values():
            for store in node.key_stores.values():
                spans = sorted(store.consumed_log)
                for (a1, b1), (a2, b2) in zip(spans, spans[1:]):
                    assert b1 <= a2
