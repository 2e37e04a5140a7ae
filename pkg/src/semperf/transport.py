"""In-memory message transport connecting rank workers on one host.

Endpoints are fully connected through per-ordered-pair FIFO queues, so
message order is preserved between any two ranks and delivery is exact
(payloads are copied on send).  Word counters are kept per peer and per
tag; halo traffic and reduction traffic are tagged separately so face
exchange accounting stays comparable with the partition-module
predictions.
"""

import queue
import threading
from collections import defaultdict

import numpy as np


class TransportTimeout(Exception):
    """A receive or barrier wait expired before its peers showed up."""


class LoopbackEndpoint:
    """One rank's view of the shared loopback fabric."""

    def __init__(self, rank, n_ranks, queues, barrier):
        self.rank = rank
        self.n_ranks = n_ranks
        self.peers = frozenset(r for r in range(n_ranks) if r != rank)
        self._queues = queues
        self._barrier = barrier
        self.words_sent = defaultdict(int)
        self.words_received = defaultdict(int)
        self.tag_words_sent = defaultdict(int)
        self.tag_words_received = defaultdict(int)
        self.messages_sent = 0
        self.messages_received = 0
        self.tag_messages_sent = defaultdict(int)

    def send(self, peer, payload, tag="halo"):
        if peer not in self.peers:
            raise ValueError(f"rank {self.rank} has no peer {peer}")
        data = np.array(payload, dtype=float, copy=True)
        self.words_sent[peer] += data.size
        self.tag_words_sent[tag] += data.size
        self.messages_sent += 1
        self.tag_messages_sent[tag] += 1
        self._queues[self.rank, peer].put((tag, data))

    def receive(self, peer, timeout=None):
        if peer not in self.peers:
            raise ValueError(f"rank {self.rank} has no peer {peer}")
        try:
            tag, data = self._queues[peer, self.rank].get(timeout=timeout)
        except queue.Empty:
            raise TransportTimeout(
                f"rank {self.rank} timed out waiting for rank {peer}"
            ) from None
        self.words_received[peer] += data.size
        self.tag_words_received[tag] += data.size
        self.messages_received += 1
        return data

    def barrier(self, timeout=None):
        try:
            self._barrier.wait(timeout=timeout)
        except threading.BrokenBarrierError:
            self._barrier.reset()
            raise TransportTimeout(
                f"barrier broken or timed out at rank {self.rank}"
            ) from None

    @property
    def total_words_sent(self):
        return sum(self.words_sent.values())

    @property
    def total_words_received(self):
        return sum(self.words_received.values())

    def reset_counters(self):
        self.words_sent.clear()
        self.words_received.clear()
        self.tag_words_sent.clear()
        self.tag_words_received.clear()
        self.tag_messages_sent.clear()
        self.messages_sent = 0
        self.messages_received = 0


def loopback_transport(n_ranks):
    """Build n_ranks connected endpoints with ordered in-memory delivery."""
    if n_ranks < 1:
        raise ValueError("n_ranks must be >= 1")
    queues = {
        (src, dst): queue.Queue()
        for src in range(n_ranks)
        for dst in range(n_ranks)
        if src != dst
    }
    barrier = threading.Barrier(n_ranks)
    return [
        LoopbackEndpoint(rank, n_ranks, queues, barrier)
        for rank in range(n_ranks)
    ]


def allreduce_sum(endpoint, values):
    """Sum a small vector across ranks, deterministically in rank order.

    Rank 0 accumulates partials in ascending rank order and broadcasts the
    result, so every rank sees bitwise-identical sums within a run.
    """
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if endpoint.n_ranks == 1:
        return values.copy()
    if endpoint.rank == 0:
        acc = values.copy()
        for peer in range(1, endpoint.n_ranks):
            acc = acc + endpoint.receive(peer)
        for peer in range(1, endpoint.n_ranks):
            endpoint.send(peer, acc, tag="reduce")
        return acc
    endpoint.send(0, values, tag="reduce")
    return endpoint.receive(0)
