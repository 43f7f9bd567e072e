"""Deterministic discrete-event loop.

The engine owns a millisecond clock, a (fire_at, seq)-ordered event
queue, and the run's single random stream. Events with equal fire times
dequeue in insertion order. `run_until` drives the queue with an
arbitrary Python predicate; `run_blocks` uses the fused compiled loop
and is the path scenario runs take; `run_blocks_stepped` is the same run
driven one event at a time (the two are asserted digest-identical in the
tests).

Scheduling returns a ticket; cancelling an unfired event removes it from
the queue outright (no tombstones), so a node's stale mining event never
lingers. Tickets embed a per-slot generation counter, so cancelling an
already-fired or already-cancelled event safely returns False.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .errors import EngineStarved
from .eventheap import (
    EV_BLOCK,
    EV_GETDATA,
    EV_INV,
    EV_MINE,
    EV_REFRESH,
    heap_remove,
    slot_release,
)
from .kernelloop import event_loop
from .protocol import cancel_mining, schedule_event, step_once
from .simstate import SimState


class EventKind(Enum):
    BLOCK_MINED = EV_MINE
    INV = EV_INV
    GETDATA = EV_GETDATA
    BLOCK = EV_BLOCK
    NEIGHBOR_REFRESH = EV_REFRESH


@dataclass(frozen=True)
class Event:
    """A timestamped occurrence; field use depends on the kind.

    BLOCK_MINED: node, parent_block. NEIGHBOR_REFRESH: node.
    INV/GETDATA/BLOCK: sender, receiver, block.
    """

    fire_at: int
    kind: EventKind
    node: int = 0
    parent_block: int = 0
    sender: int = 0
    receiver: int = 0
    block: int = 0

    def _payload(self):
        if self.kind is EventKind.BLOCK_MINED:
            return self.node, self.parent_block, 0
        if self.kind is EventKind.NEIGHBOR_REFRESH:
            return self.node, 0, 0
        return self.sender, self.receiver, self.block


class Engine:
    """Single-threaded event loop over one SimState."""

    def __init__(self, state: SimState):
        self.state = state

    @property
    def now(self) -> int:
        return int(self.state.run.clock[0])

    @property
    def blocks_mined(self) -> int:
        return int(self.state.run.mined[0])

    @property
    def queue_size(self) -> int:
        return int(self.state.heap.size[0])

    def schedule(self, event: Event) -> int:
        """Enqueue an event; returns a cancellation ticket.

        Events targeted before the current clock are rejected: the clock
        never runs backwards, so a past fire time is an engine-logic bug.
        """
        if event.fire_at < self.now:
            raise ValueError(
                f"cannot schedule event at t={event.fire_at} before clock {self.now}"
            )
        a, b, c = event._payload()
        if event.kind is EventKind.BLOCK_MINED:
            # one pending mining event per node
            cancel_mining(self.state, event.node)
        slot = schedule_event(
            self.state, event.kind.value, a, b, c, int(event.fire_at)
        )
        if event.kind is EventKind.BLOCK_MINED:
            self.state.nodes.mine_slot[event.node] = slot
        return (int(self.state.pool.gen[slot]) << 32) | int(slot)

    def cancel(self, ticket: int) -> bool:
        """Remove a pending event. False if it already fired or was cancelled."""
        slot = ticket & 0xFFFFFFFF
        gen = ticket >> 32
        heap = self.state.heap
        pool = self.state.pool
        if slot >= pool.gen.shape[0] or int(pool.gen[slot]) != gen:
            return False
        if heap_remove(heap.time, heap.seq, heap.slot, heap.size, pool.pos, slot):
            node = int(pool.a[slot])
            if (
                int(pool.kind[slot]) == EV_MINE
                and 0 <= node < self.state.nodes.mine_slot.shape[0]
                and int(self.state.nodes.mine_slot[node]) == slot
            ):
                self.state.nodes.mine_slot[node] = -1
            slot_release(pool.gen, pool.pos, pool.free, pool.free_top, slot)
            return True
        return False

    def step(self) -> Optional[EventKind]:
        """Process one event; None when the queue is empty."""
        kind = step_once(self.state)
        return None if kind < 0 else EventKind(kind)

    def run_until(self, stop: Callable[["Engine"], bool]) -> int:
        """Process events in order until the predicate holds.

        Raises EngineStarved if the queue runs dry first.
        """
        while not stop(self):
            if self.queue_size == 0:
                raise EngineStarved(
                    "event queue exhausted before the stop condition held"
                )
            self.step()
        return self.now

    def run_blocks(self, stop_blocks: int, drain: bool = False) -> int:
        """Run until stop_blocks blocks exist; optionally drain in-flight
        messages afterwards (mining stops, deliveries finish)."""
        rc = event_loop(self.state, stop_blocks, 1 if drain else 0)
        if rc < 0:
            raise EngineStarved(
                "event queue exhausted before the stop condition held"
            )
        return self.now

    def run_blocks_stepped(self, stop_blocks: int, drain: bool = False) -> int:
        """Same contract as run_blocks, one event at a time (reference path)."""
        while self.blocks_mined < stop_blocks:
            if self.queue_size == 0:
                raise EngineStarved(
                    "event queue exhausted before the stop condition held"
                )
            self.step()
        if drain:
            self.state.run.draining[0] = 1
            for i in range(int(self.state.prm.n)):
                cancel_mining(self.state, i)
            while self.queue_size > 0:
                self.step()
        return self.now
