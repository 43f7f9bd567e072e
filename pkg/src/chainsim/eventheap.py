"""Addressable binary min-heap for the event queue.

Entries are ordered by (fire_time, seq); seq is a monotone insertion
counter so ties dequeue in schedule order. Each heap entry points at a
slot in a fixed-capacity pool holding the event payload; the pool keeps
the slot's current heap position so a pending event can be removed in
O(log n) (needed to abort a node's mining event when its tip changes,
without leaving stale entries to rot in the queue).

Slots are recycled through a free list. A generation counter per slot
disambiguates recycled slots, so a stale ticket never cancels somebody
else's event. Tickets are ``(gen << 32) | slot``.

The primitives take the underlying arrays directly rather than the
state tuple: inside compiled loops, repeated attribute access on a
tuple of arrays costs an atomic refcount pair per access that LLVM
cannot always prune, and the event queue is the hottest structure in
the simulator.
"""

from collections import namedtuple

import numpy as np

from ._backend import inline_kernel

# Event kind codes stored in the slot pool.
EV_MINE = 0  # a=node, b=parent block
EV_INV = 1  # a=sender, b=receiver, c=block
EV_GETDATA = 2  # a=sender, b=receiver, c=block
EV_BLOCK = 3  # a=sender, b=receiver, c=block
EV_REFRESH = 4  # a=node

HeapState = namedtuple("HeapState", ["time", "seq", "slot", "size"])
SlotPool = namedtuple(
    "SlotPool",
    ["kind", "a", "b", "c", "fire", "pos", "gen", "free", "free_top"],
)


def new_heap(capacity: int) -> HeapState:
    return HeapState(
        time=np.zeros(capacity, dtype=np.int64),
        seq=np.zeros(capacity, dtype=np.int64),
        slot=np.zeros(capacity, dtype=np.int32),
        size=np.zeros(1, dtype=np.int64),
    )


def new_pool(capacity: int) -> SlotPool:
    pool = SlotPool(
        kind=np.zeros(capacity, dtype=np.int8),
        a=np.zeros(capacity, dtype=np.int32),
        b=np.zeros(capacity, dtype=np.int32),
        c=np.zeros(capacity, dtype=np.int32),
        fire=np.zeros(capacity, dtype=np.int64),
        pos=np.full(capacity, -1, dtype=np.int32),
        gen=np.zeros(capacity, dtype=np.int64),
        free=np.zeros(capacity, dtype=np.int32),
        free_top=np.zeros(1, dtype=np.int64),
    )
    # Stack of free slots; pop from the end so low slot ids go out first.
    pool.free[:] = np.arange(capacity - 1, -1, -1, dtype=np.int32)
    pool.free_top[0] = capacity
    return pool


@inline_kernel
def slot_alloc(p_kind, p_a, p_b, p_c, p_fire, p_pos, p_free, p_free_top,
               kind, a, b, c, fire):
    """Take a free slot and fill the event payload. -1 if pool exhausted."""
    top = p_free_top[0]
    if top == 0:
        return -1
    top -= 1
    p_free_top[0] = top
    s = p_free[top]
    p_kind[s] = kind
    p_a[s] = a
    p_b[s] = b
    p_c[s] = c
    p_fire[s] = fire
    p_pos[s] = -1
    return s


@inline_kernel
def slot_release(p_gen, p_pos, p_free, p_free_top, s):
    p_gen[s] += 1
    p_pos[s] = -1
    top = p_free_top[0]
    p_free[top] = s
    p_free_top[0] = top + 1


@inline_kernel
def _sift_up(h_time, h_seq, h_slot, p_pos, i):
    while i > 0:
        p = (i - 1) >> 1
        if (h_time[p] > h_time[i]) or (
            h_time[p] == h_time[i] and h_seq[p] > h_seq[i]
        ):
            h_time[p], h_time[i] = h_time[i], h_time[p]
            h_seq[p], h_seq[i] = h_seq[i], h_seq[p]
            h_slot[p], h_slot[i] = h_slot[i], h_slot[p]
            p_pos[h_slot[i]] = i
            p_pos[h_slot[p]] = p
            i = p
        else:
            break
    return i


@inline_kernel
def _sift_down(h_time, h_seq, h_slot, h_size, p_pos, i):
    n = h_size[0]
    while True:
        l = 2 * i + 1
        if l >= n:
            break
        c = l
        r = l + 1
        if r < n and (
            (h_time[r] < h_time[l])
            or (h_time[r] == h_time[l] and h_seq[r] < h_seq[l])
        ):
            c = r
        if (h_time[c] < h_time[i]) or (
            h_time[c] == h_time[i] and h_seq[c] < h_seq[i]
        ):
            h_time[c], h_time[i] = h_time[i], h_time[c]
            h_seq[c], h_seq[i] = h_seq[i], h_seq[c]
            h_slot[c], h_slot[i] = h_slot[i], h_slot[c]
            p_pos[h_slot[c]] = c
            p_pos[h_slot[i]] = i
            i = c
        else:
            break
    return i


@inline_kernel
def heap_push(h_time, h_seq, h_slot, h_size, p_pos, fire, seq, s):
    """Insert slot s at (fire, seq). Returns False when the heap is full."""
    n = h_size[0]
    if n >= h_time.shape[0]:
        return False
    h_time[n] = fire
    h_seq[n] = seq
    h_slot[n] = s
    p_pos[s] = n
    h_size[0] = n + 1
    _sift_up(h_time, h_seq, h_slot, p_pos, n)
    return True


@inline_kernel
def heap_pop_min(h_time, h_seq, h_slot, h_size, p_pos):
    """Remove and return the slot of the earliest event (-1 if empty)."""
    n = h_size[0]
    if n == 0:
        return -1
    s = h_slot[0]
    n -= 1
    h_size[0] = n
    if n > 0:
        h_time[0] = h_time[n]
        h_seq[0] = h_seq[n]
        h_slot[0] = h_slot[n]
        p_pos[h_slot[0]] = 0
        _sift_down(h_time, h_seq, h_slot, h_size, p_pos, 0)
    p_pos[s] = -1
    return s


@inline_kernel
def heap_remove(h_time, h_seq, h_slot, h_size, p_pos, s):
    """Remove slot s from the heap if still pending. True on removal."""
    i = p_pos[s]
    if i < 0:
        return False
    n = h_size[0] - 1
    h_size[0] = n
    if i < n:
        h_time[i] = h_time[n]
        h_seq[i] = h_seq[n]
        h_slot[i] = h_slot[n]
        p_pos[h_slot[i]] = i
        j = _sift_up(h_time, h_seq, h_slot, p_pos, i)
        if j == i:
            _sift_down(h_time, h_seq, h_slot, h_size, p_pos, i)
    p_pos[s] = -1
    return True
