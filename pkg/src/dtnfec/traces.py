"""Contact traces: storage, text IO, synthetic generators and preprocessing.

Trace file format: UTF-8 text, one contact per line as
``time_seconds node_a node_b`` separated by whitespace.  Lines starting
with ``#`` are comments.  Times must be nondecreasing.  An optional fourth
column (contact end time) is accepted and ignored.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import TraceFormatError


class ContactEvent(NamedTuple):
    time: float
    node_a: int
    node_b: int


@dataclass(frozen=True, eq=False)
class ContactTrace:
    """Time-sorted pairwise meetings among ``node_count`` nodes in [0, horizon]."""

    times: np.ndarray
    node_a: np.ndarray
    node_b: np.ndarray
    node_count: int
    horizon: float

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        a = np.ascontiguousarray(self.node_a, dtype=np.int64)
        b = np.ascontiguousarray(self.node_b, dtype=np.int64)
        for arr in (times, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "node_a", a)
        object.__setattr__(self, "node_b", b)
        if not (len(times) == len(a) == len(b)):
            raise ValueError("event arrays differ in length")
        if len(times):
            if np.any(np.diff(times) < 0):
                raise ValueError("events must be sorted by time")
            if times[0] < 0 or times[-1] > self.horizon:
                raise ValueError("event times must lie in [0, horizon]")
            if np.any(a == b):
                raise ValueError("a node cannot meet itself")
            lo = min(a.min(), b.min())
            hi = max(a.max(), b.max())
            if lo < 0 or hi >= self.node_count:
                raise ValueError(f"node ids must lie in [0, {self.node_count})")

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[ContactEvent]:
        for t, a, b in zip(self.times.tolist(), self.node_a.tolist(), self.node_b.tolist()):
            yield ContactEvent(t, a, b)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ContactTrace):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and self.horizon == other.horizon
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.node_a, other.node_a)
            and np.array_equal(self.node_b, other.node_b)
        )

    @classmethod
    def from_events(cls, events: Sequence, node_count: int | None = None, horizon: float | None = None):
        events = [ContactEvent(float(t), int(a), int(b)) for t, a, b in events]
        times = np.array([e.time for e in events], dtype=float)
        a = np.array([e.node_a for e in events], dtype=np.int64)
        b = np.array([e.node_b for e in events], dtype=np.int64)
        if node_count is None:
            node_count = int(max(a.max(), b.max()) + 1) if events else 0
        if horizon is None:
            horizon = float(times[-1]) if events else 0.0
        return cls(times, a, b, node_count, horizon)

    def contact_counts(self) -> np.ndarray:
        """Events touching each node."""
        return np.bincount(self.node_a, minlength=self.node_count) + np.bincount(
            self.node_b, minlength=self.node_count
        )

    def window(self, start: float, stop: float) -> "ContactTrace":
        keep = (self.times >= start) & (self.times <= stop)
        return ContactTrace(
            self.times[keep] - start, self.node_a[keep], self.node_b[keep], self.node_count, stop - start
        )

    def without_interval(self, start: float, stop: float) -> "ContactTrace":
        """Drop every contact in [start, stop): an activity hole."""
        keep = (self.times < start) | (self.times >= stop)
        return ContactTrace(self.times[keep], self.node_a[keep], self.node_b[keep], self.node_count, self.horizon)


def _parse_line(raw: str, lineno: int):
    fields = raw.split()
    if len(fields) not in (3, 4):
        raise TraceFormatError(f"expected 3 or 4 fields, got {len(fields)}", lineno)
    try:
        t = float(fields[0])
    except ValueError:
        raise TraceFormatError(f"bad time {fields[0]!r}", lineno) from None
    if not math.isfinite(t) or t < 0:
        raise TraceFormatError(f"time must be finite and nonnegative, got {fields[0]!r}", lineno)
    ids = []
    for f in fields[1:3]:
        if not f.isdigit():
            raise TraceFormatError(f"node id must be a nonnegative integer, got {f!r}", lineno)
        ids.append(int(f))
    if ids[0] == ids[1]:
        raise TraceFormatError(f"node {ids[0]} meets itself", lineno)
    return t, ids[0], ids[1], len(fields) == 4


def read_trace(path, node_count: int | None = None, horizon: float | None = None) -> ContactTrace:
    """Load a trace file; errors name the offending line."""
    times, na, nb = [], [], []
    warned = False
    prev = -math.inf
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            t, a, b, has_end = _parse_line(stripped, lineno)
            if has_end and not warned:
                warnings.warn(f"{path}: contact end times ignored", stacklevel=2)
                warned = True
            if t < prev:
                raise TraceFormatError(f"time {t} precedes previous event at {prev} (unsorted)", lineno)
            prev = t
            times.append(t)
            na.append(a)
            nb.append(b)
    max_id = max(max(na, default=-1), max(nb, default=-1))
    if node_count is None:
        node_count = max_id + 1
    elif max_id >= node_count:
        raise TraceFormatError(f"node id {max_id} exceeds node_count {node_count}")
    if horizon is None:
        horizon = times[-1] if times else 0.0
    return ContactTrace(np.array(times), np.array(na, dtype=np.int64), np.array(nb, dtype=np.int64), node_count, horizon)


def write_trace(trace: ContactTrace, path, header: str | None = None):
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.append(f"# nodes={trace.node_count} horizon={trace.horizon!r}")
    lines.extend(f"{t!r} {a} {b}" for t, a, b in trace)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _involving_layout(node_count: int, involving) -> tuple[list[int], list[np.ndarray], np.ndarray]:
    """Listed nodes, the partners each must skip, and cumulative pair counts.

    Node ``u`` (the k-th listed) pairs with every node except itself and the
    listed nodes before it, so each touching pair is counted once.
    """
    inv = sorted({int(u) for u in involving})
    if not inv or inv[0] < 0 or inv[-1] >= node_count:
        raise ValueError("involving must list node ids in [0, node_count)")
    skips = [np.array(inv[: k + 1], dtype=np.int64) for k in range(len(inv))]
    counts = np.array([node_count - len(sk) for sk in skips], dtype=np.int64)
    return inv, skips, np.concatenate([[0], np.cumsum(counts)])


def _pairs_from_index(index: np.ndarray, inv, skips, offsets) -> tuple[np.ndarray, np.ndarray]:
    owner = np.searchsorted(offsets, index, side="right") - 1
    rank = index - offsets[owner]
    a = np.empty_like(index)
    b = np.empty_like(index)
    for k, u in enumerate(inv):
        sel = owner == k
        partner = rank[sel].copy()
        # the r-th node outside the sorted skip list
        for e in skips[k]:
            partner += partner >= e
        a[sel] = np.minimum(u, partner)
        b[sel] = np.maximum(u, partner)
    return a, b


def gen_contacts_exponential(
    node_count: int,
    lam: float,
    horizon: float,
    seed=None,
    involving: Sequence[int] | None = None,
) -> ContactTrace:
    """Independent Poisson(lam) meeting processes for every unordered pair.

    ``involving`` restricts generation to pairs touching the listed nodes,
    which is all a two-hop replay between them ever reads.  ``seed`` may be
    an int, a SeedSequence or a Generator.  The superposition is drawn as one
    Poisson total with uniformly chosen pairs, which has the same law and
    costs time proportional to the number of events.
    """
    if node_count < 2:
        raise ValueError("node_count must be >= 2")
    if not lam > 0 or not horizon > 0:
        raise ValueError("lam and horizon must be positive")
    rng = np.random.default_rng(seed)
    if involving is None:
        n_pairs = node_count * (node_count - 1) // 2
    else:
        inv, skips, offsets = _involving_layout(node_count, involving)
        n_pairs = int(offsets[-1])
    total = int(rng.poisson(lam * horizon * n_pairs))
    index = rng.integers(0, n_pairs, size=total, dtype=np.int64)
    times = np.sort(rng.uniform(0.0, horizon, size=total))
    if involving is None:
        # row-major position in the strict upper triangle
        n = node_count
        a = (n - 0.5 - np.sqrt((n - 0.5) ** 2 - 2.0 * index)).astype(np.int64)
        start = a * (2 * n - a - 1) // 2
        a = np.where(start > index, a - 1, a)
        start = a * (2 * n - a - 1) // 2
        nxt = (a + 1) * (2 * n - a - 2) // 2
        a = np.where(nxt <= index, a + 1, a)
        start = a * (2 * n - a - 1) // 2
        b = a + 1 + (index - start)
    else:
        a, b = _pairs_from_index(index, inv, skips, offsets)
    return ContactTrace(times, a, b, node_count, horizon)


def estimate_lambda(trace: ContactTrace, window: tuple[float, float] | None = None) -> float:
    """Pairwise meeting rate: events / (pairs x window length)."""
    if trace.node_count < 2:
        raise ValueError("need at least two nodes")
    start, stop = (0.0, trace.horizon) if window is None else window
    length = stop - start
    if not length > 0:
        raise ValueError("window must have positive length")
    n_events = int(np.count_nonzero((trace.times >= start) & (trace.times <= stop)))
    if n_events == 0:
        raise ValueError("no events in window")
    pairs = trace.node_count * (trace.node_count - 1) / 2
    return n_events / (pairs * length)


def filter_active_nodes(trace: ContactTrace, min_contacts: int) -> ContactTrace:
    """Keep nodes with at least ``min_contacts`` contacts, renumbered densely.

    Dropping a node removes its contacts, which can push others below the
    threshold, so the filter is repeated until nothing changes.
    """
    if min_contacts < 0:
        raise ValueError("min_contacts must be >= 0")
    if min_contacts == 0:
        return trace
    keep_nodes = np.ones(trace.node_count, dtype=bool)
    a, b, t = trace.node_a, trace.node_b, trace.times
    while True:
        ev = keep_nodes[a] & keep_nodes[b]
        counts = np.bincount(a[ev], minlength=trace.node_count) + np.bincount(b[ev], minlength=trace.node_count)
        new_keep = keep_nodes & (counts >= min_contacts)
        if np.array_equal(new_keep, keep_nodes):
            break
        keep_nodes = new_keep
    if not keep_nodes.any():
        raise ValueError(f"no node has {min_contacts} or more contacts")
    ev = keep_nodes[a] & keep_nodes[b]
    new_id = np.cumsum(keep_nodes) - 1
    return ContactTrace(t[ev], new_id[a[ev]], new_id[b[ev]], int(keep_nodes.sum()), trace.horizon)


def pair_contact_histogram(trace: ContactTrace) -> dict[int, int]:
    """Number of node pairs by how many contacts they had (pairs with zero included)."""
    n = trace.node_count
    keys = np.minimum(trace.node_a, trace.node_b) * n + np.maximum(trace.node_a, trace.node_b)
    _, per_pair = np.unique(keys, return_counts=True)
    hist = dict(zip(*np.unique(per_pair, return_counts=True)))
    out = {int(k): int(v) for k, v in hist.items()}
    silent = n * (n - 1) // 2 - len(per_pair)
    if silent:
        out[0] = silent
    return dict(sorted(out.items()))


def gen_contacts_rwp(
    side: float,
    radio_range: float,
    speed: float,
    node_count: int,
    horizon: float,
    step: float,
    seed=None,
    warmup_fraction: float = 0.1,
    initial_positions: np.ndarray | None = None,
) -> ContactTrace:
    """Random-waypoint mobility on a square, sampled every ``step`` seconds.

    A contact is emitted when a pair's distance drops below ``radio_range``
    (one event per crossing; pairs already in range at the first recorded
    instant emit at t = 0).  The walk first runs for ``warmup_fraction *
    horizon`` unrecorded seconds to approach the stationary node
    distribution.  ``speed * step`` must stay below ``radio_range`` so that
    crossings are not skipped.
    """
    if not 0 < radio_range < side:
        raise ValueError("radio_range must lie in (0, side)")
    if node_count < 2:
        raise ValueError("node_count must be >= 2")
    if not speed * step < radio_range:
        raise ValueError(
            f"step too coarse: speed*step = {speed * step} must be < radio_range = {radio_range}"
        )
    rng = np.random.default_rng(seed)
    if initial_positions is None:
        pos = rng.uniform(0.0, side, size=(node_count, 2))
    else:
        pos = np.array(initial_positions, dtype=float).reshape(node_count, 2)
    target = rng.uniform(0.0, side, size=(node_count, 2))
    iu, ju = np.triu_indices(node_count, k=1)
    r2 = radio_range * radio_range

    def advance(pos, target):
        delta = target - pos
        dist = np.hypot(delta[:, 0], delta[:, 1])
        hop = speed * step
        arrived = dist <= hop
        frac = np.where(arrived, 1.0, hop / np.where(dist > 0, dist, 1.0))
        pos = pos + delta * frac[:, None]
        if arrived.any():
            target = target.copy()
            target[arrived] = rng.uniform(0.0, side, size=(int(arrived.sum()), 2))
        return pos, target

    for _ in range(int(round(warmup_fraction * horizon / step))):
        pos, target = advance(pos, target)

    times, ea, eb = [], [], []
    in_range = np.zeros(len(iu), dtype=bool)
    n_steps = int(math.floor(horizon / step))
    for k in range(n_steps + 1):
        d = pos[iu] - pos[ju]
        now = (d[:, 0] ** 2 + d[:, 1] ** 2) < r2
        new = np.flatnonzero(now & ~in_range)
        if len(new):
            times.append(np.full(len(new), k * step))
            ea.append(iu[new])
            eb.append(ju[new])
        in_range = now
        if k < n_steps:
            pos, target = advance(pos, target)
    if times:
        t = np.concatenate(times)
        a = np.concatenate(ea)
        b = np.concatenate(eb)
    else:
        t, a, b = np.zeros(0), np.zeros(0, np.int64), np.zeros(0, np.int64)
    return ContactTrace(t, a, b, node_count, float(horizon))


def rwp_meeting_rate(side: float, radio_range: float, speed: float) -> float:
    """Approximate pairwise meeting rate under random waypoint on a square.

    Uses lam ~ 2 w R v / A with w ~ 1.3683, the usual estimate for
    random-waypoint relative speed on a square.
    """
    return 2 * 1.3683 * radio_range * speed / (side * side)
