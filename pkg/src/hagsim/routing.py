"""Earliest-delivery route search over a contact plan.

The search runs label-setting Dijkstra over contacts: the label of a
contact is the earliest time a file of the requested size can finish
crossing it.  Transmission starts no earlier than the contact window and
must complete before the window closes; a hop is only eligible while its
residual (unbooked) volume covers the whole file.  Among routes tied on
delivery time the search prefers fewer hops, then the lexicographically
smallest contact-id sequence, considering only labels that were never
dominated on arrival time.
"""

from __future__ import annotations

import bisect
import heapq
from dataclasses import dataclass

from .plan import ContactPlan


class RoutingError(ValueError):
    pass


@dataclass(frozen=True)
class Route:
    hops: tuple[str, ...]
    best_delivery_ms: int
    bottleneck_volume_bits: int

    @property
    def best_delivery_s(self) -> float:
        return self.best_delivery_ms / 1000.0


def transmission_ms(size_bits: int, rate_bps: int) -> int:
    """Whole milliseconds needed to push size_bits at rate_bps (rounded up)."""
    return -(-size_bits * 1000 // rate_bps)


class ContactGraph:
    """Flat successor index over a plan, built once and queried many times.

    Contacts are indexed in lexicographic id order, so comparing index
    tuples is the same as comparing id sequences.  Per-node outgoing
    contacts are kept sorted by end time: everything ending at or before
    an arrival can be skipped wholesale.
    """

    def __init__(self, plan: ContactPlan):
        self.plan = plan
        contacts = sorted(plan.contacts, key=lambda c: c.contact_id)
        self.contacts = contacts
        self.index = {c.contact_id: i for i, c in enumerate(contacts)}
        self.start_ms = [c.start_ms for c in contacts]
        self.end_ms = [c.end_ms for c in contacts]
        self.rate_bps = [c.rate_bps for c in contacts]
        self.capacity = [c.capacity_bits for c in contacts]
        self.rx = [c.rx for c in contacts]

        grouped: dict[str, list[int]] = {}
        for i, c in enumerate(contacts):
            grouped.setdefault(c.tx, []).append(i)
        # per node: (end times ascending, matching contact indices)
        self.out_by_node: dict[str, tuple[list[int], list[int]]] = {}
        for node, idxs in grouped.items():
            idxs.sort(key=lambda k: (self.end_ms[k], k))
            self.out_by_node[node] = ([self.end_ms[k] for k in idxs], idxs)
        empty: tuple[list[int], list[int]] = ([], [])
        # successors of contact i are the contacts leaving its rx node
        self.succ = [self.out_by_node.get(c.rx, empty) for c in contacts]
        self.nodes = plan.node_ids()


def best_route(
    plan: ContactPlan | ContactGraph,
    residuals: dict[str, int],
    src: str,
    dst: str,
    t_now_ms: int,
    size_bits: int,
    known_nodes: set[str] | None = None,
    excluded: frozenset[str] = frozenset(),
) -> Route | None:
    """Route minimizing delivery time for a whole file of size_bits.

    `residuals` gives the bookable volume per contact id; contacts absent
    from the map count as fully available.  `excluded` contacts are
    skipped outright (used by reactive runs for links observed down at
    query time).  Returns None when no feasible route exists.
    """
    if size_bits <= 0:
        raise RoutingError("size_bits must be positive")
    g = plan if isinstance(plan, ContactGraph) else ContactGraph(plan)
    nodes = g.nodes if known_nodes is None else (g.nodes | known_nodes)
    if src not in nodes:
        raise RoutingError(f"unknown node {src!r}")
    if dst not in nodes:
        raise RoutingError(f"unknown node {dst!r}")
    if src == dst:
        return Route(hops=(), best_delivery_ms=t_now_ms, bottleneck_volume_bits=0)

    n = len(g.contacts)
    start_ms, end_ms, rx, succ = g.start_ms, g.end_ms, g.rx, g.succ
    contacts, rates, capacity = g.contacts, g.rate_bps, g.capacity
    res_get = residuals.get

    # eligibility and transmission time, evaluated lazily per touched
    # contact: -1 marks ineligible (excluded, booked out, or already over)
    elig: dict[int, int] = {}
    tx_by_rate: dict[int, int] = {}

    def tx_of(i: int) -> int:
        v = elig.get(i)
        if v is None:
            if end_ms[i] <= t_now_ms or contacts[i].contact_id in excluded:
                v = -1
            elif res_get(contacts[i].contact_id, capacity[i]) < size_bits:
                v = -1
            else:
                rate = rates[i]
                v = tx_by_rate.get(rate)
                if v is None:
                    v = tx_by_rate[rate] = transmission_ms(size_bits, rate)
            elig[i] = v
        return v

    # labels: (finish_ms, hop_count, index_sequence); heap carries them with
    # the contact index appended for a total order.  Once some path has
    # reached the destination, anything finishing strictly later is dead:
    # every prefix of a route tying the optimum finishes within the bound,
    # so the bound never disturbs the tie-break.
    best: dict[int, tuple] = {}
    parent: dict[int, int] = {}
    heap: list[tuple] = []
    elig_get = elig.get
    bound = None

    src_ends, src_idxs = g.out_by_node.get(src, ([], []))
    for k in range(bisect.bisect_right(src_ends, t_now_ms), len(src_idxs)):
        i = src_idxs[k]
        tx = tx_of(i)
        if tx < 0:
            continue
        s = t_now_ms if t_now_ms > start_ms[i] else start_ms[i]
        finish = s + tx
        if finish > end_ms[i]:
            continue
        label = (finish, 1, (i,))
        if i not in best or label < best[i]:
            best[i] = label
            parent[i] = -1
            heapq.heappush(heap, (finish, 1, (i,), i))
            if rx[i] == dst and (bound is None or finish < bound):
                bound = finish

    while heap:
        finish, hops, seq, i = heapq.heappop(heap)
        if best.get(i) != (finish, hops, seq):
            continue  # stale entry
        if rx[i] == dst:
            chain = _chain(parent, i)
            hop_ids = tuple(contacts[k].contact_id for k in chain)
            bottleneck = min(
                res_get(hid, capacity[k]) for hid, k in zip(hop_ids, chain)
            )
            return Route(hops=hop_ids, best_delivery_ms=finish, bottleneck_volume_bits=bottleneck)
        nhops = hops + 1
        ends, idxs = succ[i]
        for k in range(bisect.bisect_right(ends, finish), len(idxs)):
            j = idxs[k]
            if j == i:
                continue
            tx = elig_get(j)
            if tx is None:
                tx = tx_of(j)
            if tx < 0:
                continue
            s = finish if finish > start_ms[j] else start_ms[j]
            nfinish = s + tx
            if nfinish > end_ms[j] or (bound is not None and nfinish > bound):
                continue
            old = best.get(j)
            if old is not None and old[0] < nfinish:
                continue
            label = (nfinish, nhops, seq + (j,))
            if old is None or label < old:
                best[j] = label
                parent[j] = i
                heapq.heappush(heap, (nfinish, nhops, label[2], j))
                if rx[j] == dst and (bound is None or nfinish < bound):
                    bound = nfinish
    return None


def _chain(parent: dict[int, int], i: int) -> list[int]:
    out = [i]
    while parent[out[-1]] != -1:
        out.append(parent[out[-1]])
    out.reverse()
    return out


def book(residuals: dict[str, int], route: Route, size_bits: int) -> dict[str, int]:
    """Reduce each hop's residual by size_bits; negative size releases.

    Every hop must already have an entry in `residuals`.
    """
    out = dict(residuals)
    if size_bits > 0:
        for cid in route.hops:
            if out[cid] < size_bits:
                raise RoutingError(f"overbooked contact {cid}")
    for cid in route.hops:
        out[cid] -= size_bits
    return out
