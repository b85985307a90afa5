"""Deterministic discrete-event simulation of store-carry-and-forward downlink.

One run executes a scenario against a contact plan and a weather plan.
In *oracle* mode the weather plan is treated as a perfect forecast: the
plan is carved before the run and routing only ever sees windows that
are actually usable.  In *reactive* mode routing sees the geometric
plan; a transmission attempted while the contact's ground site is
cloud-covered fails, the bundle stays with its custodian, and routing is
retried as the situation evolves.

The clock is integer milliseconds and simultaneous events are ordered by
a fixed kind rank and then by id, so a run is a pure function of its
inputs.  Transmissions are FIFO per contact at the contact rate; a file
cut off by the end of a window keeps its per-hop progress and resumes on
a later contact between the same pair of nodes.  Custody (and buffer
accounting) moves only when the last bit of a file crosses a hop.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field

from .plan import Contact, ContactPlan, carve
from .routing import ContactGraph, Route, best_route, transmission_ms
from .scenario import ScenarioConfig
from .weather import WeatherPlan

# Event kind ranks fix the processing order of simultaneous events:
# clearings open capacity before anything else, transmissions that end
# exactly when a contact (or block) does still complete, and window
# closings are handled last.
_WEND, _CSTART, _GEN, _TXDONE, _WSTART, _CEND = range(6)
_KIND_NAMES = {
    _WEND: "WEND",
    _CSTART: "CSTART",
    _GEN: "GEN",
    _TXDONE: "TXDONE",
    _WSTART: "WSTART",
    _CEND: "CEND",
}


class SimulationError(RuntimeError):
    pass


@dataclass
class BundleRecord:
    """Per-file outcome of one run."""

    bundle_id: str
    size_bits: int
    t_gen_ms: int
    src: str
    dst: str
    delivered_at_ms: int | None = None
    custodian_path: list[str] = field(default_factory=list)

    @property
    def t_gen_s(self) -> float:
        return self.t_gen_ms / 1000.0

    @property
    def delivered_at_s(self) -> float | None:
        return None if self.delivered_at_ms is None else self.delivered_at_ms / 1000.0


@dataclass
class SimResult:
    scenario: dict
    replication: int
    seed: int
    duration_ms: int
    mode: str
    bundles: list[BundleRecord]
    bo_series: dict[str, list[tuple[int, int]]]
    generated: int
    delivered: int
    dropped: int
    conservation_checks: int
    event_log: list[str] | None = None

    def to_json(self) -> str:
        doc = {
            "scenario": self.scenario,
            "replication": self.replication,
            "seed": self.seed,
            "duration_s": self.duration_ms / 1000.0,
            "mode": self.mode,
            "generated": self.generated,
            "delivered": self.delivered,
            "dropped": self.dropped,
            "bundles": [
                {
                    "bundle_id": b.bundle_id,
                    "size_bits": b.size_bits,
                    "t_gen_s": b.t_gen_s,
                    "delivered_at_s": b.delivered_at_s,
                    "custodian_path": b.custodian_path,
                }
                for b in self.bundles
            ],
            "bo_series": {
                node: [[t / 1000.0, bits] for t, bits in series]
                for node, series in sorted(self.bo_series.items())
            },
        }
        return json.dumps(doc, sort_keys=True, indent=1)


@dataclass
class _Bundle:
    bundle_id: str
    size_bits: int
    t_gen_ms: int
    src: str
    dst: str
    custodian: str = ""
    delivered_at_ms: int | None = None
    dropped: bool = False
    custodian_path: list[str] = field(default_factory=list)


@dataclass
class _ContactState:
    active: bool = False
    epoch: int = 0
    queue: deque = field(default_factory=deque)
    # (bundle_id, started_ms, epoch, progress_at_start, send_bits)
    sending: tuple[str, int, int, int, int] | None = None


class _World:
    """Mutable state of one replication."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        effective: ContactPlan,
        weather: WeatherPlan,
        bundle_specs: list[dict],
        log_events: bool,
    ):
        self.scenario = scenario
        self.plan = effective
        self.weather = weather
        self.graph = ContactGraph(effective)
        self.contacts: dict[str, Contact] = effective.by_id()
        self.cstates = {cid: _ContactState() for cid in self.contacts}
        self.known_nodes = {n.node_id for n in scenario.build_nodes()}
        self.known_nodes |= effective.node_ids()
        for spec in bundle_specs:
            self.known_nodes.add(spec["src"])
            self.known_nodes.add(spec["dst"])
        self.reactive = scenario.weather_mode == "reactive"

        self.by_site: dict[str, list[str]] = {}
        for c in effective.contacts:
            if c.weather_site is not None:
                self.by_site.setdefault(c.weather_site, []).append(c.contact_id)

        self.bundles: dict[str, _Bundle] = {}
        self.buffers: dict[str, set[str]] = {n: set() for n in self.known_nodes}
        self.buffer_bits: dict[str, int] = {n: 0 for n in self.known_nodes}
        self.bo_series: dict[str, list[tuple[int, int]]] = {n: [(0, 0)] for n in self.known_nodes}

        self.residuals: dict[str, int] = {cid: c.capacity_bits for cid, c in self.contacts.items()}
        self.bookings: dict[str, list[tuple[str, int]]] = {}
        self.assigned: dict[str, tuple[str, ...]] = {}
        # per-hop bits already across: (bundle, tx, rx) -> bits
        self.progress: dict[tuple[str, str, str], int] = {}
        # per-contact bits physically sent / already reconciled
        self.sent_on: dict[tuple[str, str], int] = {}
        self.reconciled: dict[tuple[str, str], int] = {}

        self.waiting: set[str] = set()
        self.waiting_sizes: dict[int, int] = {}
        self.route_epoch = 0
        # future contacts whose residual grew during the current event,
        # with the residual seen before the first release; whether the
        # growth re-opens anything is judged once the event is done
        self.pending_released: dict[str, int] = {}
        # (node, dst, size) -> (time of failed query, epoch at failure)
        self.no_route_memo: dict[tuple[str, str, int], tuple[int, int]] = {}

        self.generated = 0
        self.delivered = 0
        self.dropped = 0
        self.conservation_checks = 0
        self.log: list[str] | None = [] if log_events else None

        self.heap: list[tuple[int, int, str, tuple]] = []

    # -- scheduling ------------------------------------------------------

    def schedule(self, t_ms: int, kind: int, key: str, payload: tuple = ()):
        heapq.heappush(self.heap, (t_ms, kind, key, payload))

    # -- buffers ---------------------------------------------------------

    def _record_bo(self, node: str, t_ms: int):
        series = self.bo_series[node]
        bits = self.buffer_bits[node]
        if series and series[-1][0] == t_ms:
            series[-1] = (t_ms, bits)
        else:
            series.append((t_ms, bits))

    def buffer_add(self, node: str, b: _Bundle, t_ms: int) -> bool:
        """Add to a buffer; returns False if the bundle was dropped instead."""
        cap = self.scenario.buffer_cap_bits
        if cap is not None and node != b.dst and self.buffer_bits[node] + b.size_bits > cap:
            self.drop(b, node, t_ms)
            return False
        self.buffers[node].add(b.bundle_id)
        self.buffer_bits[node] += b.size_bits
        self._record_bo(node, t_ms)
        return True

    def buffer_remove(self, node: str, b: _Bundle, t_ms: int):
        self.buffers[node].remove(b.bundle_id)
        self.buffer_bits[node] -= b.size_bits
        self._record_bo(node, t_ms)

    def drop(self, b: _Bundle, node: str, t_ms: int):
        b.dropped = True
        self.dropped += 1
        self.release_bookings(b, t_ms)
        self._waiting_discard(b)
        if self.log is not None:
            self.log.append(f"{t_ms} DROP {b.bundle_id} {node}")

    # -- waiting / routing memo -------------------------------------------

    def _waiting_add(self, b: _Bundle):
        if b.bundle_id not in self.waiting:
            self.waiting.add(b.bundle_id)
            self.waiting_sizes[b.size_bits] = self.waiting_sizes.get(b.size_bits, 0) + 1

    def _waiting_discard(self, b: _Bundle):
        if b.bundle_id in self.waiting:
            self.waiting.discard(b.bundle_id)
            n = self.waiting_sizes[b.size_bits] - 1
            if n:
                self.waiting_sizes[b.size_bits] = n
            else:
                del self.waiting_sizes[b.size_bits]

    # -- booking ---------------------------------------------------------

    def release_bookings(self, b: _Bundle, t_ms: int):
        """Return unused booked volume; physically sent bits stay consumed."""
        for cid, amt in self.bookings.get(b.bundle_id, ()):
            key = (b.bundle_id, cid)
            fresh = self.sent_on.get(key, 0) - self.reconciled.get(key, 0)
            give_back = amt - fresh
            self.reconciled[key] = self.reconciled.get(key, 0) + fresh
            if give_back > 0:
                if self.contacts[cid].end_ms > t_ms:
                    self.pending_released.setdefault(cid, self.residuals[cid])
                self.residuals[cid] += give_back
        self.bookings[b.bundle_id] = []
        self.assigned.pop(b.bundle_id, None)

    def releases_reopen_capacity(self) -> bool:
        """True when a residual crossed a waiting bundle's size this event."""
        if not self.pending_released or not self.waiting_sizes:
            self.pending_released.clear()
            return False
        smallest = min(self.waiting_sizes)
        hit = any(
            before < smallest <= self.residuals[cid]
            for cid, before in self.pending_released.items()
        )
        self.pending_released.clear()
        return hit

    # -- weather observation ----------------------------------------------

    def blocked_now(self, c: Contact, t_ms: int) -> bool:
        return c.weather_site is not None and self.weather.blocked_at(c.weather_site, t_ms)

    def excluded_now(self, t_ms: int) -> frozenset[str]:
        """Contacts observably unusable right now (reactive runs only)."""
        if not self.reactive:
            return frozenset()
        out = set()
        for site, cids in self.by_site.items():
            if self.weather.blocked_at(site, t_ms):
                for cid in cids:
                    if self.cstates[cid].active:
                        out.add(cid)
        return frozenset(out)


def run(
    scenario: ScenarioConfig,
    contact_plan: ContactPlan,
    weather: WeatherPlan,
    replication: int,
    log_events: bool = False,
    bundles: list[dict] | None = None,
) -> SimResult:
    """Execute one replication; a pure function of its arguments.

    `bundles` overrides the scenario's traffic (same spec dicts as
    ScenarioConfig.traffic_bundles), which lets tests drive hand-built
    plans directly.
    """
    if contact_plan.horizon_ms != round(scenario.duration_s * 1000.0):
        raise SimulationError(
            f"contact plan horizon {contact_plan.horizon_s} s does not match "
            f"scenario duration {scenario.duration_s} s"
        )
    if weather.horizon_ms < contact_plan.horizon_ms:
        raise SimulationError("weather plan does not cover the scenario duration")
    weather.ensure_sites(s.site_id for s in scenario.used_gs_sites())

    bundle_specs = scenario.traffic_bundles() if bundles is None else bundles
    effective = carve(contact_plan, weather) if scenario.weather_mode == "oracle" else contact_plan
    w = _World(scenario, effective, weather, bundle_specs, log_events)

    for c in effective.contacts:
        w.schedule(c.start_ms, _CSTART, c.contact_id)
        w.schedule(c.end_ms, _CEND, c.contact_id)
    if w.reactive:
        for site in sorted(w.by_site):
            for iv in weather.intervals[site]:
                if iv.start_ms < effective.horizon_ms:
                    w.schedule(iv.start_ms, _WSTART, site)
                    w.schedule(min(iv.end_ms, effective.horizon_ms), _WEND, site)

    for spec in bundle_specs:
        b = _Bundle(**spec)
        w.bundles[b.bundle_id] = b
        w.schedule(b.t_gen_ms, _GEN, b.bundle_id)

    while w.heap:
        t_ms, kind, key, payload = heapq.heappop(w.heap)
        if w.log is not None and kind != _TXDONE:
            # completions are logged inside their handler, where stale
            # (superseded) ones are filtered out
            w.log.append(_format_event(w, t_ms, kind, key))
        _dispatch(w, t_ms, kind, key, payload)
        if w.releases_reopen_capacity():
            w.route_epoch += 1
            _reconsider_waiting(w, t_ms)
        _check_conservation(w)

    return _result(w, replication)


def _format_event(w: _World, t_ms: int, kind: int, key: str) -> str:
    name = _KIND_NAMES[kind]
    if kind == _GEN:
        b = w.bundles[key]
        return f"{t_ms} GEN {key} {b.size_bits} {b.src} {b.dst}"
    if kind in (_CSTART, _CEND):
        c = w.contacts[key]
        return f"{t_ms} {name} {key} {c.tx} {c.rx}"
    return f"{t_ms} {name} {key}"


def _dispatch(w: _World, t_ms: int, kind: int, key: str, payload: tuple):
    if kind == _GEN:
        _on_generated(w, t_ms, key)
    elif kind == _CSTART:
        w.cstates[key].active = True
        _kick_service(w, key, t_ms)
    elif kind == _CEND:
        _on_contact_end(w, t_ms, key)
    elif kind == _TXDONE:
        _on_tx_done(w, t_ms, key, payload)
    elif kind == _WSTART:
        _on_block_start(w, t_ms, key)
    elif kind == _WEND:
        _on_block_end(w, t_ms, key)


def _check_conservation(w: _World):
    buffered = sum(len(ids) for ids in w.buffers.values())
    if w.generated != w.delivered + buffered + w.dropped:
        raise SimulationError(
            f"conservation violated: generated={w.generated} delivered={w.delivered} "
            f"buffered={buffered} dropped={w.dropped}"
        )
    w.conservation_checks += 1


def _on_generated(w: _World, t_ms: int, bid: str):
    b = w.bundles[bid]
    w.generated += 1
    b.custodian = b.src
    b.custodian_path.append(b.src)
    if b.src == b.dst:
        _deliver(w, b, t_ms)
        return
    if w.buffer_add(b.src, b, t_ms):
        _try_route(w, b, t_ms)


def _deliver(w: _World, b: _Bundle, t_ms: int):
    b.delivered_at_ms = t_ms
    w.delivered += 1


def _query_route(w: _World, node: str, dst: str, t_ms: int, size_bits: int):
    """best_route with a per-(node, dst, size) failure memo.

    With a static plan and fixed residuals, infeasibility at t stays
    infeasible at any later time, so failed queries need not be repeated
    until capacity is released or a blocked link clears (the epoch bumps).
    """
    memo_key = (node, dst, size_bits)
    memo = w.no_route_memo.get(memo_key)
    if memo is not None and memo[1] == w.route_epoch and t_ms >= memo[0]:
        return None
    route = best_route(
        w.graph,
        w.residuals,
        node,
        dst,
        t_ms,
        size_bits,
        known_nodes=w.known_nodes,
        excluded=w.excluded_now(t_ms),
    )
    if route is None:
        w.no_route_memo[memo_key] = (t_ms, w.route_epoch)
    return route


def _try_route(w: _World, b: _Bundle, t_ms: int):
    node = b.custodian
    if node == b.dst:
        return
    route = _query_route(w, node, b.dst, t_ms, b.size_bits)
    if route is not None and route.hops:
        # whole file fits: book the full route
        w._waiting_discard(b)
        for cid in route.hops:
            w.residuals[cid] -= b.size_bits
        w.bookings[b.bundle_id] = [(cid, b.size_bits) for cid in route.hops]
        w.assigned[b.bundle_id] = route.hops
        first = route.hops[0]
        w.cstates[first].queue.append(b.bundle_id)
        if w.cstates[first].active:
            _kick_service(w, first, t_ms)
        return
    # No window fits the whole remainder anywhere, but the file may still
    # flow as fragments: find the earliest path a minimal fragment could
    # take and push one path-bottleneck worth of bits into its first hop.
    # Progress is retained per hop, so successive short windows eventually
    # move the file, and custody only advances once a hop has carried all
    # of it, so bits never outrun the capacity booked further downstream.
    probe = _query_route(w, node, b.dst, t_ms, 1)
    if probe is not None and probe.hops:
        first = probe.hops[0]
        c = w.contacts[first]
        hop_progress = w.progress.get((b.bundle_id, c.tx, c.rx), 0)
        start_est = max(t_ms, c.start_ms)
        window_bits = c.rate_bps * (c.end_ms - start_est) // 1000
        chunk = min(
            b.size_bits - hop_progress, window_bits, probe.bottleneck_volume_bits
        )
        if chunk > 0:
            w._waiting_discard(b)
            for cid in probe.hops:
                w.residuals[cid] -= chunk
            w.bookings[b.bundle_id] = [(cid, chunk) for cid in probe.hops]
            w.assigned[b.bundle_id] = probe.hops
            w.cstates[first].queue.append(b.bundle_id)
            if w.cstates[first].active:
                _kick_service(w, first, t_ms)
            return
    w._waiting_add(b)


def _kick_service(w: _World, cid: str, t_ms: int):
    st = w.cstates[cid]
    if not st.active or st.sending is not None:
        return
    c = w.contacts[cid]
    if w.reactive and w.blocked_now(c, t_ms):
        if st.queue:
            _fail_queue(w, cid, t_ms)
        return
    if not st.queue and not _pull_spillover(w, cid, t_ms):
        return
    bid = st.queue[0]
    b = w.bundles[bid]
    start_progress = w.progress.get((bid, c.tx, c.rx), 0)
    remaining = b.size_bits - start_progress
    booked = next((a for h, a in w.bookings.get(bid, ()) if h == cid), remaining)
    send_bits = min(remaining, booked)
    st.sending = (bid, t_ms, st.epoch, start_progress, send_bits)
    finish = t_ms + transmission_ms(send_bits, c.rate_bps)
    if finish <= c.end_ms:
        w.schedule(finish, _TXDONE, cid, (bid, st.epoch))


def _pull_spillover(w: _World, cid: str, t_ms: int) -> bool:
    """Feed an idle contact with a bundle waiting for a later window.

    A bundle booked on a future contact toward the same next-hop node can
    use spare time on the current one; per-hop progress makes every
    streamed bit count.  This packs windows that whole-file booking would
    leave partly idle (short clear bursts, tail ends of passes).  Bits
    only move ahead of schedule while the rest of the route is already
    open: data is never pushed into a relay that cannot forward it yet,
    which keeps early buffering at relays to what the schedule requires.
    """
    c = w.contacts[cid]
    for bid in sorted(w.buffers.get(c.tx, ())):
        assigned = w.assigned.get(bid)
        if not assigned or assigned[0] == cid:
            continue
        c2 = w.contacts[assigned[0]]
        if not (c2.tx == c.tx and c2.rx == c.rx and c2.start_ms > t_ms):
            continue
        if any(w.contacts[h].start_ms > t_ms for h in assigned[1:]):
            continue
        w.cstates[assigned[0]].queue.remove(bid)
        w.cstates[cid].queue.append(bid)
        w.assigned[bid] = (cid,) + assigned[1:]
        return True
    return False


def _interrupt_sending(w: _World, cid: str, t_ms: int):
    """Credit partial progress and clear the transmission."""
    st = w.cstates[cid]
    if st.sending is None:
        return
    bid, started, _, _, send_bits = st.sending
    c = w.contacts[cid]
    bits = min(c.rate_bps * (t_ms - started) // 1000, send_bits)
    if bits > 0:
        hop = (bid, c.tx, c.rx)
        w.progress[hop] = w.progress.get(hop, 0) + bits
        key = (bid, cid)
        w.sent_on[key] = w.sent_on.get(key, 0) + bits
        if not any(h == cid for h, _ in w.bookings.get(bid, ())):
            # spilled bits were never booked here; settle them now
            w.residuals[cid] = max(0, w.residuals[cid] - bits)
            w.reconciled[key] = w.reconciled.get(key, 0) + bits
    st.sending = None
    st.epoch += 1


def _rehome_queue(w: _World, cid: str, t_ms: int):
    """Return every queued bundle to its custodian and re-route it."""
    st = w.cstates[cid]
    bids = list(st.queue)
    st.queue.clear()
    for bid in bids:
        w.release_bookings(w.bundles[bid], t_ms)
    for bid in bids:
        _try_route(w, w.bundles[bid], t_ms)


def _fail_queue(w: _World, cid: str, t_ms: int):
    # a transmission attempt on a cloud-covered link fails outright;
    # custody never moved, so only the plans need recomputing
    _rehome_queue(w, cid, t_ms)


def _on_contact_end(w: _World, t_ms: int, cid: str):
    st = w.cstates[cid]
    st.active = False
    _interrupt_sending(w, cid, t_ms)
    if st.queue:
        _rehome_queue(w, cid, t_ms)


def _on_tx_done(w: _World, t_ms: int, cid: str, payload: tuple):
    bid, epoch = payload
    st = w.cstates[cid]
    if st.sending is None or st.sending[0] != bid or st.sending[2] != epoch:
        return  # superseded by an interruption
    _, _, _, start_progress, send_bits = st.sending
    st.sending = None
    st.queue.popleft()

    b = w.bundles[bid]
    c = w.contacts[cid]

    # the hop consumed only the bits actually pushed on this contact;
    # unbooked (spilled) bits come straight out of the residual
    booked = next((a for h, a in w.bookings.get(bid, ()) if h == cid), 0)
    give_back = booked - send_bits
    if give_back > 0:
        if c.end_ms > t_ms:
            w.pending_released.setdefault(cid, w.residuals[cid])
        w.residuals[cid] += give_back
    elif give_back < 0:
        w.residuals[cid] = max(0, w.residuals[cid] + give_back)
    w.bookings[b.bundle_id] = [(h, a) for h, a in w.bookings.get(b.bundle_id, ()) if h != cid]

    if start_progress + send_bits < b.size_bits:
        # a deliberate fragment: bank the progress and plan the remainder
        if w.log is not None:
            w.log.append(f"{t_ms} TXPART {bid} {cid} {c.tx} {c.rx} {send_bits}")
        hop = (bid, c.tx, c.rx)
        w.progress[hop] = w.progress.get(hop, 0) + send_bits
        key = (bid, cid)
        w.sent_on[key] = w.sent_on.get(key, 0) + send_bits
        # the consumed chunk is settled; only fresher bits may reconcile later
        w.reconciled[key] = w.reconciled.get(key, 0) + send_bits
        w.release_bookings(b, t_ms)
        _try_route(w, b, t_ms)
        _kick_service(w, cid, t_ms)
        return

    if w.log is not None:
        w.log.append(f"{t_ms} TXDONE {bid} {cid} {c.tx} {c.rx}")
    w.progress.pop((bid, c.tx, c.rx), None)

    w.buffer_remove(c.tx, b, t_ms)
    b.custodian = c.rx
    b.custodian_path.append(c.rx)
    w.release_bookings(b, t_ms)

    if c.rx == b.dst:
        _deliver(w, b, t_ms)
    elif w.buffer_add(c.rx, b, t_ms):
        _try_route(w, b, t_ms)

    _kick_service(w, cid, t_ms)


def _on_block_start(w: _World, t_ms: int, site: str):
    for cid in w.by_site.get(site, ()):
        st = w.cstates[cid]
        if not st.active:
            continue
        _interrupt_sending(w, cid, t_ms)
        if st.queue:
            _fail_queue(w, cid, t_ms)


def _on_block_end(w: _World, t_ms: int, site: str):
    # capacity that looked unusable is observable again
    w.route_epoch += 1
    _reconsider_waiting(w, t_ms)
    for cid in w.by_site.get(site, ()):
        if w.cstates[cid].active:
            _kick_service(w, cid, t_ms)


def _reconsider_waiting(w: _World, t_ms: int):
    for bid in sorted(w.waiting):
        if bid in w.waiting:
            _try_route(w, w.bundles[bid], t_ms)


def _result(w: _World, replication: int) -> SimResult:
    records = [
        BundleRecord(
            bundle_id=b.bundle_id,
            size_bits=b.size_bits,
            t_gen_ms=b.t_gen_ms,
            src=b.src,
            dst=b.dst,
            delivered_at_ms=b.delivered_at_ms,
            custodian_path=list(b.custodian_path),
        )
        for b in sorted(w.bundles.values(), key=lambda b: b.bundle_id)
    ]
    return SimResult(
        scenario=w.scenario.echo(),
        replication=replication,
        seed=w.scenario.seed,
        duration_ms=w.plan.horizon_ms,
        mode=w.scenario.weather_mode,
        bundles=records,
        bo_series=w.bo_series,
        generated=w.generated,
        delivered=w.delivered,
        dropped=w.dropped,
        conservation_checks=w.conservation_checks,
        event_log=w.log,
    )


def replay_event_log(log_lines, bundle_dsts: dict[str, str] | None = None) -> dict:
    """Rebuild delivery records and buffer series from an event log.

    The log is a total description of a run: generation, custody
    transfers, and drops suffice to reconstruct who held what when.
    Returns a dict with `delivered_at_ms`, `custodian_path`, `bo_series`,
    and counters, comparable field-by-field with the SimResult.
    """
    delivered_at: dict[str, int | None] = {}
    path: dict[str, list[str]] = {}
    size: dict[str, int] = {}
    dst: dict[str, str] = dict(bundle_dsts or {})
    bits: dict[str, int] = {}
    series: dict[str, list[tuple[int, int]]] = {}
    counts = {"generated": 0, "delivered": 0, "dropped": 0}

    def record(node: str, t: int):
        s = series.setdefault(node, [(0, 0)])
        if s[-1][0] == t:
            s[-1] = (t, bits.get(node, 0))
        else:
            s.append((t, bits.get(node, 0)))

    for line in log_lines:
        parts = line.split()
        t = int(parts[0])
        kind = parts[1]
        if kind == "GEN":
            bid, sz, src, d = parts[2], int(parts[3]), parts[4], parts[5]
            counts["generated"] += 1
            size[bid] = sz
            dst[bid] = d
            path[bid] = [src]
            delivered_at[bid] = None
            if src == d:
                delivered_at[bid] = t
                counts["delivered"] += 1
            else:
                bits[src] = bits.get(src, 0) + sz
                record(src, t)
        elif kind == "TXDONE":
            bid, _, tx, rx = parts[2], parts[3], parts[4], parts[5]
            bits[tx] = bits.get(tx, 0) - size[bid]
            record(tx, t)
            path[bid].append(rx)
            if rx == dst[bid]:
                delivered_at[bid] = t
                counts["delivered"] += 1
            else:
                bits[rx] = bits.get(rx, 0) + size[bid]
                record(rx, t)
        elif kind == "DROP":
            bid, node = parts[2], parts[3]
            bits[node] = bits.get(node, 0) - size[bid]
            record(node, t)
            counts["dropped"] += 1

    return {
        "delivered_at_ms": delivered_at,
        "custodian_path": path,
        "bo_series": series,
        "counts": counts,
    }
