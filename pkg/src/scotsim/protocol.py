"""Protocol runners on explicit spacetime layouts.

Three protocols share one deterministic scheduler.  Agents move along
fixed worldlines; every protocol action names the agent it runs on and
a set of placement requirements (inside the common past G, in the
causal past of a handover point, exactly at a handover point, inside an
output region).  The scheduler binds each action to the earliest
worldline vertex at or after the agent's previous action that satisfies
the requirements, and message delivery additionally waits for the light
cone of the emission vertex.  A run therefore fails loudly, with
:class:`SchedulingError`, when the declared geometry cannot support the
protocol's information flow.

The runners:

``run_psr``
    Random-string transfer.  A central sender encodes a random bit
    string in random two-basis qubits and routes it to the receiver,
    who learns the basis string only at the handover points and
    measures inside the chosen output region.

``run_pqc``
    String transfer with sender inputs.  Same quantum part plus one-time
    pads handed over at the Q points, so region b reveals string b.

``run_pcc``
    Committed-measurement variant.  The receiver measures everything
    inside G in a self-chosen basis c, announces the shifted index
    b' = b + c (mod m), and the pads are arranged so that region b
    still decodes string b while b' tells the sender nothing about b.

Transcripts record every message and local operation with bound
events; :func:`verify_transcript` re-checks all causal claims from the
transcript alone, and :func:`obliviousness_audit` checks the
receiver-to-sender traffic statistics over many transcripts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import dqacm as dqacm_mod
from . import quantum
from .dqacm import AliceInputs, DqacmConfig
from .errors import ConfigError, SchedulingError
from .minkowski import (
    Event,
    Layout,
    ValidatedLayout,
    box_region,
    causally_precedes,
    in_region_g,
    validate_layout,
)

__all__ = [
    "Placement",
    "Message",
    "LocalOp",
    "Transcript",
    "ScotConfig",
    "AuditResult",
    "standard_layout",
    "scot_config",
    "run_psr",
    "run_pqc",
    "run_pcc",
    "verify_transcript",
    "obliviousness_audit",
    "placement_satisfied",
    "transcript_to_json",
]

MODES = ("psr", "pqc", "pcc")


@dataclass(frozen=True)
class Placement:
    """One causal requirement on where an action may bind.

    Kinds: ``in_g`` (common causal past of all handover points),
    ``past_q`` (causal past of handover point ``index``), ``at_q``
    (exactly the handover vertex), ``in_region`` (inside output region
    ``index``), ``past_region`` (causal past of some event of region
    ``index``).
    """

    kind: str
    index: int | None = None


@dataclass(frozen=True, eq=False)
class Message:
    sender: str
    receiver: str
    kind: str
    payload: dict
    emit: Event
    deliver: Event
    emit_placement: tuple[Placement, ...] = ()
    deliver_placement: tuple[Placement, ...] = ()
    seq: int = -1


@dataclass(frozen=True, eq=False)
class LocalOp:
    agent: str
    kind: str
    payload: dict
    event: Event
    placement: tuple[Placement, ...] = ()
    seq: int = -1


@dataclass(eq=False)
class Transcript:
    mode: str
    m: int
    n: int
    b: int
    layout: ValidatedLayout
    messages: list[Message] = field(default_factory=list)
    local_ops: list[LocalOp] = field(default_factory=list)
    outputs: dict[int, np.ndarray] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ScotConfig:
    """Static parameters of a protocol run."""

    mode: str
    m: int
    n: int
    layout: ValidatedLayout
    dqacm: DqacmConfig | None = None
    flip_rate: float = 0.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.m < 2:
            raise ConfigError("m must be at least 2")
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.layout.m != self.m:
            raise ConfigError(
                f"layout has {self.layout.m} regions but config declares m={self.m}"
            )
        if not 0.0 <= self.flip_rate < 1.0:
            raise ConfigError(f"flip_rate={self.flip_rate} outside [0, 1)")
        if not 0.0 <= self.gamma <= 0.5:
            raise ConfigError(f"gamma={self.gamma} outside [0, 0.5]")
        if self.mode == "pcc":
            if self.dqacm is None:
                raise ConfigError("pcc requires a delegated-measurement config")
            if self.dqacm.m != self.m or self.dqacm.n != self.n:
                raise ConfigError("delegated-measurement config disagrees with (m, n)")


def standard_layout(m: int, dim: int = 1, hub: int | None = None) -> ValidatedLayout:
    """Build the default geometry for m parties.

    Output regions are unit-half-width boxes around handover points
    Q_i = (T, 10 i), so distinct regions are separated by at least 8 in
    space but at most 2 in time, comfortably spacelike.  The central
    agents A and B share a worldline at the spatial midpoint (or at
    region ``hub``'s position when given, which colocates them with
    that region's local agents); every worldline ticks at unit steps
    from t = 0 through T + 1.  T leaves 25 ticks of slack beyond the
    light distance from the hub to the farthest handover point, so all
    stage placements are feasible with room to spare.
    """
    if m < 2:
        raise ConfigError("m must be at least 2")
    if not 1 <= dim <= 3:
        raise ConfigError("dim must be 1..3")
    spots = [np.zeros(dim) for _ in range(m)]
    for i in range(m):
        spots[i][0] = 10.0 * i
    if hub is None:
        hub_pos = np.zeros(dim)
        hub_pos[0] = 5.0 * (m - 1)
    else:
        if not 0 <= hub < m:
            raise ConfigError(f"hub={hub} outside range({m})")
        hub_pos = spots[hub].copy()
    horizon = max(float(np.linalg.norm(hub_pos - p)) for p in spots)
    t_q = float(math.ceil(horizon) + 25)

    regions = []
    q_points = []
    for i in range(m):
        center = spots[i]
        lo = Event(t_q - 1.0, center - 1.0)
        hi = Event(t_q + 1.0, center + 1.0)
        q = Event(t_q, center)
        regions.append(box_region(lo, hi, interior=(q,)))
        q_points.append(q)

    ticks = [float(t) for t in range(int(t_q) + 2)]
    worldlines = {}
    worldlines["A"] = [Event(t, hub_pos) for t in ticks]
    worldlines["B"] = [Event(t, hub_pos) for t in ticks]
    for i in range(m):
        worldlines[f"A{i}"] = [Event(t, spots[i]) for t in ticks]
        worldlines[f"B{i}"] = [Event(t, spots[i]) for t in ticks]
    return validate_layout(Layout(regions, q_points, worldlines))


def scot_config(
    mode: str,
    m: int,
    n: int,
    layout: ValidatedLayout | None = None,
    thetas: Sequence[float] | None = None,
    flip_rate: float = 0.0,
    gamma: float = 0.0,
) -> ScotConfig:
    """Convenience builder wiring the default layout and basis family."""
    if layout is None:
        layout = standard_layout(m)
    dq = None
    if mode == "pcc":
        if thetas is None:
            family = quantum.equal_spaced_family(m)
        else:
            family = quantum.planar_basis_family(m, thetas)
        dq = DqacmConfig(m, n, family, gamma)
    return ScotConfig(mode, m, n, layout, dq, flip_rate, gamma)


def placement_satisfied(
    vlayout: ValidatedLayout, placement: Placement, event: Event
) -> bool:
    """Re-evaluate one placement requirement from raw geometry."""
    layout = vlayout.layout
    if placement.kind == "in_g":
        return in_region_g(event, layout.q_points)
    if placement.kind == "past_q":
        return causally_precedes(event, layout.q_points[placement.index])
    if placement.kind == "at_q":
        return event == layout.q_points[placement.index]
    if placement.kind == "in_region":
        return layout.regions[placement.index].contains(event)
    if placement.kind == "past_region":
        return any(
            causally_precedes(event, e)
            for e in layout.regions[placement.index].events
        )
    raise ValueError(f"unknown placement kind {placement.kind!r}")


class _AgentGeometry:
    """Vectorized per-agent vertex data and placement masks."""

    def __init__(self, vlayout: ValidatedLayout, agent: str):
        layout = vlayout.layout
        verts = layout.worldline(agent)
        self.events = verts
        self.ts = np.array([v.t for v in verts])
        self.xs = np.array([v.x for v in verts])
        m = layout.m
        q_ts = np.array([q.t for q in layout.q_points])
        q_xs = np.array([q.x for q in layout.q_points])
        # dist[i, k]: spatial distance from vertex k to handover point i
        dist = np.linalg.norm(q_xs[:, None, :] - self.xs[None, :, :], axis=2)
        past_q = (q_ts[:, None] - self.ts[None, :]) >= dist
        self.masks: dict[tuple[str, int | None], np.ndarray] = {}
        self.masks[("in_g", None)] = past_q.all(axis=0)
        for i in range(m):
            self.masks[("past_q", i)] = past_q[i]
            self.masks[("at_q", i)] = np.array(
                [v == layout.q_points[i] for v in verts]
            )
            region = layout.regions[i]
            lo, hi = region.bounds()
            coords = np.concatenate([self.ts[:, None], self.xs], axis=1)
            self.masks[("in_region", i)] = (
                (coords >= np.array(lo)) & (coords <= np.array(hi))
            ).all(axis=1)
            ev_ts = np.array([e.t for e in region.events])
            ev_xs = np.array([e.x for e in region.events])
            d = np.linalg.norm(ev_xs[:, None, :] - self.xs[None, :, :], axis=2)
            self.masks[("past_region", i)] = (
                (ev_ts[:, None] - self.ts[None, :]) >= d
            ).any(axis=0)

    def mask(self, placements: Sequence[Placement]) -> np.ndarray:
        out = np.ones(len(self.ts), dtype=bool)
        for p in placements:
            out &= self.masks[(p.kind, p.index)]
        return out


_GEOMETRY_CACHE: dict[int, tuple[ValidatedLayout, dict[str, _AgentGeometry]]] = {}


def _geometry(vlayout: ValidatedLayout) -> dict[str, _AgentGeometry]:
    entry = _GEOMETRY_CACHE.get(id(vlayout))
    if entry is not None and entry[0] is vlayout:
        return entry[1]
    geo = {a: _AgentGeometry(vlayout, a) for a in vlayout.layout.agents}
    if len(_GEOMETRY_CACHE) > 16:
        _GEOMETRY_CACHE.clear()
    _GEOMETRY_CACHE[id(vlayout)] = (vlayout, geo)
    return geo


class _Sim:
    """One scheduling context: agent cursors plus transcript accumulation."""

    def __init__(self, config: ScotConfig, b: int, mode: str):
        self.config = config
        self.vlayout = config.layout
        self.geo = _geometry(config.layout)
        self.cursor = {a: 0 for a in config.layout.layout.agents}
        self.transcript = Transcript(mode, config.m, config.n, b, config.layout)
        self._seq = 0

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _bind(
        self,
        agent: str,
        placements: tuple[Placement, ...],
        after: Event | None = None,
        action: str = "",
    ) -> int:
        geo = self.geo.get(agent)
        if geo is None:
            raise SchedulingError(f"agent {agent!r} has no worldline")
        ok = geo.mask(placements).copy()
        k = self.cursor[agent]
        if k > 0:
            ok[:k] = False
        if after is not None:
            reach = (geo.ts - after.t) >= np.linalg.norm(
                geo.xs - np.array(after.x), axis=1
            )
            ok &= reach
        idx = int(np.argmax(ok))
        if not ok[idx]:
            raise SchedulingError(
                f"no vertex on {agent!r} satisfies {action or placements}"
            )
        self.cursor[agent] = idx
        return idx

    def local(
        self,
        agent: str,
        kind: str,
        payload: dict | None = None,
        placements: tuple[Placement, ...] = (),
    ) -> Event:
        idx = self._bind(agent, placements, action=kind)
        event = self.geo[agent].events[idx]
        self.transcript.local_ops.append(
            LocalOp(agent, kind, payload or {}, event, placements, self._next_seq())
        )
        return event

    def send(
        self,
        sender: str,
        receiver: str,
        kind: str,
        payload: dict | None = None,
        emit: tuple[Placement, ...] = (),
        deliver: tuple[Placement, ...] = (),
    ) -> Message:
        ei = self._bind(sender, emit, action=f"emit {kind}")
        emit_event = self.geo[sender].events[ei]
        di = self._bind(receiver, deliver, after=emit_event, action=f"deliver {kind}")
        msg = Message(
            sender,
            receiver,
            kind,
            payload or {},
            emit_event,
            self.geo[receiver].events[di],
            emit,
            deliver,
            self._next_seq(),
        )
        self.transcript.messages.append(msg)
        return msg


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _check_b(config: ScotConfig, b: int) -> None:
    if not 0 <= b < config.m:
        raise ConfigError(f"b={b} outside range({config.m})")


def _check_x(config: ScotConfig, x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.int64)
    if arr.shape != (config.m, config.n):
        raise ConfigError(
            f"x must have shape ({config.m}, {config.n}), got {arr.shape}"
        )
    if np.any((arr < 0) | (arr > 1)):
        raise ConfigError("x entries must be bits")
    return arr


_IN_G = (Placement("in_g"),)


_BB84: tuple | None = None


def _bb84_tools():
    global _BB84
    if _BB84 is None:
        fam = quantum.bb84_family()
        meas = (quantum.basis_measurement(fam, 0), quantum.basis_measurement(fam, 1))
        states = tuple(
            tuple(quantum.PureState(fam.bases[si, ri], (2,)) for ri in range(2))
            for si in range(2)
        )
        _BB84 = (fam, meas, states)
    return _BB84


def _measure_bb84(r: np.ndarray, s: np.ndarray, rng, flip_rate: float) -> np.ndarray:
    """Measure each encoded qubit in its declared basis via the quantum module."""
    _fam, meas, states = _bb84_tools()
    out = np.empty(len(r), dtype=np.int64)
    for j in range(len(r)):
        out[j] = quantum.measure(states[int(s[j])][int(r[j])], meas[int(s[j])], rng).outcome
    if flip_rate > 0.0:
        out ^= (rng.random(len(out)) < flip_rate).astype(np.int64)
    return out


def run_psr(config: ScotConfig, b: int, seed) -> Transcript:
    """Random-string transfer: the receiver learns a random n-bit string in R_b."""
    if config.mode != "psr":
        raise ConfigError(f"config mode {config.mode!r} is not psr")
    _check_b(config, b)
    rng = _as_rng(seed)
    m, n = config.m, config.n
    sim = _Sim(config, b, "psr")

    r = rng.integers(0, 2, size=n)
    s = rng.integers(0, 2, size=n)
    sim.local("A", "prepare", {"r": r.tolist(), "s": s.tolist()}, _IN_G)
    sim.send(
        "A", "B", "qubits", {"handle": "q0"}, emit=_IN_G, deliver=_IN_G
    )
    sim.local("B", "input_b", {"b": b}, _IN_G)
    sim.send(
        "B",
        f"B{b}",
        "qubits_forward",
        {"handle": "q0"},
        emit=_IN_G,
        deliver=(Placement("past_region", b),),
    )
    for i in range(m):
        sim.send("A", f"A{i}", "basis_info", {"s": s.tolist()},
                 deliver=(Placement("past_q", i),))
    for i in range(m):
        sim.send(
            f"A{i}", f"B{i}", "handover", {"s": s.tolist()},
            emit=(Placement("at_q", i),), deliver=(Placement("at_q", i),),
        )
    r_meas = _measure_bb84(r, s, rng, config.flip_rate)
    sim.local(
        f"B{b}", "measure", {"outcomes": r_meas.tolist()},
        (Placement("in_region", b),),
    )
    sim.local(
        f"B{b}", "output", {"value": r_meas.tolist()},
        (Placement("in_region", b),),
    )
    t = sim.transcript
    t.outputs[b] = r_meas
    t.extra.update(
        {"r": r, "s": s, "quantum": {"q0": {"kind": "bb84", "r": r, "s": s}}}
    )
    return t


def run_pqc(config: ScotConfig, x, b: int, seed) -> Transcript:
    """Padded transfer: region b outputs the sender string x[b]."""
    if config.mode != "pqc":
        raise ConfigError(f"config mode {config.mode!r} is not pqc")
    _check_b(config, b)
    x = _check_x(config, x)
    rng = _as_rng(seed)
    m, n = config.m, config.n
    sim = _Sim(config, b, "pqc")

    r = rng.integers(0, 2, size=n)
    s = rng.integers(0, 2, size=n)
    sim.local("A", "prepare", {"r": r.tolist(), "s": s.tolist()}, _IN_G)
    sim.send("A", "B", "qubits", {"handle": "q0"}, emit=_IN_G, deliver=_IN_G)
    sim.local("B", "input_b", {"b": b}, _IN_G)
    sim.send(
        "B",
        f"B{b}",
        "qubits_forward",
        {"handle": "q0"},
        emit=_IN_G,
        deliver=(Placement("past_region", b),),
    )
    pads = np.empty((m, n), dtype=np.int64)
    for i in range(m):
        past_i = (Placement("past_q", i),)
        sim.send("A", f"A{i}", "pad_info", {"r": r.tolist(), "s": s.tolist()},
                 deliver=past_i)
        sim.local(f"A{i}", "input_x", {"x": x[i].tolist()}, past_i)
        pads[i] = x[i] ^ r
        sim.local(f"A{i}", "compute_pad", {"t": pads[i].tolist()}, past_i)
    for i in range(m):
        sim.send(
            f"A{i}", f"B{i}", "handover",
            {"s": s.tolist(), "t": pads[i].tolist()},
            emit=(Placement("at_q", i),), deliver=(Placement("at_q", i),),
        )
    r_meas = _measure_bb84(r, s, rng, config.flip_rate)
    sim.local(
        f"B{b}", "measure", {"outcomes": r_meas.tolist()},
        (Placement("in_region", b),),
    )
    out = r_meas ^ pads[b]
    sim.local(
        f"B{b}", "output", {"value": out.tolist()}, (Placement("in_region", b),)
    )
    t = sim.transcript
    t.outputs[b] = out
    t.extra.update(
        {
            "r": r,
            "s": s,
            "x": x,
            "pads": pads,
            "quantum": {"q0": {"kind": "bb84", "r": r, "s": s}},
        }
    )
    return t


def run_pcc(config: ScotConfig, x, b: int, seed, c: int | None = None) -> Transcript:
    """Committed-measurement transfer with a shifted announcement.

    The receiver measures the whole delegated state inside G in basis
    ``c`` (uniform unless overridden), announces only b' = b + c (mod m)
    to the sender side, and region b's pad t_b = r_c + x_b lets its
    agent output x[b] from the decoded row.  Overriding ``c`` models a
    rigged receiver and is what the obliviousness audit is designed to
    catch.
    """
    if config.mode != "pcc":
        raise ConfigError(f"config mode {config.mode!r} is not pcc")
    _check_b(config, b)
    x = _check_x(config, x)
    rng = _as_rng(seed)
    m, n = config.m, config.n
    dq = config.dqacm
    sim = _Sim(config, b, "pcc")

    inputs = dqacm_mod.sample_inputs(dq, rng)
    if c is None:
        c = int(rng.integers(0, m))
    if not 0 <= c < m:
        raise ConfigError(f"c={c} outside range({m})")

    inputs_doc = dqacm_mod.inputs_to_json(inputs)
    sim.local("A", "prepare", inputs_doc, _IN_G)
    sim.send("A", "B", "state", {"handle": "q0"}, emit=_IN_G, deliver=_IN_G)
    sim.local("B", "input_c", {"c": c}, _IN_G)
    record = dqacm_mod.stage1_honest(dq, inputs, c, rng, config.flip_rate)
    record_doc = dqacm_mod.record_to_json(record)
    sim.local("B", "measure_all", record_doc, _IN_G)

    for i in range(m):
        sim.send(
            "A", f"A{i}", "alice_info", inputs_doc,
            deliver=(Placement("past_q", i),),
        )
    for i in range(m):
        sim.send(
            "B", f"B{i}", "bob_record", record_doc,
            deliver=(Placement("past_q", i),),
        )

    sim.local("B", "input_b", {"b": b}, _IN_G)
    b_prime = (b + c) % m
    sim.send("B", "A", "basis_shift", {"b_prime": b_prime}, emit=_IN_G, deliver=_IN_G)
    for i in range(m):
        sim.send("B", f"B{i}", "target_index", {"b": b},
                 deliver=(Placement("past_q", i),))
    for i in range(m):
        sim.send("A", f"A{i}", "shift_info", {"b_prime": b_prime},
                 deliver=(Placement("past_q", i),))

    pads = np.empty((m, n), dtype=np.int64)
    for i in range(m):
        past_i = (Placement("past_q", i),)
        sim.local(f"A{i}", "input_x", {"x": x[i].tolist()}, past_i)
        pads[i] = inputs.r[(b_prime - i) % m] ^ x[i]
        sim.local(f"A{i}", "compute_pad", {"t": pads[i].tolist()}, past_i)
    s_doc = [list(p) for p in inputs.s]
    for i in range(m):
        sim.send(
            f"A{i}", f"B{i}", "handover",
            {"t": pads[i].tolist(), "s": s_doc},
            emit=(Placement("at_q", i),), deliver=(Placement("at_q", i),),
        )

    # Every receiver agent can decode the committed row once s arrives;
    # only the targeted one must do so inside its output region.
    row = dqacm_mod.decode(dq, c, record.d, inputs.s)
    decoded = {}
    for i in range(m):
        decoded[i] = row
        placement = (Placement("in_region", i),) if i == b else ()
        sim.local(f"B{i}", "decode", {"row": row.tolist()}, placement)
    out = decoded[b] ^ pads[b]
    sim.local(
        f"B{b}", "output", {"value": out.tolist()}, (Placement("in_region", b),)
    )
    t = sim.transcript
    t.outputs[b] = out
    t.extra.update(
        {
            "r": inputs.r,
            "s": inputs.s,
            "x": x,
            "pads": pads,
            "c": c,
            "b_prime": b_prime,
            "record": record,
            "decoded": decoded,
            "quantum": {"q0": {"kind": "dqacm", "inputs": inputs}},
        }
    )
    return t


def _semantic_violations(t: Transcript) -> list[dict]:
    # Output correctness is a statistical question under noise and is
    # left to callers; only internal consistency is checked here.
    out = []
    if t.mode == "pcc" and "c" in t.extra:
        c = t.extra["c"]
        if (t.b + c) % t.m != t.extra.get("b_prime"):
            out.append({"kind": "inconsistent_shift", "b": t.b, "c": c})
    return out


def verify_transcript(
    transcript: Transcript, vlayout: ValidatedLayout | None = None
) -> tuple[bool, list[dict]]:
    """Re-check every causal and placement claim of a finished run.

    Returns (ok, violations).  Checks, from the transcript alone: bound
    events sit on the acting agent's declared worldline, per-agent
    action times never decrease, every message delivery lies in the
    causal future of its emission, and all recorded placement
    requirements hold at the bound events.
    """
    vlayout = vlayout or transcript.layout
    layout = vlayout.layout
    violations: list[dict] = []
    agent_sequence: dict[str, list[Event]] = {}

    def on_worldline(agent: str, event: Event, what: str) -> None:
        try:
            verts = layout.worldline(agent)
        except KeyError:
            violations.append({"kind": "unknown_agent", "agent": agent, "at": what})
            return
        if event not in verts:
            violations.append(
                {"kind": "event_off_worldline", "agent": agent, "at": what,
                 "event": [event.t, *event.x]}
            )
        agent_sequence.setdefault(agent, []).append(event)

    def check_placements(
        placements: Sequence[Placement], event: Event, what: str
    ) -> None:
        for p in placements:
            if not placement_satisfied(vlayout, p, event):
                violations.append(
                    {"kind": "placement_violated", "at": what,
                     "placement": [p.kind, p.index], "event": [event.t, *event.x]}
                )

    for k, msg in enumerate(transcript.messages):
        what = f"message[{k}]:{msg.kind}"
        on_worldline(msg.sender, msg.emit, what)
        on_worldline(msg.receiver, msg.deliver, what)
        if not causally_precedes(msg.emit, msg.deliver):
            violations.append(
                {"kind": "acausal_delivery", "at": what,
                 "emit": [msg.emit.t, *msg.emit.x],
                 "deliver": [msg.deliver.t, *msg.deliver.x]}
            )
        check_placements(msg.emit_placement, msg.emit, what + ":emit")
        check_placements(msg.deliver_placement, msg.deliver, what + ":deliver")
    for k, op in enumerate(transcript.local_ops):
        what = f"local[{k}]:{op.kind}"
        on_worldline(op.agent, op.event, what)
        check_placements(op.placement, op.event, what)

    # Interleave messages and local ops in transcript order per agent.
    ordered: dict[str, list[float]] = {}
    for item in _chronology(transcript):
        ordered.setdefault(item[0], []).append(item[1].t)
    for agent, ts in ordered.items():
        if any(b < a for a, b in zip(ts, ts[1:])):
            violations.append({"kind": "agent_time_regression", "agent": agent})

    violations.extend(_semantic_violations(transcript))
    return (not violations, violations)


def _chronology(transcript: Transcript):
    """(agent, event) pairs in scheduling order, merged on sequence numbers."""
    items: list[tuple[int, str, Event]] = []
    for msg in transcript.messages:
        items.append((msg.seq, msg.sender, msg.emit))
        items.append((msg.seq, msg.receiver, msg.deliver))
    for op in transcript.local_ops:
        items.append((op.seq, op.agent, op.event))
    for _seq, agent, event in sorted(items, key=lambda it: it[0]):
        yield (agent, event)


@dataclass(frozen=True, eq=False)
class AuditResult:
    ok: bool
    n_transcripts: int
    bob_to_alice: int
    chi2_rows: tuple[dict, ...]

    def __bool__(self) -> bool:
        return self.ok


def obliviousness_audit(
    transcripts: Sequence[Transcript], significance: float = 0.001
) -> AuditResult:
    """Check that receiver-to-sender traffic carries nothing about b.

    For psr and pqc transcripts any receiver-to-sender message at all is
    a violation.  For pcc transcripts the only allowed kind is the
    shifted announcement, and for every group of runs sharing (m, b)
    the announced values must pass a chi-squared uniformity test over
    range(m) at the given significance level.
    """
    bob_to_alice = 0
    ok = True
    groups: dict[tuple[int, int], list[int]] = {}
    for t in transcripts:
        for msg in t.messages:
            if msg.sender.startswith("B") and msg.receiver.startswith("A"):
                if t.mode == "pcc" and msg.kind == "basis_shift":
                    continue
                bob_to_alice += 1
        if t.mode == "pcc":
            groups.setdefault((t.m, t.b), []).append(t.extra["b_prime"])
    if bob_to_alice > 0:
        ok = False
    rows = []
    for (m, b), values in sorted(groups.items()):
        counts = np.bincount(values, minlength=m)
        stat, pvalue = stats.chisquare(counts)
        passed = bool(pvalue >= significance)
        rows.append(
            {
                "m": m,
                "b": b,
                "runs": int(counts.sum()),
                "counts": counts.tolist(),
                "chi2": float(stat),
                "pvalue": float(pvalue),
                "ok": passed,
            }
        )
        ok = ok and passed
    return AuditResult(ok, len(transcripts), bob_to_alice, tuple(rows))


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, Event):
        return [value.t, *value.x]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, AliceInputs):
        return dqacm_mod.inputs_to_json(value)
    if isinstance(value, dqacm_mod.BobRecord):
        return dqacm_mod.record_to_json(value)
    return value


def transcript_to_json(t: Transcript) -> dict:
    """Serialize a transcript for reports; quantum payloads stay classical."""
    return {
        "mode": t.mode,
        "m": t.m,
        "n": t.n,
        "b": t.b,
        "messages": [
            {
                "sender": msg.sender,
                "receiver": msg.receiver,
                "kind": msg.kind,
                "payload": _jsonable(msg.payload),
                "emit": _jsonable(msg.emit),
                "deliver": _jsonable(msg.deliver),
                "emit_placement": [[p.kind, p.index] for p in msg.emit_placement],
                "deliver_placement": [[p.kind, p.index] for p in msg.deliver_placement],
            }
            for msg in t.messages
        ],
        "local_ops": [
            {
                "agent": op.agent,
                "kind": op.kind,
                "payload": _jsonable(op.payload),
                "event": _jsonable(op.event),
                "placement": [[p.kind, p.index] for p in op.placement],
            }
            for op in t.local_ops
        ],
        "outputs": {str(k): _jsonable(v) for k, v in t.outputs.items()},
        "extra": {
            k: _jsonable(v)
            for k, v in t.extra.items()
            if k not in ("quantum", "record", "decoded")
        },
    }
