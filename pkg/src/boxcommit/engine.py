"""Event-ordered execution of two-party protocols over timing-aware boxes.

A :class:`Scenario` fixes the boxes, the random tape layout and a schedule of
steps. Each step belongs to one party, which must answer it with exactly one
:class:`Action`. Box instances enforce the timing rules: a PR box answers
whoever queries it immediately, while an OT box only answers Bob once Alice
has made her input and is dead forever after an early query.

Exact analysis enumerates random tapes lazily: an execution forks only when
it reads a tape bit that has not been fixed yet, so bits a run never reads
cost nothing.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product
from typing import Callable, NamedTuple, Optional, Sequence, Union

from .corrbox import (
    BITS,
    HALF,
    ONE,
    ZERO,
    BoxKind,
    GeneralBox,
    JointConditional,
    LocalBox,
    OTBox,
    PRBox,
    ot_response,
)
from .errors import ConfigurationError, GuardLimitExceeded, ProtocolViolation

ALICE = "alice"
BOB = "bob"
PARTIES = (ALICE, BOB)

DEFAULT_TAPE_LIMIT = 24


def peer(party: str) -> str:
    return BOB if party == ALICE else ALICE


class _Pending:
    """Result of querying a timing-gated box too early."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Pending"

    def __reduce__(self):
        return (_Pending, ())


PENDING = _Pending()

# actions


@dataclass(frozen=True, slots=True)
class SampleCoin:
    slot: str


@dataclass(frozen=True, slots=True)
class InputBox:
    box: int
    bits: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class SendMessage:
    bits: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class Decide:
    accept: bool
    revealed: Optional[int] = None
    cheat_flag: bool = False


@dataclass(frozen=True, slots=True)
class Skip:
    pass


Action = Union[SampleCoin, InputBox, SendMessage, Decide, Skip]

SAMPLE, INPUT, MESSAGE, DECIDE = "sample", "input", "message", "decide"


@dataclass(frozen=True, slots=True)
class Step:
    """One scheduled move.

    ``target`` is the tape slot for a sample step, the box index for an
    input step and the payload width for a message step. ``optional``
    steps also accept :class:`Skip`.
    """

    actor: str
    label: str
    kind: str
    target: object = None
    optional: bool = False
    phase: str = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "phase", self.label.split(".", 1)[0])


class Event(NamedTuple):
    index: int
    actor: str
    action: Action
    result: object
    label: str

    @property
    def phase(self) -> str:
        return self.label.split(".", 1)[0]


class View:
    """What one party has seen: its own events and the messages it received.

    Immutable by convention; two views are equal when party and events are.
    """

    __slots__ = ("party", "events", "_index")

    def __init__(self, party: str, events: tuple[Event, ...], _index: Optional[tuple] = None):
        self.party = party
        self.events = events
        self._index = _index

    def __eq__(self, other):
        if not isinstance(other, View):
            return NotImplemented
        return self.party == other.party and self.events == other.events

    def __hash__(self):
        return hash((self.party, self.events))

    def __repr__(self):
        return f"View(party={self.party!r}, events={self.events!r})"

    @property
    def _own(self) -> tuple[dict, dict]:
        if self._index is None:
            self._index = self._build_index()
        return self._index

    def _build_index(self) -> tuple[dict, dict]:
        samples, boxes = {}, {}
        for ev in self.events:
            if ev.actor != self.party:
                continue
            if isinstance(ev.action, SampleCoin):
                samples.setdefault(ev.action.slot, ev.result)
            elif isinstance(ev.action, InputBox):
                boxes.setdefault(ev.action.box, ev)
        return samples, boxes

    def sampled(self, slot: str):
        return self._own[0].get(slot)

    def box_event(self, box: int) -> Optional[Event]:
        return self._own[1].get(box)

    def box_result(self, box: int):
        ev = self.box_event(box)
        return None if ev is None else ev.result

    def received(self, label: Optional[str] = None) -> list[tuple[int, ...]]:
        return [
            ev.action.bits
            for ev in self.events
            if ev.actor != self.party
            and isinstance(ev.action, SendMessage)
            and (label is None or ev.label == label)
        ]

    def truncated(self, n: int) -> View:
        return View(self.party, tuple(ev for ev in self.events if ev.index < n))


@dataclass(frozen=True)
class Scenario:
    boxes: tuple[BoxKind, ...] = ()
    steps: tuple[Step, ...] = ()
    alice_slots: tuple[str, ...] = ()
    bob_slots: tuple[str, ...] = ()

    @property
    def tape_length(self) -> int:
        return len(self.alice_slots) + len(self.bob_slots) + len(self.boxes)

    @property
    def phases(self) -> tuple[str, ...]:
        seen = []
        for step in self.steps:
            if step.phase not in seen:
                seen.append(step.phase)
        return tuple(seen)

    def cutoff(self, label: Union[str, int, None]) -> int:
        """Step index just past the end of phase ``label``."""
        if label is None:
            return len(self.steps)
        if isinstance(label, int):
            if not 0 <= label <= len(self.steps):
                raise ConfigurationError(f"cutoff {label} outside the schedule")
            return label
        if label not in self.phases:
            raise ConfigurationError(f"unknown phase {label!r}; have {self.phases}")
        return max(i for i, s in enumerate(self.steps) if s.phase == label) + 1

    def slot_ref(self, party: str, slot: str) -> tuple[str, int]:
        slots = self.alice_slots if party == ALICE else self.bob_slots
        try:
            return party, slots.index(slot)
        except ValueError:
            raise ConfigurationError(f"{party} has no tape slot {slot!r}") from None


@dataclass(frozen=True)
class RandomTape:
    """All randomness of one run. ``None`` marks a bit not yet fixed."""

    alice_bits: tuple = ()
    bob_bits: tuple = ()
    box_bits: tuple = ()

    @classmethod
    def blank(cls, scenario: Scenario) -> RandomTape:
        return cls(
            (None,) * len(scenario.alice_slots),
            (None,) * len(scenario.bob_slots),
            (None,) * len(scenario.boxes),
        )

    @classmethod
    def from_bits(cls, scenario: Scenario, bits: Sequence[int]) -> RandomTape:
        if len(bits) != scenario.tape_length:
            raise ValueError(f"tape needs {scenario.tape_length} bits, got {len(bits)}")
        na, nb = len(scenario.alice_slots), len(scenario.bob_slots)
        return cls(tuple(bits[:na]), tuple(bits[na:na + nb]), tuple(bits[na + nb:]))

    @classmethod
    def from_int(cls, scenario: Scenario, value: int) -> RandomTape:
        return cls.from_bits(
            scenario, [(value >> i) & 1 for i in range(scenario.tape_length)]
        )

    def get(self, ref: tuple[str, int]):
        section, i = ref
        return self._section(section)[i]

    def _section(self, section: str) -> tuple:
        if section == ALICE:
            return self.alice_bits
        if section == BOB:
            return self.bob_bits
        return self.box_bits

    def assign(self, ref: tuple[str, int], bit: int) -> RandomTape:
        section, i = ref
        bits = list(self._section(section))
        bits[i] = bit
        bits = tuple(bits)
        if section == ALICE:
            return RandomTape(bits, self.bob_bits, self.box_bits)
        if section == BOB:
            return RandomTape(self.alice_bits, bits, self.box_bits)
        return RandomTape(self.alice_bits, self.bob_bits, bits)

    def filled(self) -> RandomTape:
        def fill(bits):
            return tuple(0 if b is None else b for b in bits)

        return RandomTape(fill(self.alice_bits), fill(self.bob_bits), fill(self.box_bits))

    @property
    def complete(self) -> bool:
        return None not in self.alice_bits + self.bob_bits + self.box_bits


class UnassignedBit(Exception):
    """Raised (before any state change) when a run reads an unfixed tape bit."""

    def __init__(self, ref):
        super().__init__(ref)
        self.ref = ref


@dataclass(slots=True)
class BoxInstance:
    kind: BoxKind
    box_id: int
    alice_in: Optional[tuple] = None
    bob_in: Optional[tuple] = None
    alice_out: object = None
    bob_out: object = None
    dead: bool = False

    def copy(self) -> BoxInstance:
        return BoxInstance(
            self.kind, self.box_id, self.alice_in, self.bob_in,
            self.alice_out, self.bob_out, self.dead,
        )


_BIT_SET = frozenset(BITS)


def port_width(kind: BoxKind, party: str) -> int:
    return 2 if isinstance(kind, OTBox) and party == ALICE else 1


def query_box(instance: BoxInstance, party: str, bits: tuple, tape: RandomTape):
    """Feed ``bits`` into ``party``'s port and return what that party gets back.

    OT: Alice gets nothing (``None``); Bob gets ``x_c`` if Alice already
    input, otherwise :data:`PENDING`, and the box dies. PR: the first mover
    gets the box's tape bit, the second the bit forced by ``a ^ b == x & y``.
    """
    mine = instance.alice_in if party == ALICE else instance.bob_in
    if mine is not None:
        raise ProtocolViolation(f"{party} already used box {instance.box_id}")
    kind = instance.kind
    if len(bits) != port_width(kind, party) or not set(bits) <= _BIT_SET:
        raise ProtocolViolation(f"bad input {bits!r} for {party} on box {instance.box_id}")

    if isinstance(kind, OTBox):
        if party == ALICE:
            instance.alice_in = bits
            out = PENDING if instance.dead else None
            instance.alice_out = out
            return out
        instance.bob_in = bits
        if instance.dead or instance.alice_in is None:
            instance.dead = True
            out = PENDING
        else:
            out = ot_response(instance.alice_in[0], instance.alice_in[1], bits[0])
        instance.bob_out = out
        return out

    if isinstance(kind, PRBox):
        other_in = instance.bob_in if party == ALICE else instance.alice_in
        if other_in is None:
            lam = tape.box_bits[instance.box_id]
            if lam is None:
                raise UnassignedBit(("box", instance.box_id))
            out = lam
        else:
            other_out = instance.bob_out if party == ALICE else instance.alice_out
            out = other_out ^ (bits[0] & other_in[0])
    elif isinstance(kind, LocalBox):
        table = kind.fa if party == ALICE else kind.fb
        out = table[bits[0]]
    elif isinstance(kind, GeneralBox):
        raise ConfigurationError("general boxes have no timing model; use their static table")
    else:
        raise TypeError(f"not a box kind: {kind!r}")

    if party == ALICE:
        instance.alice_in, instance.alice_out = bits, out
    else:
        instance.bob_in, instance.bob_out = bits, out
    return out


@dataclass(frozen=True)
class PartyStrategy:
    """A deterministic decision rule for one party.

    ``decide(view, tape_bits, step, target)`` returns the action for
    ``step``. ``target`` is an analysis parameter (the value a cheating
    Alice wants to reveal); most strategies ignore it.
    """

    name: str
    decide: Callable
    target: Optional[int] = None

    def __call__(self, view: View, tape_bits: tuple, step: Step) -> Action:
        return self.decide(view, tape_bits, step, self.target)

    def aimed(self, target: Optional[int]) -> PartyStrategy:
        return replace(self, target=target)


def _check_action(step: Step, action: Action) -> None:
    kind = type(action)
    ok = False
    if kind is Skip:
        ok = step.optional
    elif step.kind == SAMPLE:
        ok = kind is SampleCoin and action.slot == step.target
    elif step.kind == INPUT:
        ok = kind is InputBox and action.box == step.target
    elif step.kind == MESSAGE:
        ok = (
            kind is SendMessage
            and len(action.bits) == step.target
            and set(action.bits) <= _BIT_SET
        )
    elif step.kind == DECIDE:
        ok = isinstance(action, Decide)
    if not ok:
        raise ProtocolViolation(f"{step.actor} may not play {action!r} at step {step.label}")


class Execution:
    """Mutable state of one run in progress."""

    __slots__ = ("scenario", "tape", "boxes", "events", "visible", "own", "fp", "pos")

    def __init__(self, scenario: Scenario, tape: Optional[RandomTape] = None):
        self.scenario = scenario
        self.tape = RandomTape.blank(scenario) if tape is None else tape
        self.boxes = [BoxInstance(kind, i) for i, kind in enumerate(scenario.boxes)]
        self.events: list[Event] = []
        self.visible = {ALICE: [], BOB: []}
        # per party: (slot -> sampled bit, box -> own input event); the dicts
        # are replaced rather than mutated so views and copies can share them
        self.own = {ALICE: ({}, {}), BOB: ({}, {})}
        # per party: (events hashed so far, running hash), extended on demand
        self.fp = {ALICE: (0, 0), BOB: (0, 0)}
        self.pos = 0

    def copy(self) -> Execution:
        new = Execution.__new__(Execution)
        new.scenario = self.scenario
        new.tape = self.tape
        new.boxes = list(self.boxes)  # instances are copied on write in _apply
        new.events = list(self.events)
        new.visible = {ALICE: list(self.visible[ALICE]), BOB: list(self.visible[BOB])}
        new.own = dict(self.own)
        new.fp = dict(self.fp)
        new.pos = self.pos
        return new

    @property
    def step(self) -> Optional[Step]:
        steps = self.scenario.steps
        return steps[self.pos] if self.pos < len(steps) else None

    def view(self, party: str) -> View:
        return View(party, tuple(self.visible[party]), self.own[party])

    def fingerprint(self, party: str) -> int:
        seen, h = self.fp[party]
        events = self.visible[party]
        if seen < len(events):
            for ev in events[seen:]:
                h = hash((h, ev))
            self.fp[party] = (len(events), h)
        return h

    def view_key(self, party: str) -> tuple:
        return tuple(self.visible[party])

    def assign(self, ref, bit: int) -> None:
        self.tape = self.tape.assign(ref, bit)

    def apply(self, action: Action) -> Event:
        step = self.step
        if step is None:
            raise ProtocolViolation("the schedule is already finished")
        return self._apply(step, action)

    def _apply(self, step: Step, action: Action) -> Event:
        _check_action(step, action)
        actor = step.actor
        kind = type(action)
        result = None
        if kind is SampleCoin:
            ref = self.scenario.slot_ref(actor, action.slot)
            result = self.tape.get(ref)
            if result is None:
                raise UnassignedBit(ref)
        elif kind is InputBox:
            instance = self.boxes[action.box].copy()
            result = query_box(instance, actor, action.bits, self.tape)
            self.boxes[action.box] = instance
        ev = Event(self.pos, actor, action, result, step.label)
        self.events.append(ev)
        self.visible[actor].append(ev)
        if kind is SampleCoin:
            samples, boxes = self.own[actor]
            if action.slot not in samples:
                self.own[actor] = ({**samples, action.slot: result}, boxes)
        elif kind is InputBox:
            samples, boxes = self.own[actor]
            if action.box not in boxes:
                self.own[actor] = (samples, {**boxes, action.box: ev})
        elif kind is SendMessage:
            self.visible[BOB if actor == ALICE else ALICE].append(ev)
        self.pos += 1
        return ev

    def next_action(self, strategies) -> Action:
        step = self.step
        actor = step.actor
        strategy = strategies[0] if actor == ALICE else strategies[1]
        bits = self.tape.alice_bits if actor == ALICE else self.tape.bob_bits
        return strategy(self.view(actor), bits, step)

    def run_until(self, strategies, stop: int) -> None:
        steps = self.scenario.steps
        alice, bob = strategies
        stop = min(stop, len(steps))
        while self.pos < stop:
            step = steps[self.pos]
            if step.actor == ALICE:
                action = alice.decide(self.view(ALICE), self.tape.alice_bits, step, alice.target)
            else:
                action = bob.decide(self.view(BOB), self.tape.bob_bits, step, bob.target)
            self._apply(step, action)

    def transcript(self) -> Transcript:
        return Transcript(tuple(self.events), self.tape.filled(), self.scenario.phases)


@dataclass(frozen=True)
class Transcript:
    """Ordered events of a run. Equality ignores the tape."""

    events: tuple[Event, ...]
    tape: RandomTape = field(default_factory=RandomTape, compare=False)
    phases: tuple[str, ...] = field(default=(), compare=False)

    def view(self, party: str, cutoff: Optional[str] = None) -> View:
        events = self.events
        if cutoff is not None:
            if cutoff not in self.phases:
                raise ConfigurationError(f"unknown phase {cutoff!r}; have {self.phases}")
            last = self.phases.index(cutoff)
            events = tuple(ev for ev in events if self.phases.index(ev.phase) <= last)
        return View(
            party,
            tuple(
                ev for ev in events
                if ev.actor == party or isinstance(ev.action, SendMessage)
            ),
        )

    def decision(self) -> Optional[Decide]:
        for ev in reversed(self.events):
            if isinstance(ev.action, Decide):
                return ev.action
        return None

    def has_pending(self) -> bool:
        return any(ev.result is PENDING for ev in self.events)


Weighted = list[tuple[Execution, Fraction]]


def fork_apply(ex: Execution, action: Action) -> Weighted:
    """Apply ``action``, splitting on every unfixed tape bit it reads."""
    out = []
    stack = [(ex, ONE)]
    while stack:
        cur, w = stack.pop()
        try:
            cur.apply(action)
        except UnassignedBit as need:
            other = cur.copy()
            other.assign(need.ref, 1)
            cur.assign(need.ref, 0)
            stack.append((other, w * HALF))
            stack.append((cur, w * HALF))
            continue
        out.append((cur, w))
    return out


def settle(states: Weighted, strategies, stop: Optional[int] = None) -> Weighted:
    """Advance every state to step ``stop`` (default: the end), forking on reads."""
    out = []
    # depth counts the forks below each state; the weight is halved once at the end
    stack = [(ex, w, 0) for ex, w in reversed(states)]
    while stack:
        ex, w, depth = stack.pop()
        end = len(ex.scenario.steps) if stop is None else stop
        try:
            ex.run_until(strategies, end)
        except UnassignedBit as need:
            other = ex.copy()
            other.assign(need.ref, 1)
            ex.assign(need.ref, 0)
            stack.append((other, w, depth + 1))
            stack.append((ex, w, depth + 1))
            continue
        out.append((ex, w if depth == 0 else w * Fraction(1, 1 << depth)))
    return out


def group_by_view(states: Weighted, party: str) -> list[Weighted]:
    """Partition states by ``party``'s view, keeping first-seen order."""
    buckets: dict = {}
    groups: list[Weighted] = []
    for ex, w in states:
        candidates = buckets.setdefault(ex.fingerprint(party), [])
        for group in candidates:
            if group[0][0].visible[party] == ex.visible[party]:
                group.append((ex, w))
                break
        else:
            group = [(ex, w)]
            candidates.append(group)
            groups.append(group)
    return groups


def check_tape_limit(scenario: Scenario, limit: int = DEFAULT_TAPE_LIMIT) -> None:
    if scenario.tape_length > limit:
        raise GuardLimitExceeded("random tape", scenario.tape_length, limit)


def exact_states(scenario: Scenario, limit: int = DEFAULT_TAPE_LIMIT) -> Weighted:
    check_tape_limit(scenario, limit)
    return [(Execution(scenario), ONE)]


def sampled_states(scenario: Scenario, n: int, seed: int) -> Weighted:
    """``n`` tapes drawn from ``random.Random(seed)``, merged with their frequencies."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = random.Random(seed)
    length = scenario.tape_length
    counts = Counter(rng.getrandbits(length) if length else 0 for _ in range(n))
    return [
        (Execution(scenario, RandomTape.from_int(scenario, value)), Fraction(c, n))
        for value, c in counts.items()
    ]


def run(scenario: Scenario, strategies, tape: RandomTape) -> Transcript:
    if not tape.complete or len(tape.alice_bits) != len(scenario.alice_slots) \
            or len(tape.bob_bits) != len(scenario.bob_slots) \
            or len(tape.box_bits) != len(scenario.boxes):
        raise ValueError("tape does not match the scenario's declared layout")
    ex = Execution(scenario, tape)
    ex.run_until(strategies, len(scenario.steps))
    return ex.transcript()


def _merge(states: Weighted) -> list[tuple[Transcript, Fraction]]:
    merged: dict[Transcript, Fraction] = {}
    for ex, w in states:
        t = ex.transcript()
        merged[t] = merged.get(t, ZERO) + w
    return list(merged.items())


def enumerate_transcripts(
    scenario: Scenario, strategies, limit: int = DEFAULT_TAPE_LIMIT
) -> list[tuple[Transcript, Fraction]]:
    """Every distinct transcript with its exact probability over uniform tapes."""
    return _merge(settle(exact_states(scenario, limit), strategies))


def monte_carlo(
    scenario: Scenario, strategies, n: int, seed: int
) -> list[tuple[Transcript, Fraction]]:
    """Empirical transcript frequencies over ``n`` tapes drawn with ``seed``."""
    return _merge(settle(sampled_states(scenario, n, seed), strategies))


def view_distribution(outcomes, party: str, cutoff: Optional[str] = None) -> dict[View, Fraction]:
    dist: dict[View, Fraction] = {}
    for transcript, p in outcomes:
        v = transcript.view(party, cutoff)
        dist[v] = dist.get(v, ZERO) + p
    return dist


def statistical_distance(p: dict, q: dict) -> Fraction:
    keys = set(p) | set(q)
    return sum((abs(p.get(k, ZERO) - q.get(k, ZERO)) for k in keys), ZERO) / 2


def legal_actions(ex: Execution) -> list[Action]:
    """Every action the current step accepts, in a fixed order."""
    step = ex.step
    if step is None:
        return []
    actions: list[Action] = [Skip()] if step.optional else []
    if step.kind == SAMPLE:
        actions.append(SampleCoin(step.target))
    elif step.kind == INPUT:
        box = ex.boxes[step.target]
        used = box.alice_in if step.actor == ALICE else box.bob_in
        if used is None:
            width = port_width(box.kind, step.actor)
            actions.extend(InputBox(step.target, bits) for bits in product(BITS, repeat=width))
    elif step.kind == MESSAGE:
        actions.extend(SendMessage(bits) for bits in product(BITS, repeat=step.target))
    elif step.kind == DECIDE:
        actions.extend(Decide(acc, rev) for acc in (False, True) for rev in (None, *BITS)
                       if acc == (rev is not None))
    return actions


def _constant(name: str, script: dict) -> PartyStrategy:
    def decide(view, tape, step, target):
        return script.get(step.label, Skip())

    return PartyStrategy(name, decide)


def joint_table(kind: BoxKind, first: str = ALICE) -> JointConditional:
    """Joint output table of one box instance, built by running the engine.

    Both parties input once, ``first`` moving first; outputs are averaged
    over the box's tape bit. An OT box reports Alice's output as 0.
    """
    xs = (tuple(p) for p in product(BITS, BITS)) if isinstance(kind, OTBox) else ((x,) for x in BITS)
    table = {}
    for xa in xs:
        for y in BITS:
            order = (first, peer(first))
            steps = tuple(Step(p, f"box.{p}", INPUT, 0) for p in order)
            scenario = Scenario(boxes=(kind,), steps=steps)
            alice = _constant("alice", {f"box.{ALICE}": InputBox(0, xa)})
            bob = _constant("bob", {f"box.{BOB}": InputBox(0, (y,))})
            row: dict = {}
            for t, p in enumerate_transcripts(scenario, (alice, bob)):
                res = {ev.actor: ev.result for ev in t.events}
                a = res[ALICE] if res[ALICE] is not None else 0
                b = res[BOB]
                if b is PENDING:
                    raise ProtocolViolation("box never answered Bob")
                row[(a, b)] = row.get((a, b), ZERO) + p
            table[(xa if len(xa) > 1 else xa[0], y)] = row
    return JointConditional(table)
