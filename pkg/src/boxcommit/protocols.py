"""Commitment protocols and box-to-box simulations, built as engine scenarios.

Tape slots are named ``alpha`` and ``r0 .. r{k-1}`` for Alice and
``s0 .. s{k-1}`` for Bob; boxes are numbered from 0. Step labels follow
the numbered protocol lists (``commit.1`` .. ``commit.5``, ``reveal.1``,
``reveal.2``).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Optional, Union

from .corrbox import OT, PR, ZERO, BoxKind, JointConditional
from .engine import (
    ALICE,
    BOB,
    DECIDE,
    INPUT,
    MESSAGE,
    PENDING,
    SAMPLE,
    Decide,
    Event,
    InputBox,
    PartyStrategy,
    RandomTape,
    SampleCoin,
    Scenario,
    SendMessage,
    Skip,
    Step,
    View,
    enumerate_transcripts,
    run,
)


@dataclass(frozen=True)
class CompositionConfig:
    """Security target ``n_epsilon``; the protocol runs ``k = 2 n - 1`` copies."""

    n_epsilon: int = 1

    def __post_init__(self):
        if not isinstance(self.n_epsilon, int) or self.n_epsilon < 1:
            raise ValueError(f"n_epsilon must be a positive integer, got {self.n_epsilon!r}")

    @property
    def k(self) -> int:
        return 2 * self.n_epsilon - 1


@dataclass(frozen=True)
class CommitmentOutcome:
    accepted: bool
    revealed: Optional[int] = None
    cheat_flag: bool = False

    def __post_init__(self):
        if self.accepted and self.revealed is None:
            raise ValueError("an accepted commitment must carry the revealed bit")
        if self.cheat_flag and self.accepted:
            raise ValueError("a flagged run cannot be accepted")

    def as_action(self) -> Decide:
        return Decide(self.accepted, self.revealed, self.cheat_flag)


REJECT = CommitmentOutcome(False)


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    name: str
    variant: str
    n_epsilon: int
    boxes: tuple[BoxKind, ...]
    commit_schedule: tuple[Step, ...]
    reveal_schedule: tuple[Step, ...]
    acceptance_rule: Callable[[View], CommitmentOutcome]
    base: Optional["ProtocolSpec"] = None

    @property
    def k(self) -> int:
        return len(self.boxes)

    @cached_property
    def scenario(self) -> Scenario:
        return Scenario(
            boxes=self.boxes,
            steps=self.commit_schedule + self.reveal_schedule,
            alice_slots=("alpha",) + tuple(f"r{i}" for i in range(self.k)),
            bob_slots=tuple(f"s{i}" for i in range(self.k)),
        )

    @property
    def uses_pr_boxes(self) -> bool:
        return all(b == PR for b in self.boxes)


def _commit_schedule(k: int, message_width: int) -> tuple[Step, ...]:
    steps = [Step(ALICE, "commit.1", SAMPLE, "alpha", optional=True)]
    steps += [Step(ALICE, "commit.1", SAMPLE, f"r{i}", optional=True) for i in range(k)]
    steps += [Step(ALICE, "commit.2", INPUT, i, optional=True) for i in range(k)]
    steps.append(Step(ALICE, "commit.3", MESSAGE, message_width))
    steps += [Step(BOB, "commit.4", SAMPLE, f"s{i}") for i in range(k)]
    steps += [Step(BOB, "commit.5", INPUT, i) for i in range(k)]
    return tuple(steps)


def _reveal_schedule(k: int) -> tuple[Step, ...]:
    # Alice may still feed untouched boxes before sending (alpha, r0..r{k-1}).
    steps = [Step(ALICE, "reveal.1", INPUT, i, optional=True) for i in range(k)]
    steps.append(Step(ALICE, "reveal.1", MESSAGE, 1 + k))
    steps.append(Step(BOB, "reveal.2", DECIDE))
    return tuple(steps)


def check_opening(view: View, xc: list, k: int) -> CommitmentOutcome:
    """Bob's REVEAL test ``x_c == r ^ (alpha & s)`` on every copy."""
    if any(v is PENDING or v is None for v in xc):
        return CommitmentOutcome(False, None, True)
    opened = view.received("reveal.1")
    if not opened:
        return REJECT
    alpha, *r = opened[-1]
    s = [view.sampled(f"s{i}") for i in range(k)]
    if all(xc[i] == r[i] ^ (alpha & s[i]) for i in range(k)):
        return CommitmentOutcome(True, alpha)
    return REJECT


def _ot_rule(k: int):
    def rule(view: View) -> CommitmentOutcome:
        return check_opening(view, [view.box_result(i) for i in range(k)], k)

    return rule


def _pr_rule(k: int):
    def rule(view: View) -> CommitmentOutcome:
        sent = view.received("commit.3")
        m = sent[0] if sent else (0,) * k
        xc = []
        for i in range(k):
            b = view.box_result(i)
            xc.append(b if b is None or b is PENDING else b ^ m[i])
        return check_opening(view, xc, k)

    return rule


def _config(cfg: Union[CompositionConfig, int]) -> CompositionConfig:
    return cfg if isinstance(cfg, CompositionConfig) else CompositionConfig(cfg)


def build_commit_ot(cfg: Union[CompositionConfig, int] = 1) -> ProtocolSpec:
    return _build_ot(_config(cfg).n_epsilon)


def build_commit_pr(cfg: Union[CompositionConfig, int] = 1) -> ProtocolSpec:
    return _build_pr(_config(cfg).n_epsilon)


def build_commit_ot_simulated(cfg: Union[CompositionConfig, int] = 1) -> ProtocolSpec:
    return _build_sim(_config(cfg).n_epsilon)


@lru_cache(maxsize=None)
def _build_ot(n: int) -> ProtocolSpec:
    k = CompositionConfig(n).k
    return ProtocolSpec(
        name="ot-commit",
        variant="ot",
        n_epsilon=n,
        boxes=(OT,) * k,
        commit_schedule=_commit_schedule(k, 0),
        reveal_schedule=_reveal_schedule(k),
        acceptance_rule=_ot_rule(k),
    )


@lru_cache(maxsize=None)
def _build_pr(n: int) -> ProtocolSpec:
    k = CompositionConfig(n).k
    return ProtocolSpec(
        name="pr-commit",
        variant="pr",
        n_epsilon=n,
        boxes=(PR,) * k,
        commit_schedule=_commit_schedule(k, k),
        reveal_schedule=_reveal_schedule(k),
        acceptance_rule=_pr_rule(k),
    )


@lru_cache(maxsize=None)
def _build_sim(n: int) -> ProtocolSpec:
    return simulate_ot_boxes(_build_ot(n))


PROTOCOLS = {
    "ot-commit": build_commit_ot,
    "pr-commit": build_commit_pr,
    "ot-sim-pr-commit": build_commit_ot_simulated,
}


def get_protocol(name: str, n_epsilon: int = 1) -> ProtocolSpec:
    try:
        builder = PROTOCOLS[name]
    except KeyError:
        raise ValueError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}") from None
    return builder(n_epsilon)


# OT boxes replaced by the PR-box simulation

SIM_MESSAGE_LABEL = "commit.3"


def simulate_ot_boxes(ot_spec: ProtocolSpec) -> ProtocolSpec:
    """Replace every OT box of ``ot_spec`` by a PR box plus one message bit.

    Alice's masked bits ``x0 ^ a`` ride on her step-3 message, which is the
    first message she sends after her box inputs. Bob computes
    ``x_c = m ^ b`` and then applies the original acceptance rule.
    """
    k = ot_spec.k
    commit = tuple(
        replace(step, target=k) if step.kind == MESSAGE and step.label == SIM_MESSAGE_LABEL else step
        for step in ot_spec.commit_schedule
    )
    base_rule = ot_spec.acceptance_rule
    return ProtocolSpec(
        name="ot-sim-pr-commit",
        variant="ot-sim",
        n_epsilon=ot_spec.n_epsilon,
        boxes=(PR,) * k,
        commit_schedule=commit,
        reveal_schedule=ot_spec.reveal_schedule,
        acceptance_rule=lambda view: base_rule(bob_ot_view(view, k)),
        base=ot_spec,
    )


def bob_ot_view(view: View, k: int) -> View:
    """Bob's view as the simulated OT boxes would have shown it."""
    sent = view.received(SIM_MESSAGE_LABEL)
    m = sent[0] if sent else (0,) * k
    events = []
    for ev in view.events:
        if ev.actor == BOB and isinstance(ev.action, InputBox) and ev.result in (0, 1):
            ev = ev._replace(result=ev.result ^ m[ev.action.box])
        elif ev.actor == ALICE and ev.label == SIM_MESSAGE_LABEL:
            ev = ev._replace(action=SendMessage(()))
        events.append(ev)
    return View(view.party, tuple(events))


def _base_step(step: Step) -> Step:
    if step.kind == MESSAGE and step.label == SIM_MESSAGE_LABEL:
        return replace(step, target=0)
    return step


def _alice_ot_view(inner: PartyStrategy, view: View, tape: tuple, steps) -> tuple[View, dict]:
    # Replays `inner` to recover the (x0, x1) pairs behind each PR input.
    events: list[Event] = []
    pairs: dict[int, tuple] = {}
    for ev in view.events:
        if ev.actor == ALICE and isinstance(ev.action, InputBox):
            act = inner(View(ALICE, tuple(events)), tape, _base_step(steps[ev.index]))
            pairs[ev.action.box] = act.bits
            ev = ev._replace(action=act, result=None)
        elif ev.actor == ALICE and ev.label == SIM_MESSAGE_LABEL:
            ev = ev._replace(action=SendMessage(()))
        events.append(ev)
    return View(ALICE, tuple(events)), pairs


def simulated_alice(inner: PartyStrategy, spec: ProtocolSpec) -> PartyStrategy:
    """Run an OT-level Alice strategy through the PR-box simulation."""
    steps = spec.scenario.steps
    k = spec.k

    def decide(view, tape, step, target):
        ot_view, pairs = _alice_ot_view(inner.aimed(target), view, tape, steps)
        act = inner.decide(ot_view, tape, _base_step(step), target)
        if isinstance(act, InputBox):
            x0, x1 = act.bits
            return InputBox(act.box, (x0 ^ x1,))
        if step.kind == MESSAGE and step.label == SIM_MESSAGE_LABEL:
            masked = []
            for i in range(k):
                a = view.box_result(i)
                masked.append(pairs[i][0] ^ a if i in pairs and a in (0, 1) else 0)
            return SendMessage(tuple(masked))
        return act

    return PartyStrategy(f"sim({inner.name})", decide, inner.target)


def simulated_bob(inner: PartyStrategy, spec: ProtocolSpec) -> PartyStrategy:
    k = spec.k

    def decide(view, tape, step, target):
        return inner.decide(bob_ot_view(view, k), tape, _base_step(step), target)

    return PartyStrategy(f"sim({inner.name})", decide, inner.target)


# standalone simulations of one box by the other


def _scripted(name: str, fn) -> PartyStrategy:
    return PartyStrategy(name, lambda view, tape, step, target: fn(view, step))


def pr_from_ot_scenario(bob_first: bool = False) -> Scenario:
    alice = [Step(ALICE, "sim.1", SAMPLE, "a"), Step(ALICE, "sim.2", INPUT, 0)]
    bob = [Step(BOB, "sim.3", INPUT, 0)]
    steps = bob + alice if bob_first else alice + bob
    return Scenario(boxes=(OT,), steps=tuple(steps), alice_slots=("a",))


def pr_from_ot_strategies(x: int, y: int) -> tuple[PartyStrategy, PartyStrategy]:
    def alice(view, step):
        if step.kind == SAMPLE:
            return SampleCoin("a")
        a = view.sampled("a")
        return InputBox(0, (a, x ^ a))

    return (
        _scripted("pr-from-ot alice", alice),
        _scripted("pr-from-ot bob", lambda view, step: InputBox(0, (y,))),
    )


def sim_pr_from_ot(x: int, y: int, a: int, bob_first: bool = False) -> tuple[int, object]:
    """PR-box outputs ``(a, b)`` simulated with one OT box and Alice's coin ``a``.

    ``b`` is ``Pending`` when Bob queries before Alice has made her input.
    """
    scenario = pr_from_ot_scenario(bob_first)
    t = run(scenario, pr_from_ot_strategies(x, y), RandomTape((a,), (), (0,)))
    bob = t.view(BOB)
    return t.view(ALICE).sampled("a"), bob.box_result(0)


def sim_pr_from_ot_table() -> JointConditional:
    table = {}
    for x in (0, 1):
        for y in (0, 1):
            row: dict = {}
            for t, p in enumerate_transcripts(pr_from_ot_scenario(), pr_from_ot_strategies(x, y)):
                ab = (t.view(ALICE).sampled("a"), t.view(BOB).box_result(0))
                row[ab] = row.get(ab, ZERO) + p
            table[(x, y)] = row
    return JointConditional(table)


def ot_from_pr_scenario() -> Scenario:
    steps = (
        Step(ALICE, "sim.1", INPUT, 0),
        Step(ALICE, "sim.2", MESSAGE, 1),
        Step(BOB, "sim.3", INPUT, 0),
    )
    return Scenario(boxes=(PR,), steps=steps)


def ot_from_pr_strategies(x0: int, x1: int, c: int) -> tuple[PartyStrategy, PartyStrategy]:
    def alice(view, step):
        if step.kind == INPUT:
            return InputBox(0, (x0 ^ x1,))
        return SendMessage((x0 ^ view.box_result(0),))

    return (
        _scripted("ot-from-pr alice", alice),
        _scripted("ot-from-pr bob", lambda view, step: InputBox(0, (c,))),
    )


def _ot_output(view: View) -> int:
    (m,) = view.received("sim.2")[0]
    return m ^ view.box_result(0)


def sim_ot_from_pr(x0: int, x1: int, c: int, lam: int) -> int:
    """Bob's ``x_c = m ^ b`` from one PR box (tape bit ``lam``) and one message."""
    t = run(ot_from_pr_scenario(), ot_from_pr_strategies(x0, x1, c), RandomTape((), (), (lam,)))
    return _ot_output(t.view(BOB))


def sim_ot_from_pr_message_distribution(x0: int, x1: int, c: int = 0) -> dict[int, Fraction]:
    dist: dict[int, Fraction] = {}
    for t, p in enumerate_transcripts(ot_from_pr_scenario(), ot_from_pr_strategies(x0, x1, c)):
        (m,) = t.view(BOB).received("sim.2")[0]
        dist[m] = dist.get(m, ZERO) + p
    return dist
