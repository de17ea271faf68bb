from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from boxcommit.corrbox import BITS, OT, PR, LocalBox, as_conditional
from boxcommit.engine import (
    ALICE,
    BOB,
    PENDING,
    BoxInstance,
    Decide,
    Execution,
    InputBox,
    PartyStrategy,
    RandomTape,
    SampleCoin,
    Scenario,
    SendMessage,
    Skip,
    Step,
    enumerate_transcripts,
    joint_table,
    legal_actions,
    monte_carlo,
    query_box,
    run,
    statistical_distance,
    view_distribution,
)
from boxcommit.errors import ConfigurationError, GuardLimitExceeded, ProtocolViolation


def scripted(name, fn):
    return PartyStrategy(name, lambda view, tape, step, target: fn(view, step))


def coin_scenario():
    # Alice flips a coin and sends it; Bob flips one and decides on the xor
    steps = (
        Step(ALICE, "one.1", "sample", "a"),
        Step(ALICE, "one.2", "message", 1),
        Step(BOB, "two.1", "sample", "b"),
        Step(BOB, "two.2", "decide"),
    )
    return Scenario(steps=steps, alice_slots=("a",), bob_slots=("b",))


def coin_players():
    def alice(view, step):
        if step.kind == "sample":
            return SampleCoin("a")
        return SendMessage((view.sampled("a"),))

    def bob(view, step):
        if step.kind == "sample":
            return SampleCoin("b")
        (m,), = view.received()
        ok = m ^ view.sampled("b") == 0
        return Decide(ok, 0 if ok else None)

    return scripted("alice", alice), scripted("bob", bob)


def test_enumeration_exact_and_normalised():
    outcomes = enumerate_transcripts(coin_scenario(), coin_players())
    assert sum(p for _, p in outcomes) == 1
    assert len(outcomes) == 4
    accepted = sum(p for t, p in outcomes if t.decision().accept)
    assert accepted == Fraction(1, 2)


def test_unread_bits_cost_nothing():
    steps = (Step(ALICE, "x.1", "message", 0),)
    scenario = Scenario(steps=steps, alice_slots=("u", "v", "w"))
    outcomes = enumerate_transcripts(scenario, (scripted("a", lambda v, s: SendMessage(())), None))
    assert outcomes[0][1] == 1 and len(outcomes) == 1


def test_run_with_explicit_tape_matches_enumeration():
    scenario = coin_scenario()
    players = coin_players()
    dist = dict(enumerate_transcripts(scenario, players))
    for bits in product(BITS, repeat=2):
        t = run(scenario, players, RandomTape.from_bits(scenario, bits))
        assert dist[t] == Fraction(1, 4)
    with pytest.raises(ValueError):
        run(scenario, players, RandomTape((0,), (), ()))


def test_views_hide_peer_samples():
    scenario = coin_scenario()
    t = run(scenario, coin_players(), RandomTape.from_bits(scenario, (1, 0)))
    bob = t.view(BOB)
    assert bob.sampled("a") is None
    assert bob.received() == [(1,)]
    alice = t.view(ALICE)
    assert all(ev.actor == ALICE for ev in alice.events)
    assert t.view(BOB, "one").events == tuple(ev for ev in bob.events if ev.index < 2)
    with pytest.raises(ConfigurationError):
        t.view(BOB, "nope")


def test_cutoff():
    scenario = coin_scenario()
    assert scenario.cutoff("one") == 2
    assert scenario.cutoff(None) == 4
    with pytest.raises(ConfigurationError):
        scenario.cutoff("three")
    with pytest.raises(ConfigurationError):
        scenario.cutoff(9)


def test_schedule_is_enforced():
    scenario = coin_scenario()
    ex = Execution(scenario, RandomTape.from_bits(scenario, (0, 0)))
    with pytest.raises(ProtocolViolation):
        ex.apply(SendMessage((0,)))  # must sample first
    with pytest.raises(ProtocolViolation):
        ex.apply(Skip())  # step is not optional
    ex.apply(SampleCoin("a"))
    with pytest.raises(ProtocolViolation):
        ex.apply(SendMessage((0, 1)))  # wrong width


def test_pr_box_first_mover_gets_tape_bit():
    tape = RandomTape((), (), (1,))
    box = BoxInstance(PR, 0)
    assert query_box(box, BOB, (1,), tape) == 1
    assert query_box(box, ALICE, (1,), tape) == 0
    with pytest.raises(ProtocolViolation):
        query_box(box, ALICE, (0,), tape)


def test_ot_box_gating():
    tape = RandomTape()
    early = BoxInstance(OT, 0)
    assert query_box(early, BOB, (1,), tape) is PENDING
    assert early.dead
    assert query_box(early, ALICE, (0, 1), tape) is PENDING
    on_time = BoxInstance(OT, 0)
    assert query_box(on_time, ALICE, (0, 1), tape) is None
    assert query_box(on_time, BOB, (1,), tape) == 1
    with pytest.raises(ProtocolViolation):
        query_box(BoxInstance(OT, 0), ALICE, (1,), tape)


def test_joint_tables_from_engine():
    assert joint_table(PR, ALICE) == joint_table(PR, BOB) == as_conditional(PR)
    assert joint_table(OT, ALICE) == as_conditional(OT)
    with pytest.raises(ProtocolViolation):
        joint_table(OT, BOB)
    box = LocalBox((1, 0), (0, 0))
    assert joint_table(box, BOB) == as_conditional(box)


def test_legal_actions_cover_every_option():
    scenario = Scenario(
        boxes=(OT,),
        steps=(Step(ALICE, "c.1", "input", 0, optional=True), Step(BOB, "c.2", "decide")),
    )
    ex = Execution(scenario)
    acts = legal_actions(ex)
    assert acts[0] == Skip() and len(acts) == 5
    ex.apply(acts[1])
    assert {a.accept for a in legal_actions(ex)} == {False, True}


def test_tape_guard():
    scenario = Scenario(steps=(), alice_slots=tuple(f"a{i}" for i in range(25)))
    with pytest.raises(GuardLimitExceeded) as err:
        enumerate_transcripts(scenario, (None, None))
    assert err.value.size == 25


def test_monte_carlo_is_seeded_and_in_support():
    scenario = coin_scenario()
    players = coin_players()
    exact = dict(enumerate_transcripts(scenario, players))
    one = monte_carlo(scenario, players, 1, seed=5)
    assert len(one) == 1 and one[0][0] in exact and one[0][1] == 1
    assert monte_carlo(scenario, players, 500, seed=7) == monte_carlo(scenario, players, 500, seed=7)
    with pytest.raises(ValueError):
        monte_carlo(scenario, players, 0, seed=1)


def test_statistical_distance():
    outcomes = enumerate_transcripts(coin_scenario(), coin_players())
    bob_views = view_distribution(outcomes, BOB)
    assert statistical_distance(bob_views, bob_views) == 0
    assert statistical_distance({1: Fraction(1)}, {2: Fraction(1)}) == 1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=2, max_size=2))
def test_runs_are_deterministic(bits):
    scenario = coin_scenario()
    tape = RandomTape.from_bits(scenario, bits)
    assert run(scenario, coin_players(), tape) == run(scenario, coin_players(), tape)
