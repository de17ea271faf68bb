from fractions import Fraction
from itertools import product
from math import prod

import pytest

from boxcommit.corrbox import BITS
from boxcommit.engine import (
    PENDING,
    InputBox,
    PartyStrategy,
    SampleCoin,
    SendMessage,
    Skip,
    enumerate_transcripts,
)
from boxcommit.errors import ConfigurationError, GuardLimitExceeded, InapplicableStrategy
from boxcommit.protocols import build_commit_ot, build_commit_ot_simulated, build_commit_pr
from boxcommit.security import (
    BindingReport,
    acceptance_probability,
    commit_strategies,
    composability_demo,
    delayed_alice,
    eval_binding,
    eval_correctness,
    eval_privacy,
    honest_alice,
    honest_bob,
    search_optimal_cheat,
    security_report,
)

HALF = Fraction(1, 2)
OT_CHOICES = (None,) + tuple(product(BITS, BITS))


def ot_commit_oracle(k):
    """Best coin-free cheat on k OT boxes, by direct formula.

    Bob sends nothing, so Alice's reveal is fixed by her commit inputs and
    each box is passed independently with Bob's uniform choice bit.
    """
    best = Fraction(0)
    for inputs in product(OT_CHOICES, repeat=k):
        accept = []
        for alpha in BITS:
            per_box = []
            for pair in inputs:
                if pair is None:
                    per_box.append(Fraction(0))
                    continue
                x0, x1 = pair
                per_box.append(max(Fraction((x0 == r) + (x1 == r ^ alpha), 2) for r in BITS))
            accept.append(prod(per_box))
        best = max(best, min(accept))
    return best


def test_oracle_values():
    assert ot_commit_oracle(1) == HALF
    assert ot_commit_oracle(3) == Fraction(1, 4)


@pytest.mark.parametrize("n", [1, 2])
def test_ot_search_matches_oracle(ot_search, n):
    report = ot_search[n]
    assert report.violation == ot_commit_oracle(2 * n - 1)
    assert report.secure
    assert report.threshold == Fraction(1, 2 ** n)


def test_ot_commit_behaviour_count():
    # skip or one of four input pairs, nothing else to choose
    assert sum(1 for _ in commit_strategies(build_commit_ot(1))) == 5


def test_search_guard():
    with pytest.raises(GuardLimitExceeded) as err:
        search_optimal_cheat(build_commit_pr(2))
    assert err.value.size > err.value.limit
    with pytest.raises(GuardLimitExceeded):
        search_optimal_cheat(build_commit_ot(1), limit=3)


def test_pr_search_finds_full_break():
    report = search_optimal_cheat(build_commit_pr(1))
    assert report.violation == 1 and not report.secure


@pytest.mark.parametrize("builder", [build_commit_ot, build_commit_pr, build_commit_ot_simulated])
def test_honest_correctness_and_privacy(builder):
    spec = builder(1)
    assert eval_correctness(spec) == 1
    assert eval_privacy(spec) == 0


def test_privacy_detects_a_leak():
    spec = build_commit_pr(1)
    honest = honest_alice

    def leaky(spec, alpha=None):
        inner = honest(spec, alpha)

        def decide(view, tape, step, target):
            if step.label == "commit.3":
                return SendMessage((alpha,))
            return inner.decide(view, tape, step, target)

        return PartyStrategy("leaky", decide)

    assert eval_privacy(spec, leaky) == 1


@pytest.mark.parametrize("k", [1, 3, 5])
def test_delayed_attack(delayed_binding, k):
    report = delayed_binding[k]
    assert all(leaf.p_accept_0 == 1 and leaf.p_accept_1 == 1 for leaf in report.leaves)
    assert sum(leaf.leaf.weight for leaf in report.leaves) == 1
    assert report.violation == 1 and not report.secure


def test_delayed_acceptance_probability_direct():
    spec = build_commit_pr(1)
    for target in BITS:
        assert acceptance_probability(spec, delayed_alice(spec), target) == 1


def test_delayed_needs_pr_boxes_and_target():
    with pytest.raises(InapplicableStrategy):
        delayed_alice(build_commit_ot(1))
    spec = build_commit_pr(1)
    with pytest.raises(ConfigurationError):
        acceptance_probability(spec, delayed_alice(spec), None)


def test_delayed_also_breaks_simulated_ot():
    spec = build_commit_ot_simulated(1)
    report = eval_binding(spec, delayed_alice(spec), optimize_reveal=False)
    assert report.violation == 1


def coin_cheat(spec):
    # a mixture: a private coin picks which of two deterministic cheats to play
    def decide(view, tape, step, target):
        if step.kind == "sample":
            return SampleCoin(step.target) if step.target == "r0" else Skip()
        if step.kind == "input" and step.phase == "commit":
            return InputBox(0, (0, view.sampled("r0")))
        if step.kind == "input":
            return Skip()
        if step.kind == "message" and step.phase == "commit":
            return SendMessage(())
        return SendMessage((target, 0))

    return PartyStrategy("coin", decide)


def test_mixtures_never_beat_the_search(ot_search):
    spec = build_commit_ot(1)
    for alice in (honest_alice(spec), coin_cheat(spec)):
        report = eval_binding(spec, alice)
        assert report.violation <= ot_search[1].violation
    assert eval_binding(spec, coin_cheat(spec)).violation == HALF


def test_honest_alice_binding_on_pr():
    spec = build_commit_pr(1)
    report = eval_binding(spec, honest_alice(spec))
    assert report.violation == HALF and report.secure


def test_threshold_equality_counts_as_secure():
    assert BindingReport((), 1).secure
    assert BindingReport((), 3).threshold == Fraction(1, 8)


def test_security_report_modes():
    spec = build_commit_ot(1)
    exact = security_report(spec, "honest")
    assert exact.mode == "exact" and exact.holds
    sampled = security_report(spec, "search", samples=2000, seed=11)
    assert sampled.mode == "monte-carlo"
    assert sampled.correctness == 1
    with pytest.raises(ConfigurationError):
        security_report(spec, "nobody")


def test_composability_demo():
    demo = composability_demo(1)
    assert demo.pair == (HALF, Fraction(1))
    assert demo.same_schedule_as_pr and demo.same_honest_distribution_as_pr
    assert demo.ot.binding.secure and not demo.simulated.binding.secure


def test_pending_never_in_delayed_pr_commit_runs():
    spec = build_commit_pr(2)
    for t, _ in enumerate_transcripts(spec.scenario, (delayed_alice(spec).aimed(1), honest_bob(spec))):
        assert all(ev.result is not PENDING for ev in t.events)
        assert t.decision().accept
