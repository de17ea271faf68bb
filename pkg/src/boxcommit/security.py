"""Party strategies and exact correctness, privacy and binding metrics.

Binding is measured per commit leaf: Alice's complete view when the COMMIT
phase ends. For each leaf we ask how likely Bob is to accept each value of
the committed bit, given Alice's best behaviour from that point on. The
scheme is binding at level ``n_epsilon`` when no leaf lets both values
through with probability above ``2**-n_epsilon``.

Every function takes ``samples``/``seed``. With ``samples=None`` the random
tape is enumerated exactly; otherwise ``samples`` tapes are drawn with
``seed`` and all probabilities are empirical frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional

from .corrbox import BITS, ONE, ZERO
from .engine import (
    ALICE,
    BOB,
    INPUT,
    MESSAGE,
    SAMPLE,
    Decide,
    Execution,
    InputBox,
    PartyStrategy,
    SampleCoin,
    SendMessage,
    Skip,
    View,
    Weighted,
    exact_states,
    fork_apply,
    group_by_view,
    legal_actions,
    sampled_states,
    settle,
    statistical_distance,
)
from .errors import ConfigurationError, GuardLimitExceeded, InapplicableStrategy
from .protocols import (
    ProtocolSpec,
    build_commit_ot,
    build_commit_ot_simulated,
    build_commit_pr,
    simulated_alice,
    simulated_bob,
)

STRATEGY_LIMIT = 2 ** 20

__all__ = [
    "PartyStrategy",
    "honest_alice",
    "honest_bob",
    "delayed_alice",
    "eval_correctness",
    "eval_privacy",
    "eval_binding",
    "acceptance_probability",
    "search_optimal_cheat",
    "security_report",
    "composability_demo",
]


# strategies


def honest_alice(spec: ProtocolSpec, alpha: Optional[int] = None) -> PartyStrategy:
    """Alice following the protocol. ``alpha`` fixes her bit instead of sampling it."""
    if spec.base is not None:
        return simulated_alice(honest_alice(spec.base, alpha), spec)
    k = spec.k
    ot = spec.variant == "ot"

    def decide(view: View, tape, step, target):
        if step.kind == SAMPLE:
            if step.target == "alpha" and alpha is not None:
                return Skip()
            return SampleCoin(step.target)
        if step.kind == INPUT and step.phase == "reveal":
            return Skip()
        bit = alpha if alpha is not None else view.sampled("alpha")
        r = [view.sampled(f"r{i}") for i in range(k)]
        if step.kind == INPUT:
            i = step.target
            return InputBox(i, (r[i], r[i] ^ bit)) if ot else InputBox(i, (bit,))
        if step.phase == "commit":
            if ot:
                return SendMessage(())
            return SendMessage(tuple(r[i] ^ view.box_result(i) for i in range(k)))
        return SendMessage((bit, *r))

    name = "honest" if alpha is None else f"honest(alpha={alpha})"
    return PartyStrategy(name, decide)


def honest_bob(spec: ProtocolSpec) -> PartyStrategy:
    if spec.base is not None:
        return simulated_bob(honest_bob(spec.base), spec)
    rule = spec.acceptance_rule

    def decide(view: View, tape, step, target):
        if step.kind == SAMPLE:
            return SampleCoin(step.target)
        if step.kind == INPUT:
            i = step.target
            return InputBox(i, (view.sampled(f"s{i}"),))
        return rule(view).as_action()

    return PartyStrategy("honest", decide)


def delayed_alice(spec: ProtocolSpec) -> PartyStrategy:
    """Alice who leaves her PR boxes untouched until she knows what to reveal.

    COMMIT: she sends fresh random bits ``m_i`` (drawn into the ``r`` slots)
    and inputs nothing. REVEAL: she feeds ``x = target`` into each box, reads
    ``a_i`` and opens with ``r_i = a_i ^ m_i``.
    """
    if not spec.uses_pr_boxes:
        raise InapplicableStrategy(
            f"{spec.name} uses OT boxes; a delayed query would only return Pending"
        )
    k = spec.k

    def decide(view: View, tape, step, target):
        if step.kind == SAMPLE:
            return Skip() if step.target == "alpha" else SampleCoin(step.target)
        if step.phase == "reveal" and target is None:
            raise ConfigurationError("delayed Alice needs a reveal target")
        if step.kind == INPUT:
            return Skip() if step.phase == "commit" else InputBox(step.target, (target,))
        m = [view.sampled(f"r{i}") for i in range(k)]
        if step.phase == "commit":
            return SendMessage(tuple(m))
        return SendMessage((target, *(view.box_result(i) ^ m[i] for i in range(k))))

    return PartyStrategy("delayed", decide)


# reports


@dataclass(frozen=True)
class CommitLeaf:
    """Alice's information state when COMMIT ends."""

    view: View
    weight: Fraction

    @property
    def alice_state(self) -> dict:
        state = {}
        for ev in self.view.events:
            if ev.actor != ALICE:
                continue
            if isinstance(ev.action, SampleCoin):
                state[ev.action.slot] = ev.result
            elif isinstance(ev.action, InputBox):
                state[f"box{ev.action.box}"] = (ev.action.bits, ev.result)
            elif isinstance(ev.action, SendMessage):
                state[f"sent@{ev.label}"] = ev.action.bits
        return state


@dataclass(frozen=True)
class LeafBinding:
    leaf: CommitLeaf
    p_accept_0: Fraction
    p_accept_1: Fraction

    @property
    def both(self) -> Fraction:
        return min(self.p_accept_0, self.p_accept_1)


@dataclass(frozen=True)
class BindingReport:
    leaves: tuple[LeafBinding, ...]
    n_epsilon: int
    strategy: tuple[str, ...] = ()
    family_size: Optional[int] = None
    commit_strategies: Optional[int] = None

    @property
    def threshold(self) -> Fraction:
        return Fraction(1, 2 ** self.n_epsilon)

    @property
    def violation(self) -> Fraction:
        return max((leaf.both for leaf in self.leaves), default=ZERO)

    @property
    def secure(self) -> bool:
        # the threshold is strict: exactly 2**-n still counts as binding
        return self.violation <= self.threshold


@dataclass(frozen=True)
class SecurityReport:
    protocol: str
    n_epsilon: int
    boxes: int
    adversary: str
    correctness: Fraction
    privacy_distance: Fraction
    binding: BindingReport
    mode: str = "exact"

    @property
    def holds(self) -> bool:
        return self.correctness == 1 and self.privacy_distance == 0 and self.binding.secure


# evaluation


def _root(spec: ProtocolSpec, samples: Optional[int], seed: int) -> Weighted:
    if samples is None:
        return exact_states(spec.scenario)
    return sampled_states(spec.scenario, samples, seed)


def _decision(ex: Execution) -> Optional[Decide]:
    for ev in reversed(ex.events):
        if isinstance(ev.action, Decide):
            return ev.action
    return None


def _accepts(ex: Execution, target: int) -> bool:
    d = _decision(ex)
    return d is not None and d.accept and d.revealed == target


def eval_correctness(spec: ProtocolSpec, samples: Optional[int] = None, seed: int = 0) -> Fraction:
    """P(Bob accepts and learns Alice's bit) when both are honest."""
    states = settle(_root(spec, samples, seed), (honest_alice(spec), honest_bob(spec)))
    return sum(
        (w for ex, w in states if _accepts(ex, ex.view(ALICE).sampled("alpha"))), ZERO
    )


def eval_privacy(
    spec: ProtocolSpec,
    alice_factory: Callable = honest_alice,
    samples: Optional[int] = None,
    seed: int = 0,
) -> Fraction:
    """Statistical distance between Bob's COMMIT views for alpha = 0 and 1."""
    bob = honest_bob(spec)
    cut = spec.scenario.cutoff("commit")
    dists = []
    for alpha in BITS:
        alice = alice_factory(spec, alpha=alpha)
        dist: dict = {}
        for ex, w in settle(_root(spec, samples, seed), (alice, bob), cut):
            key = ex.view_key(BOB)
            dist[key] = dist.get(key, ZERO) + w
        dists.append(dist)
    return statistical_distance(dists[0], dists[1])


def acceptance_probability(
    spec: ProtocolSpec,
    alice: PartyStrategy,
    target: int,
    samples: Optional[int] = None,
    seed: int = 0,
) -> Fraction:
    """P(Bob accepts ``target``) when ``alice`` plays aimed at ``target``."""
    states = settle(_root(spec, samples, seed), (alice.aimed(target), honest_bob(spec)))
    return sum((w for ex, w in states if _accepts(ex, target)), ZERO)


def _copies(states: Weighted) -> Weighted:
    return [(ex.copy(), w) for ex, w in states]


def _search_actions(ex: Execution) -> list:
    # deterministic family: coin flips are left to mixtures
    return [a for a in legal_actions(ex) if not isinstance(a, SampleCoin)]


def _bob_moves(states: Weighted, bob: PartyStrategy, stop: int) -> Weighted:
    out = []
    for ex, w in states:
        if ex.pos < stop and ex.step.actor == BOB:
            forked = fork_apply(ex, ex.next_action((None, bob)))
            out.extend(_bob_moves([(e, w if f is ONE else w * f) for e, f in forked], bob, stop))
        else:
            out.append((ex, w))
    return out


def _successors(group: Weighted, action, bob: PartyStrategy, stop: int, owned: bool = False) -> list[Weighted]:
    moved = []
    for ex, w in group:
        forked = fork_apply(ex if owned else ex.copy(), action)
        moved.extend((e, w if f is ONE else w * f) for e, f in forked)
    return group_by_view(_bob_moves(moved, bob, stop), ALICE)


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, n: int) -> None:
        self.used += n
        if self.used > self.limit:
            raise GuardLimitExceeded("cheating-strategy family", self.used, self.limit)


@dataclass
class _RevealValue:
    mass: tuple[Fraction, Fraction]
    count: int


def _best_reveal(group: Weighted, bob: PartyStrategy, budget: Optional[_Budget]) -> _RevealValue:
    """Best acceptance mass for each target over Alice's reveal behaviours.

    Alice's reveal actions may depend only on her view, so the optimum is
    found by maximising at each of her information sets. ``count`` is the
    number of deterministic reveal behaviours below this point.
    """
    return _reveal_walk(_copies(group), bob, budget)


def _reveal_walk(group: Weighted, bob: PartyStrategy, budget: Optional[_Budget]) -> _RevealValue:
    # `group` is owned: the last branch may consume it in place
    ex0 = group[0][0]
    if ex0.pos >= len(ex0.scenario.steps):
        return _RevealValue(
            tuple(sum((w for ex, w in group if _accepts(ex, t)), ZERO) for t in BITS), 1
        )
    if ex0.step.actor == BOB:
        groups = group_by_view(_bob_moves(group, bob, ex0.pos + 1), ALICE)
        return _combine([_reveal_walk(g, bob, budget) for g in groups])

    actions = _search_actions(ex0)
    best = [ZERO, ZERO]
    count = 0
    for n, action in enumerate(actions):
        last = n == len(actions) - 1
        succ = _successors(group, action, bob, ex0.pos + 1, owned=last)
        value = _combine([_reveal_walk(g, bob, budget) for g in succ])
        best = [max(b, v) for b, v in zip(best, value.mass)]
        count += value.count
        if budget is not None and count > budget.limit:
            raise GuardLimitExceeded("cheating-strategy family", count, budget.limit)
    return _RevealValue(tuple(best), count)


def _combine(values: list[_RevealValue]) -> _RevealValue:
    mass = [ZERO, ZERO]
    count = 1
    for v in values:
        mass = [m + x for m, x in zip(mass, v.mass)]
        count *= v.count
    return _RevealValue(tuple(mass), count)


def _leaf_binding(group: Weighted, mass: tuple) -> LeafBinding:
    weight = sum((w for _, w in group), ZERO)
    leaf = CommitLeaf(group[0][0].view(ALICE), weight)
    return LeafBinding(leaf, mass[0] / weight, mass[1] / weight)


def eval_binding(
    spec: ProtocolSpec,
    alice: PartyStrategy,
    optimize_reveal: bool = True,
    samples: Optional[int] = None,
    seed: int = 0,
) -> BindingReport:
    """Per-leaf acceptance of both bit values against a given Alice.

    With ``optimize_reveal`` Alice's own REVEAL behaviour is replaced by the
    best possible one at each leaf; otherwise she plays her strategy aimed
    at each target in turn.
    """
    bob = honest_bob(spec)
    cut = spec.scenario.cutoff("commit")
    states = settle(_root(spec, samples, seed), (alice, bob), cut)
    leaves = []
    for group in group_by_view(states, ALICE):
        if optimize_reveal:
            mass = _best_reveal(group, bob, None).mass
        else:
            mass = tuple(
                sum(
                    (w for ex, w in settle(_copies(group), (alice.aimed(t), bob)) if _accepts(ex, t)),
                    ZERO,
                )
                for t in BITS
            )
        leaves.append(_leaf_binding(group, mass))
    return BindingReport(tuple(leaves), spec.n_epsilon)


def commit_strategies(
    spec: ProtocolSpec, samples: Optional[int] = None, seed: int = 0
) -> Iterator[tuple[tuple, tuple[Weighted, ...]]]:
    """Every deterministic, coin-free COMMIT behaviour of Alice.

    Yields ``(choices, leaves)``: the (view, step, action) decisions taken at
    each reachable information set, and the state groups of the leaves.
    """
    bob = honest_bob(spec)
    cut = spec.scenario.cutoff("commit")
    start = group_by_view(_bob_moves(_root(spec, samples, seed), bob, cut), ALICE)
    yield from _commit_walk(start, bob, cut)


def _commit_walk(pending: list[Weighted], bob, stop) -> Iterator:
    if not pending:
        yield (), ()
        return
    head, rest = pending[0], pending[1:]
    ex0 = head[0][0]
    if ex0.pos >= stop:
        for choices, leaves in _commit_walk(rest, bob, stop):
            yield choices, (head,) + leaves
        return
    for action in _search_actions(ex0):
        succ = _successors(head, action, bob, stop)
        for choices, leaves in _commit_walk(succ + rest, bob, stop):
            yield ((ex0.view(ALICE), ex0.step, action),) + choices, leaves


def _describe(choice) -> str:
    view, step, action = choice
    seen = [
        f"box{ev.action.box}->{ev.result}"
        for ev in view.events
        if ev.actor == ALICE and isinstance(ev.action, InputBox) and ev.result in BITS
    ]
    given = f" given {','.join(seen)}" if seen else ""
    return f"{step.label} {step.kind}[{step.target}]{given}: {action!r}"


def search_optimal_cheat(
    spec: ProtocolSpec,
    limit: int = STRATEGY_LIMIT,
    samples: Optional[int] = None,
    seed: int = 0,
) -> BindingReport:
    """Worst-case binding over every deterministic cheating Alice.

    COMMIT behaviours are enumerated one by one; at each of their leaves the
    best REVEAL behaviour is found per target. The family size counted
    against ``limit`` is the number of (commit behaviour, leaf, reveal
    behaviour) combinations this covers.
    """
    bob = honest_bob(spec)
    budget = _Budget(limit)
    cache: dict = {}
    best: Optional[BindingReport] = None
    n_commit = 0
    for choices, groups in commit_strategies(spec, samples, seed):
        n_commit += 1
        leaves = []
        for group in groups:
            key = group[0][0].view_key(ALICE)
            if key not in cache:
                value = _best_reveal(group, bob, budget)
                cache[key] = (_leaf_binding(group, value.mass), value.count)
            leaf, count = cache[key]
            budget.spend(count)
            leaves.append(leaf)
        report = BindingReport(
            tuple(leaves), spec.n_epsilon, tuple(_describe(c) for c in choices)
        )
        if best is None or report.violation > best.violation:
            best = report
    return BindingReport(
        best.leaves, spec.n_epsilon, best.strategy, budget.used, n_commit
    )


ADVERSARIES = ("honest", "delayed", "search")


def security_report(
    spec: ProtocolSpec,
    adversary: str = "search",
    samples: Optional[int] = None,
    seed: int = 0,
) -> SecurityReport:
    """Correctness, privacy and binding of ``spec`` against ``adversary``.

    ``honest`` commits honestly and then reveals as well as it can,
    ``delayed`` is the postponed-input attack played as written, and
    ``search`` is the exhaustive optimum.
    """
    if adversary == "honest":
        binding = eval_binding(spec, honest_alice(spec), True, samples, seed)
    elif adversary == "delayed":
        binding = eval_binding(spec, delayed_alice(spec), False, samples, seed)
    elif adversary == "search":
        binding = search_optimal_cheat(spec, samples=samples, seed=seed)
    else:
        raise ConfigurationError(f"unknown adversary {adversary!r}")
    return SecurityReport(
        protocol=spec.name,
        n_epsilon=spec.n_epsilon,
        boxes=spec.k,
        adversary=adversary,
        correctness=eval_correctness(spec, samples, seed),
        privacy_distance=eval_privacy(spec, samples=samples, seed=seed),
        binding=binding,
        mode="exact" if samples is None else "monte-carlo",
    )


def honest_distribution(spec: ProtocolSpec) -> dict:
    states = settle(exact_states(spec.scenario), (honest_alice(spec), honest_bob(spec)))
    dist: dict = {}
    for ex, w in states:
        key = tuple(ex.events)
        dist[key] = dist.get(key, ZERO) + w
    return dist


@dataclass(frozen=True)
class ComposabilityDemo:
    ot: SecurityReport
    simulated: SecurityReport
    same_schedule_as_pr: bool
    same_honest_distribution_as_pr: bool

    @property
    def pair(self) -> tuple[Fraction, Fraction]:
        return self.ot.binding.violation, self.simulated.binding.violation


def composability_demo(n_epsilon: int = 1) -> ComposabilityDemo:
    """OT commitment versus the same protocol over simulated OT boxes."""
    ot = build_commit_ot(n_epsilon)
    sim = build_commit_ot_simulated(n_epsilon)
    pr = build_commit_pr(n_epsilon)
    return ComposabilityDemo(
        ot=security_report(ot, "search"),
        simulated=security_report(sim, "delayed"),
        same_schedule_as_pr=sim.scenario.steps == pr.scenario.steps
        and sim.scenario.boxes == pr.scenario.boxes,
        same_honest_distribution_as_pr=honest_distribution(sim) == honest_distribution(pr),
    )
