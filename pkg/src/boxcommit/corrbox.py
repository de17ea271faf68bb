"""Correlation box models and their static conditional distributions.

Every box here has binary inputs and outputs, except the OT box whose
Alice side takes a pair of bits. A box's static behaviour is captured by a
:class:`JointConditional`, a table of exact probabilities ``P(a, b | x, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Mapping, Union

from .errors import ValidationError

BITS = (0, 1)
OUTCOMES = tuple(product(BITS, BITS))
OT_INPUTS = tuple(product(BITS, BITS))

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


def pr_response(x: int, y: int, lam: int) -> tuple[int, int]:
    """Outputs of a PR box driven by the shared tape bit ``lam``.

    ``a = lam`` and ``b = lam ^ (x & y)``, so ``a ^ b == x & y`` always.
    """
    return lam, lam ^ (x & y)


def ot_response(x0: int, x1: int, c: int) -> int:
    """Bob's OT output ``x0 ^ c(x0 ^ x1)``: ``x0`` when ``c == 0``, else ``x1``."""
    return x0 ^ (c & (x0 ^ x1))


class JointConditional:
    """Exact conditional distribution ``P(a, b | x, y)`` over binary outputs.

    ``table`` maps each input pair ``(x, y)`` to a mapping from output pairs
    ``(a, b)`` to probabilities. Missing outcomes count as probability zero.
    Alice's input ``x`` is usually a bit but may be any hashable value (the
    OT box uses a pair of bits).
    """

    __slots__ = ("_table",)

    def __init__(self, table: Mapping):
        rows = {}
        for xy, row in table.items():
            rows[tuple(xy)] = {
                tuple(ab): Fraction(p) for ab, p in row.items()
            }
        self._table = rows
        self.validate()

    def validate(self) -> None:
        if not self._table:
            raise ValidationError("empty conditional table")
        for xy, row in self._table.items():
            for ab, p in row.items():
                if ab not in OUTCOMES:
                    raise ValidationError(f"outcome {ab} is not a pair of bits")
                if p < 0:
                    raise ValidationError(f"negative probability at {xy}, {ab}")
            total = sum(row.values(), ZERO)
            if total != 1:
                raise ValidationError(f"row {xy} sums to {total}, not 1")
        alice = {x for x, _ in self._table}
        bob = {y for _, y in self._table}
        if len(self._table) != len(alice) * len(bob):
            raise ValidationError("table does not cover every input pair")

    @property
    def alice_inputs(self) -> tuple:
        return tuple(sorted({x for x, _ in self._table}))

    @property
    def bob_inputs(self) -> tuple:
        return tuple(sorted({y for _, y in self._table}))

    def p(self, a: int, b: int, x, y) -> Fraction:
        return self._table[(x, y)].get((a, b), ZERO)

    def row(self, x, y) -> dict:
        return {ab: self.p(ab[0], ab[1], x, y) for ab in OUTCOMES}

    def marginal_alice(self, a: int, x, y) -> Fraction:
        return self.p(a, 0, x, y) + self.p(a, 1, x, y)

    def marginal_bob(self, b: int, x, y) -> Fraction:
        return self.p(0, b, x, y) + self.p(1, b, x, y)

    def as_dict(self) -> dict:
        return {xy: self.row(*xy) for xy in sorted(self._table)}

    def __eq__(self, other):
        if not isinstance(other, JointConditional):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def __hash__(self):
        return hash(tuple((xy, tuple(r.items())) for xy, r in self.as_dict().items()))

    def __repr__(self):
        return f"JointConditional({self.as_dict()!r})"


@dataclass(frozen=True)
class PRBox:
    """The Popescu-Rohrlich box: ``a ^ b == x & y`` with uniform outcomes."""


@dataclass(frozen=True)
class OTBox:
    """One-out-of-two oblivious transfer: Alice inputs ``(x0, x1)``, Bob ``c``."""


@dataclass(frozen=True)
class LocalBox:
    """Deterministic local box given by truth tables ``fa`` and ``fb``.

    ``fa[x]`` is Alice's output on input ``x``; likewise ``fb[y]`` for Bob.
    """

    fa: tuple[int, int]
    fb: tuple[int, int]

    def __post_init__(self):
        for f in (self.fa, self.fb):
            if len(f) != 2 or any(v not in BITS for v in f):
                raise ValidationError(f"truth table {f!r} is not a function bit -> bit")

    @classmethod
    def from_functions(cls, fa, fb) -> LocalBox:
        return cls(tuple(fa(v) for v in BITS), tuple(fb(v) for v in BITS))


@dataclass(frozen=True)
class GeneralBox:
    table: JointConditional


BoxKind = Union[PRBox, OTBox, LocalBox, GeneralBox]

PR = PRBox()
OT = OTBox()


def all_local_boxes() -> list[LocalBox]:
    """The 16 deterministic local boxes with binary inputs and outputs."""
    tables = list(product(BITS, BITS))
    return [LocalBox(fa, fb) for fa in tables for fb in tables]


def uniform_box() -> GeneralBox:
    row = {ab: Fraction(1, 4) for ab in OUTCOMES}
    return GeneralBox(JointConditional({(x, y): row for x in BITS for y in BITS}))


def as_conditional(kind: BoxKind) -> JointConditional:
    """Static table of a box, averaging over its internal randomness.

    For the OT box Alice's input is the pair ``(x0, x1)`` and her output is
    the constant 0, since she learns nothing from the box.
    """
    if isinstance(kind, PRBox):
        table = {}
        for x, y in product(BITS, BITS):
            row = {ab: ZERO for ab in OUTCOMES}
            for lam in BITS:
                row[pr_response(x, y, lam)] += HALF
            table[(x, y)] = row
        return JointConditional(table)
    if isinstance(kind, OTBox):
        table = {}
        for (x0, x1), c in product(OT_INPUTS, BITS):
            table[((x0, x1), c)] = {(0, ot_response(x0, x1, c)): ONE}
        return JointConditional(table)
    if isinstance(kind, LocalBox):
        return JointConditional({
            (x, y): {(kind.fa[x], kind.fb[y]): ONE}
            for x in BITS for y in BITS
        })
    if isinstance(kind, GeneralBox):
        return kind.table
    raise TypeError(f"not a box kind: {kind!r}")


@dataclass(frozen=True)
class NoSignallingReport:
    a_to_b_ok: bool
    b_to_a_ok: bool
    max_marginal_gap: Fraction

    @property
    def ok(self) -> bool:
        return self.a_to_b_ok and self.b_to_a_ok


def _coerce(d) -> JointConditional:
    if isinstance(d, JointConditional):
        d.validate()
        return d
    return JointConditional(d)


def check_no_signalling(d) -> NoSignallingReport:
    """Exact test that neither party's marginal depends on the peer's input.

    ``a_to_b_ok`` means Alice cannot signal to Bob: Bob's marginal
    ``P(b | x, y)`` is the same for every ``x``.
    """
    d = _coerce(d)
    xs, ys = d.alice_inputs, d.bob_inputs

    gap_ab = ZERO
    for y, b in product(ys, BITS):
        values = [d.marginal_bob(b, x, y) for x in xs]
        gap_ab = max(gap_ab, max(values) - min(values))

    gap_ba = ZERO
    for x, a in product(xs, BITS):
        values = [d.marginal_alice(a, x, y) for y in ys]
        gap_ba = max(gap_ba, max(values) - min(values))

    return NoSignallingReport(gap_ab == 0, gap_ba == 0, max(gap_ab, gap_ba))


def chsh_win_probability(d) -> Fraction:
    """Average over uniform ``(x, y)`` of ``P(a ^ b == x & y)``."""
    d = _coerce(d)
    if d.alice_inputs != BITS or d.bob_inputs != BITS:
        raise ValidationError("the CHSH game needs binary inputs on both sides")
    total = ZERO
    for x, y in product(BITS, BITS):
        total += sum(
            (d.p(a, b, x, y) for a, b in OUTCOMES if a ^ b == x & y), ZERO
        )
    return total / 4


def best_local_chsh() -> Fraction:
    """Largest CHSH win probability over all deterministic local boxes."""
    return max(chsh_win_probability(as_conditional(box)) for box in all_local_boxes())
