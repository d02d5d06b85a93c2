"""Symmetric two-player games and the win-stay/lose-shift protocol derivation.

A game is a square payoff matrix over named strategies plus a threshold.
All payoffs are exact rationals: threshold comparisons and argmax sets must
be exact, never floating point.  An interaction rule set falls out of the
threshold reading of win-stay/lose-shift: an agent scoring at least the
threshold keeps its strategy, one scoring below it switches to a best
response among its other strategies.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from fractions import Fraction

from .core import Pair, Protocol, ProtocolError, complete

ALL_TIES = "all-ties"
LOWEST_INDEX = "lowest-index"

Rational = Fraction | int | str


@dataclass(frozen=True)
class Game:
    """Symmetric game: payoff[x][y] is the row player's score for x against y."""

    name: str
    strategies: tuple[str, ...]
    payoff: tuple[tuple[Fraction, ...], ...]
    threshold: Fraction

    def index(self, strategy: str) -> int:
        try:
            return self.strategies.index(strategy)
        except ValueError:
            raise ProtocolError(f"unknown strategy {strategy!r}") from None

    @property
    def size(self) -> int:
        return len(self.strategies)


def make_game(
    name: str,
    strategies: Iterable[str],
    payoff: Iterable[Iterable[Rational]],
    threshold: Rational,
) -> Game:
    strats = tuple(strategies)
    if len(set(strats)) != len(strats) or not strats:
        raise ProtocolError(f"strategy names must be non-empty and unique: {strats}")
    rows = tuple(tuple(Fraction(x) for x in row) for row in payoff)
    if len(rows) != len(strats) or any(len(r) != len(strats) for r in rows):
        raise ProtocolError(
            f"payoff matrix must be {len(strats)}x{len(strats)} for {name!r}"
        )
    return Game(name=name, strategies=strats, payoff=rows, threshold=Fraction(threshold))


def _best_response_idx(game: Game, y: int, excluded: int | None = None) -> list[int]:
    candidates = [x for x in range(game.size) if x != excluded]
    if not candidates:
        raise ProtocolError(
            f"no strategy left to shift to in {game.name!r}: "
            f"cannot exclude {game.strategies[excluded]!r} from a 1-strategy game"
        )
    best = max(game.payoff[x][y] for x in candidates)
    return [x for x in candidates if game.payoff[x][y] == best]


def best_response(game: Game, y: str) -> set[str]:
    """Strategies maximizing the row payoff against y (the argmax of column y)."""
    return {game.strategies[x] for x in _best_response_idx(game, game.index(y))}


def best_response_excluding(game: Game, y: str, excluded: str) -> set[str]:
    """Argmax of column y restricted to strategies other than `excluded`."""
    return {
        game.strategies[x]
        for x in _best_response_idx(game, game.index(y), game.index(excluded))
    }


def is_nash(game: Game, x: str, y: str) -> bool:
    """True iff x and y are mutual best responses."""
    xi, yi = game.index(x), game.index(y)
    return xi in _best_response_idx(game, yi) and yi in _best_response_idx(game, xi)


def is_win(game: Game, q1: str, q2: str) -> bool:
    """True iff playing q1 against q2 meets the threshold (the agent stays)."""
    return game.payoff[game.index(q1)][game.index(q2)] >= game.threshold


def _agent_moves(game: Game, mode: str) -> dict[Pair, list[int]]:
    """Per-agent successor choices for the row agent of each ordered pair."""
    moves: dict[Pair, list[int]] = {}
    for q1 in range(game.size):
        for q2 in range(game.size):
            if game.payoff[q1][q2] >= game.threshold:
                choice = [q1]
            else:
                choice = sorted(_best_response_idx(game, q2, excluded=q1))
            if mode == LOWEST_INDEX:
                choice = [choice[0]]
            moves[(q1, q2)] = choice
    return moves


def derive_protocol(game: Game, mode: str = ALL_TIES) -> Protocol:
    """Protocol induced by threshold win-stay/lose-shift play of the game.

    Each agent independently stays on a payoff at or above the threshold and
    otherwise moves into its best-response set excluding its current strategy;
    the joint successor set is the cross product of the two per-agent sets.
    Mode `lowest-index` collapses every per-agent set to its lowest-index
    member, which makes the result deterministic.  The derived protocol is
    bare dynamics: no input or output attachment.
    """
    if mode not in (ALL_TIES, LOWEST_INDEX):
        raise ProtocolError(f"unknown tie mode {mode!r}")
    moves = _agent_moves(game, mode)
    raw: dict[Pair, set[Pair]] = {}
    for q1 in range(game.size):
        for q2 in range(game.size):
            raw[(q1, q2)] = {
                (a, b) for a in moves[(q1, q2)] for b in moves[(q2, q1)]
            }
    return Protocol(
        name=f"{game.name}-protocol",
        states=game.strategies,
        rules=complete(raw, game.size),
    )


@dataclass(frozen=True)
class PrisonerParams:
    """Prisoner's dilemma payoffs: temptation, reward, punishment, sucker."""

    t: Fraction
    r: Fraction
    p: Fraction
    s: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", Fraction(self.t))
        object.__setattr__(self, "r", Fraction(self.r))
        object.__setattr__(self, "p", Fraction(self.p))
        object.__setattr__(self, "s", Fraction(self.s))
        if not (self.t > self.r > self.p > self.s):
            raise ProtocolError(f"need T > R > P > S, got {self}")
        if not (2 * self.r > self.t + self.s):
            raise ProtocolError(f"need 2R > T + S, got {self}")


def prisoners_dilemma(params: PrisonerParams, threshold: Rational | None = None) -> Game:
    """The symmetric game with matrix [[R, S], [T, P]] over strategies C, D.

    The default threshold is the midpoint of P and R: any threshold in
    (P, R] makes mutual cooperation a win and mutual defection a loss,
    which is the win-stay/lose-shift reading of the payoffs.
    """
    if threshold is None:
        threshold = Fraction(params.p + params.r, 2)
    return make_game(
        "prisoners-dilemma",
        ("C", "D"),
        ((params.r, params.s), (params.t, params.p)),
        threshold,
    )


def affine_rescale(game: Game, scale: Rational, offset: Rational) -> Game:
    """Apply x -> scale*x + offset (scale > 0) to all payoffs and the threshold."""
    a, b = Fraction(scale), Fraction(offset)
    if a <= 0:
        raise ProtocolError(f"scale must be positive, got {a}")
    return Game(
        name=game.name,
        strategies=game.strategies,
        payoff=tuple(tuple(a * x + b for x in row) for row in game.payoff),
        threshold=a * game.threshold + b,
    )
