"""Finite-alphabet strings and exactly evaluable semimeasure environments.

Everything here is exact rational arithmetic: an environment maps finite
strings to Fractions in [0, 1], satisfying the node inequality
nu(x) >= sum_a nu(xa), with equality at every node for proper measures.
No floating point enters evaluation, validation, enumeration or sampling.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .errors import (
    DepthExceededError,
    NotAMeasureError,
    SemilabError,
    UndefinedPosteriorError,
)

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("alphabet size must be >= 2")

    @property
    def symbols(self) -> range:
        return range(self.size)


BINARY = Alphabet(2)


@dataclass(frozen=True, order=False)
class FiniteString:
    """A string of symbol indices over a fixed alphabet.

    Lexicographic order is symbol-wise tuple order; for equal-length strings
    this is the "<" used by the leftmost-random construction.
    """

    alphabet: Alphabet
    symbols: tuple[int, ...]

    def __post_init__(self):
        for s in self.symbols:
            if not 0 <= s < self.alphabet.size:
                raise ValueError(f"symbol {s} outside alphabet of size {self.alphabet.size}")

    @classmethod
    def parse(cls, text: str, alphabet: Alphabet = BINARY) -> "FiniteString":
        return cls(alphabet, tuple(int(c) for c in text))

    @classmethod
    def empty(cls, alphabet: Alphabet = BINARY) -> "FiniteString":
        return cls(alphabet, ())

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __lt__(self, other: "FiniteString") -> bool:
        return self.symbols < other.symbols

    def __le__(self, other: "FiniteString") -> bool:
        return self.symbols <= other.symbols

    def append(self, a: int) -> "FiniteString":
        return FiniteString(self.alphabet, self.symbols + (a,))

    def prefix(self, n: int) -> "FiniteString":
        return FiniteString(self.alphabet, self.symbols[:n])

    def __str__(self) -> str:
        return "".join(str(s) for s in self.symbols) if self.symbols else "<empty>"


MEASURE = "measure"
STRICT_SEMIMEASURE = "strict-semimeasure"


class Environment:
    """An exactly evaluable semimeasure over a finite alphabet."""

    alphabet: Alphabet
    declared_class: str

    #: depth beyond which evaluation raises DepthExceededError; None = unbounded
    max_depth: Optional[int] = None

    def _mass(self, symbols: tuple[int, ...]) -> Fraction:
        raise NotImplementedError

    def eval(self, x: FiniteString) -> Fraction:
        if x.alphabet.size != self.alphabet.size:
            raise SemilabError("string alphabet does not match environment alphabet")
        return self._mass(x.symbols)

    def posterior(self, x: FiniteString) -> tuple[Fraction, ...]:
        m = self.eval(x)
        if m == 0:
            raise UndefinedPosteriorError(f"zero mass at {x}")
        return tuple(self._mass(x.symbols + (a,)) / m for a in self.alphabet.symbols)

    def cursor(self) -> "EnvCursor":
        return EnvCursor(self)

    def spec(self) -> dict:
        """JSON-able description that round-trips through the spec parser."""
        raise NotImplementedError

    def zero_step_factor_bound(self, prefix: tuple[int, ...]) -> Optional[Fraction]:
        """Upper bound on sup_k nu(prefix 0^{k+1}) / nu(prefix 0^k), or None.

        Returns None when no bound below 1 can be certified.  A dead
        environment (zero mass at the prefix) stays dead, bound 0.
        """
        if self._mass(prefix) == 0:
            return ZERO
        return None


class EnvCursor:
    """Stateful walker exposing one posterior row at a time.

    The generic implementation re-evaluates masses; product-form environments
    override for O(1) steps.
    """

    def __init__(self, env: Environment):
        self._env = env
        self._symbols: tuple[int, ...] = ()
        self._mass = env._mass(())

    @property
    def mass(self) -> Fraction:
        return self._mass

    def row(self) -> tuple[Fraction, ...]:
        if self._mass == 0:
            raise UndefinedPosteriorError("zero mass at cursor position")
        return tuple(
            self._env._mass(self._symbols + (a,)) / self._mass
            for a in self._env.alphabet.symbols
        )

    def step(self, a: int) -> None:
        self._symbols = self._symbols + (a,)
        self._mass = self._env._mass(self._symbols)

    def clone(self) -> "EnvCursor":
        new = object.__new__(type(self))
        new.__dict__.update(self.__dict__)
        return new


class _IIDCursor(EnvCursor):
    def __init__(self, env: Environment, row: tuple[Fraction, ...]):
        super().__init__(env)
        self._row = row

    def row(self) -> tuple[Fraction, ...]:
        if self._mass == 0:
            raise UndefinedPosteriorError("zero mass at cursor position")
        return self._row

    def step(self, a: int) -> None:
        self._symbols = self._symbols + (a,)
        self._mass = self._mass * self._row[a]


class CategoricalIIDEnv(Environment):
    """I.i.d. draws from a fixed categorical distribution."""

    def __init__(self, probs: Sequence[Fraction]):
        probs = tuple(Fraction(p) for p in probs)
        if len(probs) < 2:
            raise ValueError("need at least two symbols")
        if any(p < 0 or p > 1 for p in probs) or sum(probs) != 1:
            raise ValueError("probabilities must be in [0,1] and sum to 1")
        self.probs = probs
        self.alphabet = Alphabet(len(probs))
        self.declared_class = MEASURE

    def _mass(self, symbols: tuple[int, ...]) -> Fraction:
        m = ONE
        for s in symbols:
            m *= self.probs[s]
            if m == 0:
                return ZERO
        return m

    def cursor(self) -> EnvCursor:
        return _IIDCursor(self, self.probs)

    def spec(self) -> dict:
        return {"kind": "categorical", "probs": [_frac_str(p) for p in self.probs]}

    def zero_step_factor_bound(self, prefix):
        if self._mass(prefix) == 0:
            return ZERO
        return self.probs[0]


class BernoulliEnv(CategoricalIIDEnv):
    """Binary i.i.d. environment; p is the probability of symbol 1."""

    def __init__(self, p: Fraction):
        p = Fraction(p)
        super().__init__((1 - p, p))
        self.p = p

    def spec(self) -> dict:
        return {"kind": "bernoulli", "p": _frac_str(self.p)}


def uniform_measure(alphabet: Alphabet = BINARY) -> CategoricalIIDEnv:
    """The uniform measure lambda, lambda(x) = |X|^{-len(x)}."""
    return CategoricalIIDEnv([Fraction(1, alphabet.size)] * alphabet.size)


class MarkovEnv(Environment):
    """Finite-order Markov chain with exact rational transition rows.

    ``transitions`` maps a context tuple (the last ``order`` symbols, shorter
    near the start of the string) to a probability row.
    """

    def __init__(self, order: int, transitions: dict[tuple[int, ...], Sequence[Fraction]],
                 alphabet: Alphabet = BINARY):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.alphabet = alphabet
        self.transitions = {
            tuple(k): tuple(Fraction(p) for p in v) for k, v in transitions.items()
        }
        for ctx, row in self.transitions.items():
            if len(row) != alphabet.size or any(p < 0 for p in row) or sum(row) != 1:
                raise ValueError(f"invalid transition row at context {ctx}")
        self.declared_class = MEASURE

    def _row(self, past: tuple[int, ...]) -> tuple[Fraction, ...]:
        ctx = past[-self.order:] if len(past) >= self.order else past
        try:
            return self.transitions[ctx]
        except KeyError:
            raise SemilabError(f"missing transition row for context {ctx}") from None

    def _mass(self, symbols: tuple[int, ...]) -> Fraction:
        m = ONE
        for t, s in enumerate(symbols):
            m *= self._row(symbols[:t])[s]
            if m == 0:
                return ZERO
        return m

    def spec(self) -> dict:
        return {
            "kind": "markov",
            "order": self.order,
            "alphabet_size": self.alphabet.size,
            "transitions": {
                "".join(map(str, k)): [_frac_str(p) for p in v]
                for k, v in self.transitions.items()
            },
        }

    def zero_step_factor_bound(self, prefix):
        if self._mass(prefix) == 0:
            return ZERO
        # contexts on the all-zeros continuation stabilize at 0^order after
        # ``order`` steps; take the max zero-transition over the whole walk
        bound = ZERO
        past = prefix
        for _ in range(self.order + 1):
            bound = max(bound, self._row(past)[0])
            past = past + (0,)
        return bound


class DeterministicEnv(Environment):
    """Point mass on an eventually periodic infinite target sequence."""

    def __init__(self, prefix: Sequence[int], period: Sequence[int],
                 alphabet: Alphabet = BINARY):
        self.target_prefix = tuple(prefix)
        self.target_period = tuple(period)
        if not self.target_period:
            raise ValueError("period must be nonempty")
        self.alphabet = alphabet
        for s in self.target_prefix + self.target_period:
            if not 0 <= s < alphabet.size:
                raise ValueError("target symbol outside alphabet")
        self.declared_class = MEASURE

    def target_symbol(self, i: int) -> int:
        if i < len(self.target_prefix):
            return self.target_prefix[i]
        return self.target_period[(i - len(self.target_prefix)) % len(self.target_period)]

    def _mass(self, symbols: tuple[int, ...]) -> Fraction:
        for i, s in enumerate(symbols):
            if s != self.target_symbol(i):
                return ZERO
        return ONE

    def spec(self) -> dict:
        return {
            "kind": "deterministic",
            "prefix": "".join(map(str, self.target_prefix)),
            "period": "".join(map(str, self.target_period)),
        }

    def zero_step_factor_bound(self, prefix):
        if self._mass(prefix) == 0:
            return ZERO
        # appending 0 where the target demands 1 kills the mass immediately;
        # a target continuing with 0 keeps ratio 1, never certifiable below 1
        if self.target_symbol(len(prefix)) != 0:
            return ZERO
        return None


class LeakyEnv(Environment):
    """Scales a base environment by leak**len(x): a strict semimeasure."""

    def __init__(self, base: Environment, leak: Fraction):
        leak = Fraction(leak)
        if not 0 < leak < 1:
            raise ValueError("leak must be in (0,1)")
        self.base = base
        self.leak = leak
        self.alphabet = base.alphabet
        self.declared_class = STRICT_SEMIMEASURE
        self.max_depth = base.max_depth

    def _mass(self, symbols: tuple[int, ...]) -> Fraction:
        b = self.base._mass(symbols)
        if b == 0:
            return ZERO
        return b * self.leak ** len(symbols)

    def spec(self) -> dict:
        return {"kind": "leaky", "base": self.base.spec(), "leak": _frac_str(self.leak)}

    def zero_step_factor_bound(self, prefix):
        inner = self.base.zero_step_factor_bound(prefix)
        if inner is None:
            if self.leak <= HALF:
                return self.leak
            return None
        return inner * self.leak


class DecayingEnv(Environment):
    """Binary measure with mu(1 | x_{<t}) = (1/2) t^{-beta}."""

    def __init__(self, beta: int):
        if beta < 2:
            raise ValueError("beta must be an integer >= 2")
        self.beta = int(beta)
        self.alphabet = BINARY
        self.declared_class = MEASURE

    def one_prob(self, t: int) -> Fraction:
        return Fraction(1, 2 * t ** self.beta)

    def _mass(self, symbols: tuple[int, ...]) -> Fraction:
        m = ONE
        for t, s in enumerate(symbols, start=1):
            p1 = self.one_prob(t)
            m *= p1 if s == 1 else 1 - p1
        return m

    def cursor(self) -> EnvCursor:
        return _DecayingCursor(self)

    def spec(self) -> dict:
        return {"kind": "decaying", "beta": self.beta}

    # append-0 factor tends to 1: not certifiable below 1/2
    def zero_step_factor_bound(self, prefix):
        if self._mass(prefix) == 0:
            return ZERO
        return None


class _DecayingCursor(EnvCursor):
    # does not track cumulative mass: the exact rational product at large
    # depths is astronomically sized (use mass_interval for that)
    def __init__(self, env: DecayingEnv):
        self._env = env
        self._t = 1

    def row(self) -> tuple[Fraction, ...]:
        p1 = self._env.one_prob(self._t)
        return (1 - p1, p1)

    def step(self, a: int) -> None:
        self._t += 1


class TableEnv(Environment):
    """Explicit prefix-tree values to a finite depth."""

    def __init__(self, depth: int, values: dict[tuple[int, ...], Fraction],
                 alphabet: Alphabet = BINARY,
                 declared_class: str = STRICT_SEMIMEASURE):
        self.depth = depth
        self.alphabet = alphabet
        self.values = {tuple(k): Fraction(v) for k, v in values.items()}
        self.declared_class = declared_class
        self.max_depth = depth

    def _mass(self, symbols: tuple[int, ...]) -> Fraction:
        if len(symbols) > self.depth:
            raise DepthExceededError(
                f"table stores depth <= {self.depth}, queried at {len(symbols)}")
        return self.values.get(symbols, ZERO)

    def spec(self) -> dict:
        return {
            "kind": "table",
            "depth": self.depth,
            "alphabet_size": self.alphabet.size,
            "declared_class": self.declared_class,
            "values": {
                "".join(map(str, k)): _frac_str(v)
                for k, v in sorted(self.values.items()) if v != 0
            },
        }


def _frac_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class ValidationReport:
    is_semimeasure: bool
    is_measure_to_depth: bool
    first_defect_node: Optional[FiniteString]
    depth: int


def validate(env: Environment, depth: int) -> ValidationReport:
    """Exact check of the node inequality/equality on all nodes to depth."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if env.max_depth is not None:
        depth = min(depth, env.max_depth)
    root = env._mass(())
    if root > 1:
        return ValidationReport(False, False, FiniteString.empty(env.alphabet), depth)
    is_measure = root == 1
    stack = [((), root)]
    while stack:
        symbols, mass = stack.pop()
        if len(symbols) >= depth:
            continue
        children = [(symbols + (a,), env._mass(symbols + (a,))) for a in env.alphabet.symbols]
        total = sum(c for _, c in children)
        if total > mass:
            return ValidationReport(False, False,
                                    FiniteString(env.alphabet, symbols), depth)
        if total != mass:
            is_measure = False
        stack.extend((s, c) for s, c in children if c != 0)
    return ValidationReport(True, is_measure, None, depth)


def enumerate_support(env: Environment, depth: int) -> Iterator[tuple[FiniteString, Fraction]]:
    """Yield the nonzero-mass strings of exactly the given length, in order."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if env.max_depth is not None and depth > env.max_depth:
        raise DepthExceededError(f"depth {depth} beyond stored depth {env.max_depth}")

    def rec(symbols: tuple[int, ...], mass: Fraction):
        if len(symbols) == depth:
            yield FiniteString(env.alphabet, symbols), mass
            return
        for a in env.alphabet.symbols:
            child = env._mass(symbols + (a,))
            if child != 0:
                yield from rec(symbols + (a,), child)

    root = env._mass(())
    if root != 0:
        yield from rec((), root)


class BitStream:
    """Deterministic counter-based pseudorandom bit stream (SHA-256 blocks)."""

    def __init__(self, seed: int):
        self._seed = seed & (2 ** 64 - 1)
        self._counter = 0
        self._bits: list[int] = []

    def next_bit(self) -> int:
        if not self._bits:
            block = hashlib.sha256(
                self._seed.to_bytes(8, "big") + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
            n = int.from_bytes(block, "big")
            self._bits = [(n >> i) & 1 for i in range(255, -1, -1)]
            self._bits.reverse()  # pop() consumes in natural order
        return self._bits.pop()


def _draw_symbol(stream: BitStream, row: Sequence[Fraction]) -> int:
    """Exact draw from a probability row by dyadic bisection against the CDF."""
    bounds = [ZERO]
    for p in row:
        bounds.append(bounds[-1] + p)
    num, k = 0, 0
    while True:
        # current dyadic interval [num/2^k, (num+1)/2^k)
        j = None
        for i in range(len(row)):
            if bounds[i] * 2 ** k <= num and (num + 1) <= bounds[i + 1] * 2 ** k:
                j = i
                break
        if j is not None:
            if row[j] == 0:  # boundary cell of zero width cannot be drawn
                raise SemilabError("drew zero-probability cell")
            return j
        num = num * 2 + stream.next_bit()
        k += 1


def sample(env: Environment, length: int, seed: int,
           with_likelihood: bool = True) -> tuple[FiniteString, Optional[Fraction]]:
    """Draw a string of the given length from a measure, reproducibly.

    The pseudorandom stream is a pure function of the seed; the draw compares
    exact dyadic randomness against exact posterior CDFs, so no rounding
    enters symbol selection.  The returned likelihood equals eval(env, draw).
    """
    if env.declared_class != MEASURE:
        raise NotAMeasureError("sampling requires a declared (and valid) measure")
    stream = BitStream(seed)
    cursor = env.cursor()
    symbols = []
    likelihood = ONE if with_likelihood else None
    for _ in range(length):
        row = cursor.row()
        if sum(row) != 1:
            raise NotAMeasureError("posterior row does not sum to 1")
        a = _draw_symbol(stream, row)
        if with_likelihood:
            likelihood *= row[a]
        symbols.append(a)
        cursor.step(a)
    return FiniteString(env.alphabet, tuple(symbols)), likelihood


def mass_interval(env: Environment, x: FiniteString, precision_bits: int = 64):
    """Certified interval for eval(env, x), usable at depths where the exact
    rational would be astronomically large (e.g. decaying environments at
    depth 10^6).  Returns an mpmath interval under the active precision."""
    from . import intervals

    with intervals.precision(precision_bits):
        if isinstance(env, DecayingEnv):
            iv = intervals.iv
            acc = iv.mpf(1)
            one = iv.mpf(1)
            for t, s in enumerate(x.symbols, start=1):
                p1 = one / iv.mpf(2 * t ** env.beta)
                acc *= p1 if s == 1 else one - p1
            return acc
        cursor = env.cursor()
        acc = intervals.iv.mpf(1)
        for a in x.symbols:
            row = cursor.row()
            acc *= intervals.from_fraction(row[a])
            cursor.step(a)
        return acc
