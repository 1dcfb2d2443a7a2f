"""Weighted mixtures over finite ordered environment classes.

Covers the raw reference mixture, measures-only mixtures (delta_k and their
full-class limit), the quasimeasure mixture, normalization, stagewise
approximations, and the quasimeasure transform itself.  All evaluation is
exact rational arithmetic.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .envcore import (
    MEASURE,
    STRICT_SEMIMEASURE,
    Environment,
    EnvCursor,
    FiniteString,
    ZERO,
    ONE,
    enumerate_support,
    validate,
)
from .errors import (
    ApproximableNotMeasureError,
    NormalizationError,
    NotDominatedError,
    SemilabError,
)

RAW = "raw"
QUASI = "quasi"
MEASURES_ONLY = "measures-only"
NORMALIZED_MEASURES_ONLY = "normalized-measures-only"

DEFAULT_CERTIFICATION_DEPTH = 10
DEFAULT_QUASI_DEPTH_CAP = 24


@dataclass(frozen=True)
class WeightScheme:
    """Positive weights indexed from 1, summing to at most 1."""

    weights: tuple[Fraction, ...]
    mode: str = "explicit"

    def __post_init__(self):
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        if sum(self.weights) > 1:
            raise ValueError("weights must sum to at most 1")

    def weight(self, i: int) -> Fraction:
        if not 1 <= i <= len(self.weights):
            raise IndexError(f"weight index {i} out of range")
        return self.weights[i - 1]

    def __len__(self) -> int:
        return len(self.weights)


def default_weights(count: int) -> WeightScheme:
    """The canonical rapidly decreasing scheme eps_i = i^-6 * 2^-i."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return WeightScheme(
        tuple(Fraction(1, i ** 6 * 2 ** i) for i in range(1, count + 1)),
        mode="paper-default",
    )


class EnvClass:
    """Ordered, 1-indexed list of environments with certified class tags.

    Measure membership is established by exact validation to the
    certification depth, never taken from the declared tag alone.
    """

    def __init__(self, envs: Sequence[Environment],
                 certification_depth: int = DEFAULT_CERTIFICATION_DEPTH):
        if not envs:
            raise ValueError("class must be nonempty")
        sizes = {e.alphabet.size for e in envs}
        if len(sizes) != 1:
            raise SemilabError("all class members must share one alphabet")
        self.envs = list(envs)
        self.alphabet = envs[0].alphabet
        self.certification_depth = certification_depth
        self._measure_flags: list[Optional[bool]] = [None] * len(envs)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.envs)

    def env(self, i: int) -> Environment:
        return self.envs[i - 1]

    def is_measure(self, i: int) -> bool:
        with self._lock:
            flag = self._measure_flags[i - 1]
        if flag is None:
            env = self.env(i)
            depth = self.certification_depth
            if env.max_depth is not None:
                depth = min(depth, env.max_depth)
            report = validate(env, depth)
            flag = bool(report.is_semimeasure and report.is_measure_to_depth
                        and env.declared_class == MEASURE)
            with self._lock:
                self._measure_flags[i - 1] = flag
        return flag

    def measure_indices(self, k: Optional[int] = None) -> tuple[int, ...]:
        k = len(self.envs) if k is None else min(k, len(self.envs))
        return tuple(i for i in range(1, k + 1) if self.is_measure(i))

    def spec(self) -> list:
        return [e.spec() for e in self.envs]


class QuasimeasureEnv(Environment):
    """Truncation of a semimeasure: depth-n values survive only while the
    total depth-n mass exceeds 1 - 1/n (strictly); zero afterwards."""

    def __init__(self, base: Environment, depth_cap: int = DEFAULT_QUASI_DEPTH_CAP):
        self.base = base
        self.depth_cap = depth_cap
        self.alphabet = base.alphabet
        self.declared_class = base.declared_class
        self.max_depth = depth_cap if base.max_depth is None else min(depth_cap, base.max_depth)
        self._totals: dict[int, Fraction] = {}
        self._alive: dict[int, bool] = {}
        self._lock = threading.Lock()

    def total_mass(self, n: int) -> Fraction:
        with self._lock:
            cached = self._totals.get(n)
        if cached is None:
            cached = sum((m for _, m in enumerate_support(self.base, n)), ZERO)
            with self._lock:
                self._totals.setdefault(n, cached)
        return cached

    def alive_at(self, n: int) -> bool:
        """Whether depth-n values survive the quasimeasure condition.

        n = 0 is defined alive (the threshold 1 - 1/n is undefined
        there), preserving nu~ <= nu and the measure fixed point."""
        if n == 0:
            return True
        with self._lock:
            cached = self._alive.get(n)
        if cached is None:
            cached = self.total_mass(n) > 1 - Fraction(1, n)
            with self._lock:
                self._alive.setdefault(n, cached)
        return cached

    def cutoff_depth(self) -> Optional[int]:
        """First depth at which values are zeroed, up to the cap."""
        for n in range(1, self.max_depth + 1):
            if not self.alive_at(n):
                return n
        return None

    def _mass(self, symbols: tuple[int, ...]) -> Fraction:
        n = len(symbols)
        if n > self.max_depth:
            from .errors import DepthExceededError
            raise DepthExceededError(f"quasimeasure materialized to depth {self.max_depth}")
        if not self.alive_at(n):
            return ZERO
        return self.base._mass(symbols)

    def spec(self) -> dict:
        return {"kind": "derived", "derived": "quasimeasure",
                "base": self.base.spec(), "depth_cap": self.depth_cap}

    def zero_step_factor_bound(self, prefix):
        if self._mass(prefix) == 0:
            return ZERO
        return self.base.zero_step_factor_bound(prefix)


def quasimeasure_transform(env: Environment,
                           depth_cap: int = DEFAULT_QUASI_DEPTH_CAP) -> QuasimeasureEnv:
    return QuasimeasureEnv(env, depth_cap)


class MixtureEnv(Environment):
    """Weighted mixture over an EnvClass in one of four evaluation modes."""

    def __init__(self, env_class: EnvClass, weights: WeightScheme,
                 mode: str = RAW, k: Optional[int] = None,
                 quasi_depth_cap: int = DEFAULT_QUASI_DEPTH_CAP):
        if len(weights) != len(env_class):
            raise ValueError("one weight per class member required")
        if mode not in (RAW, QUASI, MEASURES_ONLY, NORMALIZED_MEASURES_ONLY):
            raise ValueError(f"unknown mode {mode!r}")
        self.env_class = env_class
        self.weights = weights
        self.mode = mode
        self.k = len(env_class) if k is None else k
        self.alphabet = env_class.alphabet
        self.quasi_depth_cap = quasi_depth_cap
        self._quasi: Optional[list[QuasimeasureEnv]] = None
        if mode == QUASI:
            self._quasi = [QuasimeasureEnv(e, quasi_depth_cap) for e in env_class.envs]
            self.max_depth = quasi_depth_cap
        self._membership: Optional[tuple[int, ...]] = None
        if mode in (MEASURES_ONLY, NORMALIZED_MEASURES_ONLY):
            self._membership = env_class.measure_indices(self.k)
            if not self._membership:
                raise SemilabError("measures-only mixture with empty membership set")
        all_measures = all(env_class.is_measure(i) for i in self._component_indices())
        if mode == NORMALIZED_MEASURES_ONLY:
            self.declared_class = MEASURE if all_measures else STRICT_SEMIMEASURE
        else:
            total_one = self._raw_epsilon_total() == 1
            self.declared_class = MEASURE if (all_measures and total_one) else STRICT_SEMIMEASURE
        depths = [env_class.env(i).max_depth for i in self._component_indices()
                  if env_class.env(i).max_depth is not None]
        if depths and self.mode != QUASI:
            self.max_depth = min(depths)
        elif self.mode == QUASI:
            self.max_depth = min(depths + [quasi_depth_cap]) if depths else quasi_depth_cap

    def _raw_epsilon_total(self) -> Fraction:
        return sum(self.weights.weight(i) for i in self._component_indices())

    def _component_indices(self) -> tuple[int, ...]:
        if self.mode in (MEASURES_ONLY, NORMALIZED_MEASURES_ONLY):
            return self._membership
        return tuple(range(1, len(self.env_class) + 1))

    def membership(self) -> tuple[int, ...]:
        """J_k for measures-only modes; all indices otherwise."""
        return self._component_indices()

    def component(self, i: int) -> Environment:
        """The environment the mode actually mixes at index i."""
        if self.mode == QUASI:
            return self._quasi[i - 1]
        return self.env_class.env(i)

    def _mass(self, symbols: tuple[int, ...]) -> Fraction:
        total = ZERO
        for i in self._component_indices():
            total += self.weights.weight(i) * self.component(i)._mass(symbols)
        if self.mode == NORMALIZED_MEASURES_ONLY:
            return total / self._norm_total()
        return total

    def _norm_total(self) -> Fraction:
        if getattr(self, "_norm_cache", None) is None:
            norm = sum(self.weights.weight(i) * self.component(i)._mass(())
                       for i in self._component_indices())
            if norm == 0:
                raise NormalizationError("zero total mass")
            self._norm_cache = norm
        return self._norm_cache

    def spec(self) -> dict:
        return {
            "kind": "derived",
            "derived": "mixture",
            "mode": self.mode,
            "k": self.k,
            "quasi_depth_cap": self.quasi_depth_cap,
            "environments": self.env_class.spec(),
            "weights": [f"{w.numerator}/{w.denominator}" for w in self.weights.weights],
        }

    def zero_step_factor_bound(self, prefix):
        # a weighted sum's per-step ratio is bounded by the max component ratio
        bound = ZERO
        for i in self._component_indices():
            b = self.component(i).zero_step_factor_bound(prefix)
            if b is None:
                return None
            bound = max(bound, b)
        return bound

    def cursor(self) -> EnvCursor:
        return _MixtureCursor(self)


class _MixtureCursor(EnvCursor):
    """Tracks per-component masses so each posterior row costs O(components)."""

    def __init__(self, mix: MixtureEnv):
        self._env = mix
        self._symbols = ()
        self._indices = mix._component_indices()
        self._cursors = {i: mix.component(i).cursor() for i in self._indices}
        self._masses = {i: mix.component(i)._mass(()) for i in self._indices}
        self._mass = sum(mix.weights.weight(i) * self._masses[i] for i in self._indices)
        if mix.mode == NORMALIZED_MEASURES_ONLY and self._mass != 0:
            self._norm = self._mass
            self._mass = ONE
        else:
            self._norm = ONE

    def row(self) -> tuple[Fraction, ...]:
        if self._mass == 0:
            from .errors import UndefinedPosteriorError
            raise UndefinedPosteriorError("zero mass at cursor position")
        mix = self._env
        child_totals = [ZERO] * mix.alphabet.size
        for i in self._indices:
            m = self._masses[i]
            if m == 0:
                continue
            crow = self._cursors[i].row()
            w = mix.weights.weight(i)
            for a in mix.alphabet.symbols:
                child_totals[a] += w * m * crow[a]
        denom = self._mass * self._norm
        return tuple(c / denom for c in child_totals)

    def step(self, a: int) -> None:
        mix = self._env
        for i in self._indices:
            if self._masses[i] == 0:
                continue
            crow = self._cursors[i].row()
            self._masses[i] = self._masses[i] * crow[a]
            self._cursors[i].step(a)
        self._symbols = self._symbols + (a,)
        self._mass = sum(
            mix.weights.weight(i) * self._masses[i] for i in self._indices
        ) / self._norm

    def clone(self):
        new = object.__new__(type(self))
        new.__dict__.update(self.__dict__)
        new._cursors = {i: c.clone() for i, c in self._cursors.items()}
        new._masses = dict(self._masses)
        return new


def mix_eval(mix: MixtureEnv, x: FiniteString) -> Fraction:
    return mix.eval(x)


class NormalizedEnv(Environment):
    """base(x) / base(empty); a measure when the base has measure nodes."""

    def __init__(self, base: Environment, declared_class: str):
        total = base._mass(())
        if total == 0:
            raise NormalizationError("cannot normalize zero total mass")
        self.base = base
        self.total = total
        self.alphabet = base.alphabet
        self.declared_class = declared_class
        self.max_depth = base.max_depth

    def _mass(self, symbols: tuple[int, ...]) -> Fraction:
        return self.base._mass(symbols) / self.total

    def spec(self) -> dict:
        return {"kind": "derived", "derived": "normalized",
                "base": self.base.spec(), "declared_class": self.declared_class}

    def zero_step_factor_bound(self, prefix):
        return self.base.zero_step_factor_bound(prefix)

    def cursor(self) -> EnvCursor:
        return _NormalizedCursor(self)


class _NormalizedCursor(EnvCursor):
    def __init__(self, env: NormalizedEnv):
        self._env = env
        self._inner = env.base.cursor()
        self._symbols = ()

    @property
    def mass(self):
        return self._inner.mass / self._env.total

    @property
    def _mass(self):
        return self._inner.mass

    def row(self):
        return self._inner.row()

    def step(self, a: int) -> None:
        self._inner.step(a)
        self._symbols = self._symbols + (a,)

    def clone(self):
        new = object.__new__(type(self))
        new.__dict__.update(self.__dict__)
        new._inner = self._inner.clone()
        return new


def normalize(mix: MixtureEnv) -> Environment:
    """Return the mixture scaled to total mass 1.

    Quasi-mode mixtures that still retain a strict quasimeasure component are
    refused: the normalized object would only be approximable, not an
    evaluable measure.
    """
    if mix.mode == QUASI:
        for i in mix._component_indices():
            if not mix.env_class.is_measure(i) and mix.component(i)._mass(()) > 0:
                raise ApproximableNotMeasureError(
                    f"component {i} is a strict quasimeasure with positive mass")
    all_measures = all(mix.env_class.is_measure(i) for i in mix._component_indices())
    declared = MEASURE if all_measures else STRICT_SEMIMEASURE
    return NormalizedEnv(mix, declared)


def dominance_constant(mix: MixtureEnv, component_index: int) -> Fraction:
    """The weight by which the mixture lower-bounds the indexed component."""
    if not 1 <= component_index <= len(mix.env_class):
        raise NotDominatedError(f"index {component_index} not in class")
    if component_index not in mix._component_indices():
        raise NotDominatedError(
            f"component {component_index} excluded by mode {mix.mode!r}")
    if mix.mode == NORMALIZED_MEASURES_ONLY:
        # normalization divides by total <= 1, so the raw weight still works
        return mix.weights.weight(component_index)
    return mix.weights.weight(component_index)


def k_x(mix: MixtureEnv, x: FiniteString) -> Optional[int]:
    """Minimal non-measure index whose quasimeasure is still alive at x."""
    if mix.mode != QUASI:
        raise SemilabError("k_x is defined for quasi-mode mixtures")
    for i in range(1, len(mix.env_class) + 1):
        if mix.env_class.is_measure(i):
            continue
        if mix.component(i).eval(x) != 0:
            return i
    return None


PARTIAL_SUM = "partial-sum"
EXACT = "exact"


@dataclass(frozen=True)
class StageApproximation:
    """Stagewise lower approximations M^t increasing to the target mixture."""

    target: MixtureEnv
    rule: str = EXACT

    def __post_init__(self):
        if self.rule not in (PARTIAL_SUM, EXACT):
            raise ValueError(f"unknown stage rule {self.rule!r}")

    def stage_eval(self, t: int, x: FiniteString) -> Fraction:
        if t < 1:
            raise ValueError("stage index starts at 1")
        if self.rule == EXACT:
            return self.target.eval(x)
        total = ZERO
        indices = [i for i in self.target._component_indices() if i <= t]
        for i in indices:
            total += self.target.weights.weight(i) * self.target.component(i).eval(x)
        return total

    @property
    def final_stage(self) -> int:
        return len(self.target.env_class)


def stage_eval(stages: StageApproximation, t: int, x: FiniteString) -> Fraction:
    return stages.stage_eval(t, x)
