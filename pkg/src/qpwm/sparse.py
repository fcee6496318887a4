"""Basis-state simulator for state preparations followed by reversible maps.

Every circuit simulated here is a product of state preparations on fresh
registers and basis-state permutations.  Such circuits keep all amplitudes
real and nonnegative, so a basis state is stored with its probability weight
(an exact ``Fraction`` where the preparation is rational); the amplitude is
its square root.  This keeps flagged masses exact.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import PreconditionError, ResourceError

DEFAULT_STATE_CAP = 1 << 22


class SparseState:
    def __init__(self, registers: Iterable[str], cap: int = DEFAULT_STATE_CAP):
        self.registers = tuple(registers)
        if len(set(self.registers)) != len(self.registers):
            raise PreconditionError("register names must be unique")
        self.cap = cap
        self._index = {r: n for n, r in enumerate(self.registers)}
        self.weights: dict[tuple, Fraction | float] = {
            tuple(0 for _ in self.registers): Fraction(1)
        }

    def __len__(self):
        return len(self.weights)

    def index(self, register: str) -> int:
        try:
            return self._index[register]
        except KeyError:
            raise KeyError(f"no register named {register!r}") from None

    def total(self):
        return sum(self.weights.values())

    def check_normalised(self, tol: float = 1e-9):
        t = float(self.total())
        if abs(t - 1.0) > tol:
            raise PreconditionError(f"state norm^2 is {t}, not 1")

    def amplitudes(self) -> dict[tuple, float]:
        return {b: math.sqrt(float(w)) for b, w in self.weights.items()}

    def value(self, basis: tuple, register: str):
        return basis[self.index(register)]

    def prepare(self, register: str, distribution: Mapping[int, Fraction | float]):
        """Map |0> on ``register`` to sum_v sqrt(p_v)|v>, on every branch."""
        r = self.index(register)
        self._prepare(r, lambda _b: distribution, len(distribution))

    def prepare_conditional(self, register: str,
                            distribution_for: Callable[[tuple], Mapping[int, Fraction | float]],
                            width: int):
        """Like :meth:`prepare` with a distribution depending on the other registers."""
        self._prepare(self.index(register), distribution_for, width)

    def _prepare(self, r: int, dist_for, width: int):
        if len(self.weights) * width > self.cap:
            raise ResourceError(
                f"state would hold up to {len(self.weights) * width} basis states, cap is {self.cap}"
            )
        out: dict[tuple, Fraction | float] = {}
        for b, w in self.weights.items():
            if b[r] != 0:
                raise PreconditionError(f"register {self.registers[r]!r} is not fresh")
            for v, p in dist_for(b).items():
                if p == 0:
                    continue
                nb = b[:r] + (v,) + b[r + 1:]
                out[nb] = w * p
        self.weights = out

    def apply(self, permutation: Callable[[tuple], tuple]):
        """Apply a basis permutation; a collision means the map was not reversible."""
        out: dict[tuple, Fraction | float] = {}
        for b, w in self.weights.items():
            nb = tuple(permutation(b))
            if nb in out:
                raise PreconditionError(f"map is not a permutation: two states reach {nb}")
            out[nb] = w
        self.weights = out

    def apply_on(self, registers: Iterable[str], fn: Callable[..., tuple]):
        """Apply ``fn`` to the named registers' values, writing back its results."""
        idx = [self.index(r) for r in registers]

        def perm(b):
            new = list(b)
            for n, v in zip(idx, fn(*(b[n] for n in idx))):
                new[n] = v
            return tuple(new)

        self.apply(perm)

    def probability(self, predicate: Callable[[tuple], bool]):
        return sum((w for b, w in self.weights.items() if predicate(b)), Fraction(0))

    def register_probability(self, register: str, value) -> Fraction | float:
        r = self.index(register)
        return self.probability(lambda b: b[r] == value)

    def marginal(self, registers: Iterable[str]) -> dict[tuple, Fraction | float]:
        idx = [self.index(r) for r in registers]
        out: dict[tuple, Fraction | float] = {}
        for b, w in self.weights.items():
            key = tuple(b[n] for n in idx)
            out[key] = out.get(key, 0) + w
        return out

    def sample(self, rng: np.random.Generator, predicate: Callable[[tuple], bool] | None = None):
        """Draw one basis state, optionally conditioned on ``predicate``."""
        items = [(b, w) for b, w in self.weights.items() if predicate is None or predicate(b)]
        if not items:
            raise PreconditionError("no basis state satisfies the condition")
        p = np.array([float(w) for _, w in items])
        pick = rng.choice(len(items), p=p / p.sum())
        return items[int(pick)][0]
