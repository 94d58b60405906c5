"""Two-setting, two-outcome boxes p(ab|xy).

Entries are stored in an array of shape (2, 2, 2, 2) indexed
``[x, y, i, j]``: ``x`` is Alice's setting (0 = a, 1 = a'), ``y`` is Bob's
(0 = b, 1 = b'), ``i``/``j`` index the outcomes with 0 meaning +1 and 1
meaning -1. Flattened with C ordering this is the 16-vector the LP works on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InputError

OUTCOMES = (1, -1)
# CHSH sign per (x, y): only (a', b') enters with a minus sign
CHSH_SIGNS = np.array([[1, 1], [1, -1]])


@dataclass(frozen=True, eq=False)
class NsBox:
    p: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.p, dtype=float).reshape(2, 2, 2, 2)
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    @classmethod
    def uniform(cls) -> NsBox:
        return cls(np.full((2, 2, 2, 2), 0.25))

    @classmethod
    def from_strategy(cls, strategy: tuple[int, int, int, int]) -> NsBox:
        """Deterministic box; ``strategy`` is (A(a), A(a'), B(b), B(b'))."""
        if len(strategy) != 4 or any(s not in OUTCOMES for s in strategy):
            raise InputError(f"strategy must be four +/-1 values, got {strategy!r}")
        p = np.zeros((2, 2, 2, 2))
        for x, y in itertools.product(range(2), repeat=2):
            i = OUTCOMES.index(strategy[x])
            j = OUTCOMES.index(strategy[2 + y])
            p[x, y, i, j] = 1.0
        return cls(p)

    @classmethod
    def pr_box(cls) -> NsBox:
        """Outcomes equal except on (a', b'), where they are opposite."""
        p = np.zeros((2, 2, 2, 2))
        for x, y in itertools.product(range(2), repeat=2):
            if CHSH_SIGNS[x, y] > 0:
                p[x, y, 0, 0] = p[x, y, 1, 1] = 0.5
            else:
                p[x, y, 0, 1] = p[x, y, 1, 0] = 0.5
        return cls(p)

    def flat(self) -> np.ndarray:
        return self.p.reshape(16).copy()

    def correlations(self) -> np.ndarray:
        """E[x, y] = sum over outcomes of a*b*p(ab|xy)."""
        signs = np.outer(OUTCOMES, OUTCOMES)
        return np.einsum("xyij,ij->xy", self.p, signs)

    def chsh(self) -> float:
        return float(np.sum(CHSH_SIGNS * self.correlations()))

    def alice_marginals(self) -> np.ndarray:
        """P(A = +1 | x, y), shape (2, 2)."""
        return self.p[:, :, 0, :].sum(axis=-1)

    def bob_marginals(self) -> np.ndarray:
        """P(B = +1 | x, y), shape (2, 2)."""
        return self.p[:, :, :, 0].sum(axis=-1)

    def normalization_error(self) -> float:
        return float(np.max(np.abs(self.p.sum(axis=(2, 3)) - 1.0)))

    def signaling_deviation(self) -> tuple[float, str]:
        """Largest change of one party's marginal under the other's setting switch."""
        alice = self.alice_marginals()
        bob = self.bob_marginals()
        candidates = [
            (abs(alice[x, 0] - alice[x, 1]), f"party A, setting {'a' if x == 0 else 'a_prime'}: b vs b_prime")
            for x in range(2)
        ] + [
            (abs(bob[0, y] - bob[1, y]), f"party B, setting {'b' if y == 0 else 'b_prime'}: a vs a_prime")
            for y in range(2)
        ]
        dev, where = max(candidates, key=lambda c: c[0])
        return float(dev), where

    def is_valid(self, tol: float = 1e-9) -> bool:
        return (
            float(self.p.min()) >= -tol
            and self.normalization_error() <= tol
            and self.signaling_deviation()[0] <= tol
        )
