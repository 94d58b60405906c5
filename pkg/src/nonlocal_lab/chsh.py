"""The CHSH combination E(a,b) + E(a,b') + E(a',b) - E(a',b').

Settings are absolute directions in a plane; each term is evaluated at the
folded relative angle, so any quad can be fed to any model.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .models import PI, CorrelationModel, correlation, relative_angle, sample_outcomes

# (term name, first setting, second setting, sign), in the order of the inequality
TERMS = (
    ("AB", "a", "b", 1),
    ("AB'", "a", "b_prime", 1),
    ("A'B", "a_prime", "b", 1),
    ("A'B'", "a_prime", "b_prime", -1),
)

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
ALGEBRAIC_BOUND = 4.0


@dataclass(frozen=True)
class SettingsQuad:
    a: float
    a_prime: float
    b: float
    b_prime: float

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InputError(f"setting {name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.a_prime, self.b, self.b_prime)

    def relative_angles(self) -> dict[str, float]:
        return {name: relative_angle(getattr(self, x), getattr(self, y)) for name, x, y, _ in TERMS}


@dataclass(frozen=True)
class Term:
    name: str
    relative_angle: float
    correlation: float
    sign: int

    @property
    def contribution(self) -> float:
        return self.sign * self.correlation


@dataclass(frozen=True)
class ChshReport:
    value: float
    terms: tuple[Term, ...]
    standard_error: float | None = None
    n_per_pair: int | None = None
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def correlations(self) -> tuple[float, ...]:
        return tuple(t.correlation for t in self.terms)


def canonical_quad() -> SettingsQuad:
    """a' = 0, b = pi/4, a = pi/2, b' = 3pi/4.

    Three of the relative angles are pi/4 and (a', b') is 3pi/4.
    """
    return SettingsQuad(a=PI / 2, a_prime=0.0, b=PI / 4, b_prime=3 * PI / 4)


def _combine(terms: list[Term]) -> float:
    # fixed summation order keeps the value reproducible to the last bit
    total = 0.0
    for t in terms:
        total += t.contribution
    return total


def chsh_value(model: CorrelationModel, quad: SettingsQuad) -> ChshReport:
    terms = []
    for name, x, y, sign in TERMS:
        theta = relative_angle(getattr(quad, x), getattr(quad, y))
        terms.append(Term(name, theta, correlation(model, theta), sign))
    return ChshReport(_combine(terms), tuple(terms))


def chsh_estimate(
    model: CorrelationModel,
    quad: SettingsQuad,
    n_per_pair: int,
    seed: int,
    workers: int = 1,
) -> ChshReport:
    """Monte Carlo estimate; setting pair ``k`` draws from streams ``(seed, k, block)``."""
    if n_per_pair < 1:
        raise InputError(f"n_per_pair must be >= 1, got {n_per_pair}")

    def one(k):
        name, x, y, sign = TERMS[k]
        theta = relative_angle(getattr(quad, x), getattr(quad, y))
        a, b = sample_outcomes(model, theta, n_per_pair, seed, k)
        mean = float(np.mean(a.astype(np.int64) * b))
        return Term(name, theta, mean, sign)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(TERMS))) as pool:
            terms = list(pool.map(one, range(len(TERMS))))
    else:
        terms = [one(k) for k in range(len(TERMS))]
    # products are +/-1, so the per-sample variance is 1 - mean^2
    var = sum(max(0.0, 1.0 - t.correlation**2) for t in terms)
    se = math.sqrt(var / n_per_pair)
    return ChshReport(_combine(terms), tuple(terms), standard_error=se, n_per_pair=n_per_pair)


def chsh_grid(model: CorrelationModel, n: int = 50, fix_a_prime: bool = False, chunk: int = 5):
    """CHSH values on an ``n``-point grid of [0, pi) per setting.

    Yields ``(values, index_offset)`` chunks over the first free axis so a
    50^4 grid never sits in memory all at once. With ``fix_a_prime`` the
    a' setting is pinned to 0 and the grid has three free axes.
    """
    g = np.arange(n) * (PI / n)
    if fix_a_prime:
        a_prime = np.zeros(1)
    else:
        a_prime = g
    for start in range(0, len(a_prime), chunk):
        ap = a_prime[start : start + chunk][:, None, None, None]
        a = g[None, :, None, None]
        b = g[None, None, :, None]
        bp = g[None, None, None, :]
        values = (
            correlation(model, relative_angle(a, b))
            + correlation(model, relative_angle(a, bp))
            + correlation(model, relative_angle(ap, b))
            - correlation(model, relative_angle(ap, bp))
        )
        yield values, start


def chsh_grid_max_abs(model: CorrelationModel, n: int = 50) -> tuple[float, SettingsQuad]:
    """Largest |CHSH| on the full ``n^4`` grid and a quad attaining it."""
    g = np.arange(n) * (PI / n)
    best = -1.0
    best_quad = None
    for values, start in chsh_grid(model, n):
        absval = np.abs(values)
        idx = np.unravel_index(int(np.argmax(absval)), absval.shape)
        if absval[idx] > best:
            best = float(absval[idx])
            i, j, k, m = idx
            best_quad = SettingsQuad(a=g[j], a_prime=g[start + i], b=g[k], b_prime=g[m])
    return best, best_quad
