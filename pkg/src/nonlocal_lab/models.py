"""Correlation models for a pair of +/-1 measurements.

Every model is a function E(theta) of the relative angle theta in [0, pi]
between the two measurement axes. From E alone the joint outcome
distribution is fixed once two requirements are imposed: ++ and -- are
equally likely, +- and -+ are equally likely, and each party sees +1
with probability 1/2 whatever the other party measures. That leaves

    p(++) = p(--) = (1 + E) / 4,    p(+-) = p(-+) = (1 - E) / 4.

Models shipped here:

``LhvSaw``
    E = 1 - 2 theta / pi, realised by a shared uniformly random direction
    with sign readout on each side.
``QuantumSinglet``
    E = -cos(theta).
``SuperquantumPR``
    E = 1 on [0, pi/4], -1 on [3pi/4, pi], a decreasing ramp in between.
``Jammed``
    wraps any of the above and replaces its correlations by classical ones
    while leaving marginals alone.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConsistencyError, InputError
from .rng import BLOCK_SIZE, block_layout, derive_stream

PI = math.pi
QUARTER = PI / 4
THREE_QUARTERS = 3 * PI / 4
# slack allowed when checking that a relative angle lies in [0, pi]
ANGLE_TOL = 1e-12
PROB_TOL = 1e-12


class Ramp(str, Enum):
    SMOOTH_SINE = "smooth-sine"
    LINEAR = "linear"


class JamForm(str, Enum):
    SAW = "saw"
    ZERO = "zero"


def fold_angle(x):
    """Fold any real angle difference into [0, pi] (period 2 pi, even)."""
    r = np.mod(np.abs(x), 2 * PI)
    r = np.where(r > PI, 2 * PI - r, r)
    return float(r) if np.ndim(r) == 0 else r


def relative_angle(x, y):
    return fold_angle(np.subtract(x, y))


def _check_theta(theta):
    arr = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"relative angle must be finite, got {theta!r}")
    if np.any(arr < -ANGLE_TOL) or np.any(arr > PI + ANGLE_TOL):
        raise InputError(f"relative angle must lie in [0, pi], got {theta!r}")
    return np.clip(arr, 0.0, PI)


@dataclass(frozen=True)
class JointDistribution:
    """Outcome probabilities for one pair of settings."""

    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    def __post_init__(self):
        probs = self.as_tuple()
        if not all(math.isfinite(p) for p in probs):
            raise ConsistencyError(f"non-finite probability in {probs}")
        if min(probs) < -PROB_TOL:
            raise ConsistencyError(f"negative probability in {probs}")
        if abs(math.fsum(probs) - 1.0) > PROB_TOL:
            raise ConsistencyError(f"probabilities {probs} do not sum to 1")

    @classmethod
    def from_correlation(cls, e: float) -> JointDistribution:
        e = float(e)
        if not math.isfinite(e) or abs(e) > 1 + PROB_TOL:
            raise ConsistencyError(f"correlation {e} outside [-1, 1]")
        e = min(1.0, max(-1.0, e))
        # Compute whichever of the two weights is >= 1/4 and take the other as
        # 1/2 minus it; that subtraction is exact, so every marginal is
        # exactly 0.5 in floating point.
        if e >= 0:
            same = (1 + e) / 4
            diff = 0.5 - same
        else:
            diff = (1 - e) / 4
            same = 0.5 - diff
        return cls(same, diff, diff, same)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p_pp, self.p_pm, self.p_mp, self.p_mm)

    @property
    def marginal_a(self) -> float:
        """P(A = +1)."""
        return self.p_pp + self.p_pm

    @property
    def marginal_b(self) -> float:
        """P(B = +1)."""
        return self.p_pp + self.p_mp

    @property
    def correlation(self) -> float:
        return (self.p_pp + self.p_mm) - (self.p_pm + self.p_mp)


@dataclass(frozen=True)
class CorrelationModel:
    """Base class. Subclasses implement ``_correlation`` on folded angles."""

    name = "abstract"

    def _correlation(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def joint(self, theta: float) -> JointDistribution:
        return JointDistribution.from_correlation(correlation(self, theta))

    def describe(self) -> str:
        return self.name


@dataclass(frozen=True)
class LhvSaw(CorrelationModel):
    name = "lhv-saw"

    def _correlation(self, theta):
        return 1.0 - 2.0 * theta / PI


@dataclass(frozen=True)
class QuantumSinglet(CorrelationModel):
    name = "quantum-singlet"

    def _correlation(self, theta):
        return -np.cos(theta)


@dataclass(frozen=True)
class SuperquantumPR(CorrelationModel):
    ramp: Ramp = Ramp.SMOOTH_SINE
    name = "superquantum-pr"

    def __post_init__(self):
        object.__setattr__(self, "ramp", Ramp(self.ramp))

    def _correlation(self, theta):
        if self.ramp is Ramp.SMOOTH_SINE:
            # sin(2 theta) is 1 at pi/4 and -1 at 3pi/4 with zero slope there
            middle = np.sin(2.0 * theta)
        else:
            middle = (PI / 2 - theta) * (4.0 / PI)
        middle = np.clip(middle, -1.0, 1.0)
        return np.where(theta <= QUARTER, 1.0, np.where(theta >= THREE_QUARTERS, -1.0, middle))

    def describe(self) -> str:
        return f"{self.name}[{self.ramp.value}]"


@dataclass(frozen=True)
class Jammed(CorrelationModel):
    """Correlations of ``inner`` replaced by a classical form.

    ``form="saw"`` gives E = 1 - 2 theta / pi (saturates, never violates,
    the classical CHSH bound); ``form="zero"`` removes all correlation.
    """

    inner: CorrelationModel = None
    form: JamForm = JamForm.SAW
    name = "jammed"

    def __post_init__(self):
        if not isinstance(self.inner, CorrelationModel):
            raise InputError("Jammed needs an inner CorrelationModel")
        if isinstance(self.inner, Jammed):
            raise InputError("model is already jammed")
        object.__setattr__(self, "form", JamForm(self.form))

    def _correlation(self, theta):
        if self.form is JamForm.ZERO:
            return np.zeros_like(theta)
        return 1.0 - 2.0 * theta / PI

    def describe(self) -> str:
        return f"jammed[{self.form.value}]({self.inner.describe()})"


def correlation(model: CorrelationModel, theta):
    """E(theta) for a relative angle in [0, pi]; accepts scalars or arrays."""
    t = _check_theta(theta)
    e = np.asarray(model._correlation(t), dtype=float)
    if np.any(np.abs(e) > 1 + PROB_TOL):
        raise ConsistencyError(f"{model.describe()} produced |E| > 1")
    return float(e) if e.ndim == 0 else e


def joint_distribution(model: CorrelationModel, theta: float) -> JointDistribution:
    return model.joint(float(_check_theta(theta)))


def apply_jamming(model: CorrelationModel, form: JamForm | str = JamForm.SAW) -> Jammed:
    if isinstance(model, Jammed):
        raise InputError("double jamming is rejected; apply_jamming to the original model")
    return Jammed(model, JamForm(form))


def _draw(dist: JointDistribution, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p_pp, p_pm, p_mp, _ = dist.as_tuple()
    cum = np.array([p_pp, p_pp + p_pm, p_pp + p_pm + p_mp])
    idx = np.searchsorted(cum, u, side="right")
    # index order ++, +-, -+, --
    a = np.where(idx < 2, 1, -1).astype(np.int8)
    b = np.where((idx == 0) | (idx == 2), 1, -1).astype(np.int8)
    return a, b


def sample(model: CorrelationModel, theta: float, rng: np.random.Generator, n: int | None = None):
    """Draw outcome pairs from the model's joint distribution.

    With ``n=None`` returns one ``(a, b)`` pair of ints, otherwise two int8
    arrays of length ``n``.
    """
    dist = joint_distribution(model, theta)
    if n is None:
        a, b = _draw(dist, rng.random(1))
        return int(a[0]), int(b[0])
    if n < 0:
        raise InputError(f"sample count must be >= 0, got {n}")
    return _draw(dist, rng.random(n))


def sample_outcomes(
    model: CorrelationModel,
    theta: float,
    n: int,
    seed: int,
    *counters: int,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> tuple[np.ndarray, np.ndarray]:
    """``n`` outcome pairs drawn block by block from derived streams.

    Block ``k`` always uses ``derive_stream(seed, *counters, k)``, so the
    result does not depend on ``workers``.
    """
    if n < 1:
        raise InputError(f"sample count must be >= 1, got {n}")
    dist = joint_distribution(model, theta)
    layout = block_layout(n, block_size)

    def one(block):
        k, length = block
        return _draw(dist, derive_stream(seed, *counters, k).random(length))

    if workers > 1 and len(layout) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, layout))
    else:
        parts = [one(block) for block in layout]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


MODEL_NAMES = ("lhv-saw", "quantum-singlet", "superquantum-pr")


def build_model(
    name: str,
    ramp: Ramp | str = Ramp.SMOOTH_SINE,
    jammed: bool = False,
    jam_form: JamForm | str = JamForm.SAW,
) -> CorrelationModel:
    if name == "lhv-saw":
        model: CorrelationModel = LhvSaw()
    elif name == "quantum-singlet":
        model = QuantumSinglet()
    elif name == "superquantum-pr":
        model = SuperquantumPR(Ramp(ramp))
    else:
        raise InputError(f"unknown model {name!r}; expected one of {', '.join(MODEL_NAMES)}")
    return apply_jamming(model, jam_form) if jammed else model
