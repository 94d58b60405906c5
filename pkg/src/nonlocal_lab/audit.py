"""Checks that correlations cannot be used to signal.

A party's probability of seeing +1 must not depend on which setting the
other party picks. The analytic audits evaluate this exactly on a grid of
settings; the empirical audit applies a two-proportion z-test to observed
outcome counts. ``unary_audit`` checks that jamming leaves every
single-party marginal untouched.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .box import NsBox
from .chsh import TERMS, SettingsQuad
from .errors import InputError
from .models import PI, CorrelationModel, Jammed, joint_distribution, relative_angle, sample_outcomes

ANALYTIC_THRESHOLD = 1e-12
# LP boxes come out of floating-point pivoting, so they get a looser bar
ANALYTIC_THRESHOLD_BOX = 1e-9
DEFAULT_ALPHA = 0.01
DEFAULT_GRID = 100
PARTIES = ("A", "B")


@dataclass(frozen=True)
class AuditReport:
    """``passed`` is exactly ``max_deviation <= threshold``.

    In empirical mode both numbers are z-scores: the largest observed
    |z| and the Bonferroni-corrected critical value.
    """

    passed: bool
    max_deviation: float
    worst_case: str
    mode: str
    threshold: float
    details: dict = field(default_factory=dict, compare=False)


def marginal(model: CorrelationModel, local_setting: float, remote_setting: float, party: str) -> float:
    """P(party sees +1) given its own setting and the other party's."""
    if party not in PARTIES:
        raise InputError(f"party must be 'A' or 'B', got {party!r}")
    dist = joint_distribution(model, relative_angle(local_setting, remote_setting))
    return dist.marginal_a if party == "A" else dist.marginal_b


def _marginal_table(model: CorrelationModel, grid: np.ndarray, party: str) -> np.ndarray:
    """table[i, k] = marginal at local grid[i], remote grid[k]."""
    cache: dict[float, float] = {}
    table = np.empty((len(grid), len(grid)))
    for i, local in enumerate(grid):
        for k, remote in enumerate(grid):
            theta = relative_angle(local, remote)
            if theta not in cache:
                dist = joint_distribution(model, theta)
                cache[theta] = dist.marginal_a if party == "A" else dist.marginal_b
            table[i, k] = cache[theta]
    return table


def nonsignaling_audit_analytic(model: CorrelationModel | NsBox, grid_size: int = DEFAULT_GRID) -> AuditReport:
    """Worst change of a marginal when only the remote setting changes.

    Settings run over ``grid_size`` points of [0, pi] for both parties. An
    ``NsBox`` is audited on its own two settings per side instead.
    """
    if isinstance(model, NsBox):
        dev, where = model.signaling_deviation()
        return AuditReport(dev <= ANALYTIC_THRESHOLD_BOX, dev, where, "analytic", ANALYTIC_THRESHOLD_BOX)
    if grid_size < 2:
        raise InputError(f"grid_size must be >= 2, got {grid_size}")
    grid = np.linspace(0.0, PI, grid_size)
    worst = (-1.0, "")
    for party in PARTIES:
        table = _marginal_table(model, grid, party)
        spread = table.max(axis=1) - table.min(axis=1)
        i = int(np.argmax(spread))
        if spread[i] > worst[0]:
            k_lo, k_hi = int(np.argmin(table[i])), int(np.argmax(table[i]))
            worst = (
                float(spread[i]),
                f"party {party}, local {grid[i]:.17g}, remote {grid[k_lo]:.17g} vs {grid[k_hi]:.17g}",
            )
    dev, where = worst
    return AuditReport(
        dev <= ANALYTIC_THRESHOLD,
        dev,
        where,
        "analytic",
        ANALYTIC_THRESHOLD,
        {"grid_size": grid_size, "model": model.describe()},
    )


def _two_proportion_z(x1: int, n1: int, x2: int, n2: int) -> float:
    pooled = (x1 + x2) / (n1 + n2)
    var = pooled * (1 - pooled) * (1 / n1 + 1 / n2)
    if var == 0:
        return 0.0
    return (x1 / n1 - x2 / n2) / math.sqrt(var)


def nonsignaling_audit_empirical(
    tallies: dict[tuple[str, float, float], tuple[int, int]],
    significance: float = DEFAULT_ALPHA,
) -> AuditReport:
    """Two-proportion z-tests with Bonferroni correction.

    ``tallies`` maps ``(party, local_setting, remote_setting)`` to
    ``(count of +1, count of -1)`` for that party. Every pair of remote
    settings sharing a party and local setting is tested.
    """
    if not tallies:
        raise InputError("tallies are empty")
    if not 0 < significance < 1:
        raise InputError(f"significance must lie in (0, 1), got {significance}")
    groups: dict[tuple[str, float], list[tuple[float, int, int]]] = {}
    for key, counts in sorted(tallies.items()):
        party, local, remote = key
        if party not in PARTIES:
            raise InputError(f"unknown party {party!r} in tallies")
        plus, minus = counts
        if plus < 0 or minus < 0:
            raise InputError(f"negative tally at {key}")
        if plus + minus == 0:
            raise InputError(f"empty tally at {key}")
        groups.setdefault((party, local), []).append((remote, int(plus), int(plus + minus)))

    comparisons = []
    for (party, local), rows in groups.items():
        if len(rows) < 2:
            raise InputError(f"party {party} at local setting {local} has fewer than 2 remote settings")
        for (r1, x1, n1), (r2, x2, n2) in itertools.combinations(rows, 2):
            z = _two_proportion_z(x1, n1, x2, n2)
            comparisons.append((abs(z), abs(x1 / n1 - x2 / n2), f"party {party}, local {local:.17g}, remote {r1:.17g} vs {r2:.17g}"))

    m = len(comparisons)
    z_crit = NormalDist().inv_cdf(1 - significance / (2 * m))
    z_max, gap, where = max(comparisons, key=lambda c: c[0])
    return AuditReport(
        z_max <= z_crit,
        z_max,
        where,
        "empirical",
        z_crit,
        {"tests": m, "significance": significance, "proportion_gap": gap},
    )


def collect_tallies(
    model: CorrelationModel,
    quad: SettingsQuad,
    n_per_pair: int,
    seed: int,
    workers: int = 1,
) -> dict[tuple[str, float, float], tuple[int, int]]:
    """Simulate the four CHSH setting pairs and count each party's +1 outcomes."""
    tallies = {}
    for k, (_, x, y, _) in enumerate(TERMS):
        sx, sy = getattr(quad, x), getattr(quad, y)
        a, b = sample_outcomes(model, relative_angle(sx, sy), n_per_pair, seed, k, workers=workers)
        a_plus = int(np.count_nonzero(a == 1))
        b_plus = int(np.count_nonzero(b == 1))
        tallies[("A", sx, sy)] = (a_plus, n_per_pair - a_plus)
        tallies[("B", sy, sx)] = (b_plus, n_per_pair - b_plus)
    return tallies


def unary_audit(original: CorrelationModel, jammed: CorrelationModel, grid_size: int = DEFAULT_GRID) -> AuditReport:
    """Jamming must leave each party's marginals exactly as they were."""
    if not isinstance(jammed, Jammed) or jammed.inner != original:
        raise InputError("unary_audit needs jammed == apply_jamming(original)")
    if grid_size < 2:
        raise InputError(f"grid_size must be >= 2, got {grid_size}")
    grid = np.linspace(0.0, PI, grid_size)
    worst = (-1.0, "")
    for party in PARTIES:
        diff = np.abs(_marginal_table(jammed, grid, party) - _marginal_table(original, grid, party))
        i, k = np.unravel_index(int(np.argmax(diff)), diff.shape)
        if diff[i, k] > worst[0]:
            worst = (float(diff[i, k]), f"party {party}, local {grid[i]:.17g}, remote {grid[k]:.17g}")
    dev, where = worst
    return AuditReport(
        dev <= ANALYTIC_THRESHOLD,
        dev,
        where,
        "analytic",
        ANALYTIC_THRESHOLD,
        {"grid_size": grid_size, "model": jammed.describe()},
    )
