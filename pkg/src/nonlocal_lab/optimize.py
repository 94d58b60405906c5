"""The three CHSH bounds, each reached by its own method.

* local deterministic strategies, enumerated exhaustively: 2
* singlet correlations, grid search over angles plus a local polish: 2 sqrt 2
* nonsignaling boxes, linear programming over the polytope: 4
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import minimize

from . import simplex
from .box import CHSH_SIGNS, OUTCOMES, NsBox
from .chsh import SettingsQuad, chsh_grid, chsh_value
from .errors import ConsistencyError, InputError
from .models import PI, CorrelationModel, QuantumSinglet
from .rng import DEFAULT_SEED, derive_stream

REEVAL_TOL = 1e-9


@dataclass(frozen=True)
class OptimumReport:
    value: float
    argmax: Any
    method: str
    iterations: int
    converged: bool = True
    extras: dict = field(default_factory=dict, compare=False)


def strategy_chsh(strategy: tuple[int, int, int, int]) -> int:
    """CHSH value of a deterministic strategy (A(a), A(a'), B(b), B(b'))."""
    aa, aap, bb, bbp = strategy
    return aa * bb + aa * bbp + aap * bb - aap * bbp


def all_strategies() -> list[tuple[int, int, int, int]]:
    # numeric lexicographic order: -1 sorts before +1
    return list(itertools.product((-1, 1), repeat=4))


def lhv_max_chsh() -> OptimumReport:
    strategies = all_strategies()
    values = [strategy_chsh(s) for s in strategies]
    best, worst = max(values), min(values)
    maximizers = [s for s, v in zip(strategies, values) if v == best]
    minimizers = [s for s, v in zip(strategies, values) if v == worst]
    return OptimumReport(
        value=float(best),
        argmax=maximizers[0],
        method="enumeration",
        iterations=len(strategies),
        extras={
            "min": float(worst),
            "argmin": minimizers[0],
            "maximizers": maximizers,
            "minimizers": minimizers,
            "values": dict(zip(strategies, values)),
        },
    )


def _quad_from_free(angles) -> SettingsQuad:
    a, b, b_prime = (float(v) for v in angles)
    return SettingsQuad(a=a, a_prime=0.0, b=b, b_prime=b_prime)


def _abs_chsh(model: CorrelationModel, angles) -> float:
    return abs(chsh_value(model, _quad_from_free(angles)).value)


def _polish(model, start, tolerance, max_iter):
    res = minimize(
        lambda v: -_abs_chsh(model, v),
        np.asarray(start, dtype=float),
        method="Nelder-Mead",
        options={"xatol": tolerance, "fatol": tolerance * 1e-3, "maxiter": max_iter, "maxfev": 4 * max_iter},
    )
    return res.x, -float(res.fun), int(res.nit), bool(res.success)


def tsirelson_search(
    tolerance: float = 1e-9,
    restarts: int = 0,
    seed: int = DEFAULT_SEED,
    grid: int = 50,
    model: CorrelationModel | None = None,
    max_iter: int = 5000,
) -> OptimumReport:
    """Maximise |CHSH| of the singlet over measurement angles.

    a' is pinned to 0 (only relative angles matter), the remaining three
    angles are scanned on a ``grid^3`` lattice of [0, pi) and the best
    lattice point is polished with Nelder-Mead. Each of ``restarts``
    extra runs polishes from a random point drawn from stream
    ``(seed, restart)``; the best run is reported and every run's value is
    kept in ``extras["runs"]``.
    """
    if not tolerance > 0:
        raise InputError(f"tolerance must be positive, got {tolerance}")
    model = model or QuantumSinglet()
    g = np.arange(grid) * (PI / grid)
    values, _ = next(chsh_grid(model, grid, fix_a_prime=True, chunk=1))
    absval = np.abs(values[0])
    i, j, k = np.unravel_index(int(np.argmax(absval)), absval.shape)
    grid_best = float(absval[i, j, k])
    # chsh_grid's free axes are (a, b, b')
    starts = [np.array([g[i], g[j], g[k]])]
    for r in range(restarts):
        starts.append(derive_stream(seed, r).uniform(0.0, PI, size=3))

    runs = []
    total_iter = 0
    all_converged = True
    for start in starts:
        x, val, nit, ok = _polish(model, start, tolerance, max_iter)
        total_iter += nit
        all_converged &= ok
        runs.append((val, x))
    best_val, best_x = max(runs, key=lambda r: r[0])
    quad = _quad_from_free(best_x)
    value = abs(chsh_value(model, quad).value)
    if abs(value - best_val) > REEVAL_TOL:
        raise ConsistencyError("re-evaluated optimum disagrees with the optimiser")
    return OptimumReport(
        value=value,
        argmax=quad,
        method="continuous",
        iterations=total_iter,
        converged=all_converged,
        extras={"grid_value": grid_best, "runs": [v for v, _ in runs]},
    )


def ns_constraints() -> tuple[np.ndarray, np.ndarray]:
    """Normalisation and nonsignaling equalities on the 16-vector of p(ab|xy).

    Rows: 4 normalisations, 4 Alice-marginal equalities, 4 Bob-marginal
    equalities. Four of the marginal rows are implied by the others.
    """
    idx = lambda x, y, i, j: 8 * x + 4 * y + 2 * i + j
    rows, rhs = [], []
    for x, y in itertools.product(range(2), repeat=2):
        row = np.zeros(16)
        for i, j in itertools.product(range(2), repeat=2):
            row[idx(x, y, i, j)] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for x, i in itertools.product(range(2), repeat=2):
        row = np.zeros(16)
        for j in range(2):
            row[idx(x, 0, i, j)] += 1.0
            row[idx(x, 1, i, j)] -= 1.0
        rows.append(row)
        rhs.append(0.0)
    for y, j in itertools.product(range(2), repeat=2):
        row = np.zeros(16)
        for i in range(2):
            row[idx(0, y, i, j)] += 1.0
            row[idx(1, y, i, j)] -= 1.0
        rows.append(row)
        rhs.append(0.0)
    return np.array(rows), np.array(rhs)


def chsh_objective() -> np.ndarray:
    """CHSH as a linear functional of the flattened box."""
    c = np.zeros((2, 2, 2, 2))
    for x, y, i, j in itertools.product(range(2), repeat=4):
        c[x, y, i, j] = CHSH_SIGNS[x, y] * OUTCOMES[i] * OUTCOMES[j]
    return c.reshape(16)


def nonsignaling_lp_max_chsh() -> OptimumReport:
    A, b = ns_constraints()
    c = chsh_objective()
    res = simplex.maximize(c, A, b)
    box = NsBox(np.clip(res.x, 0.0, None))
    value = box.chsh()
    if abs(value - res.value) > REEVAL_TOL:
        raise ConsistencyError("LP objective disagrees with the box's CHSH value")
    return OptimumReport(value=value, argmax=box, method="LP", iterations=res.iterations)
