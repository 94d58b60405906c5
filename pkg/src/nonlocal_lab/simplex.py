"""Dense two-phase simplex for small equality-form LPs.

    maximize c.x  subject to  A x = b,  x >= 0

Bland's rule (smallest eligible index enters, ties in the ratio test go to
the smallest basic index) guarantees termination on degenerate problems,
which the nonsignaling polytope is full of. Redundant equality rows are
detected after phase one and dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9
MAX_ITERATIONS = 10_000


class InfeasibleError(ConsistencyError):
    """The constraints admit no non-negative solution."""


class UnboundedError(ConsistencyError):
    """The objective grows without bound on the feasible set."""


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    value: float
    iterations: int
    basis: tuple[int, ...]


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]


def _run(T: np.ndarray, basis: list[int], c: np.ndarray, n_cols: int, iterations: int) -> int:
    """Pivot to optimality over the first ``n_cols`` columns. Mutates T and basis."""
    while True:
        if iterations >= MAX_ITERATIONS:
            raise ConsistencyError(f"simplex exceeded {MAX_ITERATIONS} iterations")
        reduced = c[:n_cols] - c[basis] @ T[:, :n_cols]
        entering = next((j for j in range(n_cols) if reduced[j] > PIVOT_TOL), None)
        if entering is None:
            return iterations
        column = T[:, entering]
        candidates = [i for i in range(T.shape[0]) if column[i] > PIVOT_TOL]
        if not candidates:
            raise UnboundedError(f"objective unbounded along column {entering}")
        ratios = [(T[i, -1] / column[i], basis[i], i) for i in candidates]
        best = min(r for r, _, _ in ratios)
        # Bland: among (near-)ties pick the smallest basic variable index
        leaving = min((bv, i) for r, bv, i in ratios if r <= best + PIVOT_TOL)[1]
        _pivot(T, leaving, entering)
        basis[leaving] = entering
        iterations += 1


def maximize(c, A_eq, b_eq) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.array(A_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError(f"shape mismatch: c {c.shape}, A {A.shape}, b {b.shape}")
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    # phase one: artificial variables n .. n+m-1 start in the basis
    T = np.hstack([A, np.eye(m), b[:, None]])
    basis = list(range(n, n + m))
    phase1_c = np.concatenate([np.zeros(n), -np.ones(m)])
    iterations = _run(T, basis, phase1_c, n + m, 0)
    if phase1_c[basis] @ T[:, -1] < -FEAS_TOL:
        raise InfeasibleError("equality constraints have no non-negative solution")

    # drive zero-level artificials out; a row with no usable pivot is redundant
    keep = []
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if abs(T[i, j]) > PIVOT_TOL), None)
            if col is None:
                continue
            _pivot(T, i, col)
            basis[i] = col
            iterations += 1
        keep.append(i)
    T = np.hstack([T[keep, :n], T[keep, -1:]])
    basis = [basis[i] for i in keep]

    iterations = _run(T, basis, c, n, iterations)
    x = np.zeros(n)
    x[basis] = T[:, -1]
    return LPResult(x=x, value=float(c @ x), iterations=iterations, basis=tuple(basis))
