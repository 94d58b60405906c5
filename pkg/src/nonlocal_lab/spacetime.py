"""Light-cone geometry for jamming configurations (units with c = 1).

A configuration is three events: Alice's measurement ``a``, Bob's ``b``
and the jammer's button press ``j``. Alice and Bob can only compare
results inside the overlap of their forward cones, so jamming can stay
unreadable only if that overlap lies inside ``j``'s forward cone (the
binary condition).

In one space dimension the overlap is itself a forward cone whose apex is
computed in closed form, and the test is exact. In two or more dimensions
the overlap is searched numerically for a point outside ``j``'s cone; a
violation comes with a re-verified witness, while a pass only means none
was found within the search budget.
"""

from __future__ import annotations

import graphlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InputError
from .rng import derive_stream

CONE_TOL = 1e-12
LIGHTLIKE_TOL = 1e-12
WITNESS_TOL = 1e-9
DEFAULT_BUDGET = 64
FRAME_NOTE = "reversal judged by coordinate time of the supplied frame"


class Interval(str, Enum):
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"
    SPACELIKE = "spacelike"


@dataclass(frozen=True)
class Event:
    t: float
    x: tuple[float, ...]

    def __post_init__(self):
        x = (self.x,) if np.ndim(self.x) == 0 else tuple(self.x)
        x = tuple(float(v) for v in x)
        if not x:
            raise InputError("an event needs at least one spatial coordinate")
        if not math.isfinite(self.t) or not all(math.isfinite(v) for v in x):
            raise InputError(f"event coordinates must be finite: t={self.t!r}, x={x!r}")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)

    @property
    def d(self) -> int:
        return len(self.x)

    @property
    def xv(self) -> np.ndarray:
        return np.array(self.x)

    def coords(self) -> tuple[float, ...]:
        return (self.t, *self.x)


@dataclass(frozen=True)
class JammingConfig:
    a: Event
    b: Event
    j: Event

    def __post_init__(self):
        if not (self.a.d == self.b.d == self.j.d):
            raise InputError(f"events disagree on dimension: {self.a.d}, {self.b.d}, {self.j.d}")
        if self.a == self.b:
            raise InputError("Alice's and Bob's events coincide")

    @property
    def d(self) -> int:
        return self.a.d


@dataclass(frozen=True)
class ConfigVerdict:
    premises_ok: bool
    binary_ok: bool
    reversal: bool
    witness: Event | None = None
    numerical: bool = False
    min_slack: float = math.nan
    comparison_point: Event | None = None
    frame: str = FRAME_NOTE


def _same_dim(e: Event, f: Event) -> None:
    if e.d != f.d:
        raise InputError(f"dimension mismatch: {e.d} vs {f.d}")


def interval_class(e: Event, f: Event) -> Interval:
    _same_dim(e, f)
    dt = f.t - e.t
    dx2 = float(np.sum((f.xv - e.xv) ** 2))
    s = dt * dt - dx2
    if abs(s) <= LIGHTLIKE_TOL:
        return Interval.LIGHTLIKE
    return Interval.TIMELIKE if s > 0 else Interval.SPACELIKE


def slack(apex: Event, p: Event) -> float:
    """(t_p - t_apex) - |x_p - x_apex|; non-negative inside the closed forward cone."""
    _same_dim(apex, p)
    return (p.t - apex.t) - float(np.linalg.norm(p.xv - apex.xv))


def in_forward_cone(apex: Event, p: Event) -> bool:
    return slack(apex, p) >= -CONE_TOL


def overlap_apex(a: Event, b: Event) -> Event:
    """Earliest event in the intersection of the forward cones of a and b.

    If one event lies in the other's cone the later one is the answer.
    Otherwise the apex sits on the segment joining the spatial positions,
    on both cone boundaries.
    """
    _same_dim(a, b)
    if in_forward_cone(a, b):
        return b
    if in_forward_cone(b, a):
        return a
    diff = b.xv - a.xv
    dist = float(np.linalg.norm(diff))
    t = (a.t + b.t + dist) / 2
    along = (dist + b.t - a.t) / 2
    return Event(t, tuple(a.xv + along * diff / dist))


def overlap_apex_1d(a: Event, b: Event) -> Event:
    if a.d != 1 or b.d != 1:
        raise InputError("overlap_apex_1d needs one space dimension")
    return overlap_apex(a, b)


def boost(e: Event, velocity: float) -> Event:
    """Lorentz boost along the first spatial axis."""
    if not abs(velocity) < 1:
        raise InputError(f"boost velocity must satisfy |v| < 1, got {velocity}")
    gamma = 1.0 / math.sqrt(1.0 - velocity * velocity)
    x0 = e.x[0]
    return Event(gamma * (e.t - velocity * x0), (gamma * (x0 - velocity * e.t), *e.x[1:]))


# --- search in two or more space dimensions --------------------------------


class _Reduced:
    """The containment problem in a frame centred on j's spatial position.

    Only distances to x_a, x_b and x_j matter, so any point can be rotated
    into the span of those positions plus one orthogonal axis: at most 3
    coordinates whatever the ambient dimension.
    """

    def __init__(self, config: JammingConfig):
        a, b, j = config.a, config.b, config.j
        self.origin = j.xv
        m = np.vstack([a.xv - j.xv, b.xv - j.xv])
        _, sv, vt = np.linalg.svd(m, full_matrices=True)
        scale = max(1.0, float(np.abs(m).max()))
        rank = int(np.sum(sv > 1e-12 * scale))
        k = min(config.d, rank + 1)
        self.basis = vt[:k]
        self.A = self.basis @ (a.xv - j.xv)
        self.B = self.basis @ (b.xv - j.xv)
        self.ta, self.tb, self.tj = a.t, b.t, j.t
        self.k = k
        self.scale = max(1.0, float(np.linalg.norm(self.A)), float(np.linalg.norm(self.B)),
                         abs(a.t - j.t), abs(b.t - j.t))

    def floor(self, y: np.ndarray) -> np.ndarray:
        """Earliest time above spatial point(s) y that lies in both cones."""
        fa = self.ta + np.linalg.norm(y - self.A, axis=-1)
        fb = self.tb + np.linalg.norm(y - self.B, axis=-1)
        return np.maximum(fa, fb)

    def h(self, y: np.ndarray) -> np.ndarray:
        """Smallest j-slack of overlap points above y."""
        return self.floor(y) - self.tj - np.linalg.norm(y, axis=-1)

    def h_and_grad(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        da, db = y - self.A, y - self.B
        na = np.sqrt(np.einsum("ij,ij->i", da, da))
        nb = np.sqrt(np.einsum("ij,ij->i", db, db))
        ny = np.sqrt(np.einsum("ij,ij->i", y, y))
        fa, fb = self.ta + na, self.tb + nb
        use_a = fa >= fb
        h = np.where(use_a, fa, fb) - self.tj - ny
        d_act = np.where(use_a[:, None], da, db)
        n_act = np.where(use_a, na, nb)
        g = d_act / np.where(n_act > 0, n_act, 1.0)[:, None] - y / np.where(ny > 0, ny, 1.0)[:, None]
        return h, g

    def asymptotic(self, n: np.ndarray) -> np.ndarray:
        """Limit of h along rays y = r n, r -> infinity."""
        return np.maximum(self.ta - n @ self.A, self.tb - n @ self.B) - self.tj

    def directions(self) -> np.ndarray:
        k = self.k
        if k == 1:
            return np.array([[1.0], [-1.0]])
        if k == 2:
            phi = np.linspace(0.0, 2 * np.pi, 720, endpoint=False)
            dirs = [np.stack([np.cos(phi), np.sin(phi)], axis=1)]
        else:
            # Fibonacci sphere
            i = np.arange(2000) + 0.5
            z = 1 - 2 * i / 2000
            r = np.sqrt(1 - z * z)
            phi = np.pi * (1 + 5**0.5) * i
            dirs = [np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)]
        # directions orthogonal to A or B are where the asymptote is often lowest
        special = []
        for v in (self.A, self.B):
            nv = np.linalg.norm(v)
            if nv > 0:
                u = v / nv
                special += [u, -u]
                for e in np.eye(k):
                    w = e - (e @ u) * u
                    nw = np.linalg.norm(w)
                    if nw > 1e-9:
                        special += [w / nw, -w / nw]
        if special:
            dirs.append(np.array(special))
        return np.vstack(dirs)

    def lift(self, y: np.ndarray) -> Event:
        t = float(self.floor(y[None])[0])
        # nudge upward so rounding cannot push the point out of either cone
        t += 1e-13 * max(1.0, abs(t))
        return Event(t, tuple(self.origin + self.basis.T @ y))


def _descend(red: _Reduced, starts: np.ndarray, iterations: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Normalised-gradient descent with per-start step adaptation.

    Stops once no start has improved by more than a relative 1e-12 over
    the last 20 iterations.
    """
    y = starts.copy()
    val, g = red.h_and_grad(y)
    step = np.full(len(y), red.scale)
    checkpoint = val.copy()
    for it in range(1, iterations + 1):
        gn = np.linalg.norm(g, axis=1, keepdims=True)
        direction = g / np.where(gn > 1e-15, gn, np.inf)
        trial = y - step[:, None] * direction
        tv, tg = red.h_and_grad(trial)
        better = tv < val
        y = np.where(better[:, None], trial, y)
        g = np.where(better[:, None], tg, g)
        val = np.where(better, tv, val)
        step = np.where(better, step * 1.5, step * 0.5)
        if it % 20 == 0:
            if np.all(checkpoint - val <= 1e-12 * red.scale):
                break
            checkpoint = val.copy()
    return y, val


def _search_witness(config: JammingConfig, budget: int, seed: int) -> tuple[float, Event | None]:
    red = _Reduced(config)
    candidates: list[tuple[float, np.ndarray]] = []

    # rays to infinity: the overlap is unbounded and the slack can keep
    # falling along a light-like direction
    dirs = red.directions()
    limits = red.asymptotic(dirs)
    best_dir = dirs[int(np.argmin(limits))]
    best_limit = float(limits.min())
    if best_limit < -WITNESS_TOL:
        r = red.scale
        for _ in range(60):
            y = r * best_dir
            val = float(red.h(y[None])[0])
            if val < best_limit / 2:
                candidates.append((val, y))
                break
            r *= 2

    found = _first_verified(config, red, candidates)
    if found is not None:
        return found

    rng = derive_stream(seed, 0)
    radius = 4 * red.scale
    cloud = rng.normal(size=(16 * budget, red.k))
    cloud *= (radius * rng.random((len(cloud), 1)) ** (1 / red.k)) / np.linalg.norm(cloud, axis=1, keepdims=True)
    apex_y = 0.5 * (red.A + red.B)
    cloud = np.vstack([cloud, red.A, red.B, apex_y, np.zeros(red.k), best_dir * radius])
    vals = red.h(cloud)
    order = np.argsort(vals)[:budget]
    ys, vs = _descend(red, cloud[order])
    for v, y in zip(vs, ys):
        candidates.append((float(v), y))

    found = _first_verified(config, red, candidates)
    if found is not None:
        return found
    # the infimum may only be approached at infinity
    return min(min(c[0] for c in candidates), best_limit), None


def _first_verified(config, red, candidates):
    for val, y in sorted(candidates, key=lambda c: c[0]):
        if val >= -WITNESS_TOL:
            break
        p = red.lift(y)
        s = slack(config.j, p)
        if in_forward_cone(config.a, p) and in_forward_cone(config.b, p) and s < -WITNESS_TOL:
            return s, p
    return None


def binary_condition(config: JammingConfig, search_budget: int = DEFAULT_BUDGET, seed: int = 0) -> ConfigVerdict:
    """Is the overlap of the cones of a and b inside the cone of j?

    ``search_budget`` is the number of local descents in d >= 2.
    """
    if search_budget < 1:
        raise InputError(f"search_budget must be >= 1, got {search_budget}")
    m = overlap_apex(config.a, config.b)
    reversal = config.j.t > config.a.t and config.j.t > config.b.t
    premises = _premises(config)
    if config.d == 1:
        s = slack(config.j, m)
        ok = s >= -CONE_TOL
        return ConfigVerdict(premises, ok, reversal, None if ok else m, False, s, m)
    s, witness = _search_witness(config, search_budget, seed)
    return ConfigVerdict(premises, witness is None, reversal, witness, True, s, m)


def _premises(config: JammingConfig) -> bool:
    pairs = ((config.a, config.b), (config.a, config.j), (config.b, config.j))
    return all(interval_class(e, f) is Interval.SPACELIKE for e, f in pairs)


def config_verdict(config: JammingConfig, search_budget: int = DEFAULT_BUDGET, seed: int = 0) -> ConfigVerdict:
    return binary_condition(config, search_budget, seed)


# --- causal loops ------------------------------------------------------------


@dataclass(frozen=True)
class LoopCheck:
    acyclic: bool
    nodes: dict[str, Event]
    edges: list[tuple[str, str, str]]
    cycle: list[str] | None = None
    extras: dict = field(default_factory=dict, compare=False)


def _coincide(e: Event, f: Event) -> bool:
    return abs(e.t - f.t) <= CONE_TOL and float(np.max(np.abs(e.xv - f.xv))) <= CONE_TOL


def causal_loop_check(configs: Sequence[JammingConfig]) -> LoopCheck:
    """Look for a cycle among light-speed influences plus jamming influences.

    Nodes are every a_i, b_i, j_i and the earliest comparison point m_i of
    each configuration; coincident events share a node. Edges are e -> f
    whenever f is in the forward cone of e, plus j_i -> m_i.
    """
    if not configs:
        return LoopCheck(True, {}, [])
    d = configs[0].d
    raw: list[tuple[str, Event]] = []
    jam_pairs = []
    for i, cfg in enumerate(configs):
        if cfg.d != d:
            raise InputError(f"configuration {i} has dimension {cfg.d}, expected {d}")
        if not _premises(cfg):
            raise InputError(f"configuration {i} violates the spacelike premises")
        raw += [(f"a{i}", cfg.a), (f"b{i}", cfg.b), (f"j{i}", cfg.j), (f"m{i}", overlap_apex(cfg.a, cfg.b))]
        jam_pairs.append((f"j{i}", f"m{i}"))

    # merge coincident events into one node
    groups: list[tuple[list[str], Event]] = []
    for label, ev in raw:
        for names, rep in groups:
            if _coincide(rep, ev):
                names.append(label)
                break
        else:
            groups.append(([label], ev))
    node_of = {}
    nodes = {}
    for names, ev in groups:
        key = "=".join(names)
        nodes[key] = ev
        for n in names:
            node_of[n] = key

    edges = []
    keys = list(nodes)
    for e in keys:
        for f in keys:
            if e != f and in_forward_cone(nodes[e], nodes[f]):
                edges.append((e, f, "causal"))
    for j, m in jam_pairs:
        if node_of[j] != node_of[m]:
            edges.append((node_of[j], node_of[m], "jamming"))

    preds: dict[str, set[str]] = {k: set() for k in keys}
    for src, dst, _ in edges:
        preds[dst].add(src)
    try:
        tuple(graphlib.TopologicalSorter(preds).static_order())
    except graphlib.CycleError as exc:
        return LoopCheck(False, nodes, edges, list(exc.args[1]))
    return LoopCheck(True, nodes, edges)
