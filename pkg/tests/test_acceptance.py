"""Exit criteria, one test per criterion.

Each test prints a PASS/FAIL line into the pytest terminal summary
(section "acceptance criteria"). Run alone with

    pytest tests/test_acceptance.py -v
"""

import math
import time

import numpy as np
import pytest

from nonlocal_lab.audit import (
    collect_tallies,
    marginal,
    nonsignaling_audit_analytic,
    nonsignaling_audit_empirical,
    unary_audit,
)
from nonlocal_lab.chsh import canonical_quad, chsh_grid_max_abs, chsh_value
from nonlocal_lab.harness import parse_config, run
from nonlocal_lab.models import (
    PI,
    JointDistribution,
    LhvSaw,
    QuantumSinglet,
    SuperquantumPR,
    apply_jamming,
)
from nonlocal_lab.optimize import lhv_max_chsh, nonsignaling_lp_max_chsh, tsirelson_search
from nonlocal_lab.spacetime import (
    Event,
    Interval,
    JammingConfig,
    binary_condition,
    causal_loop_check,
    config_verdict,
    interval_class,
)

ROOT2 = math.sqrt(2)
BASE_MODELS = [LhvSaw(), QuantumSinglet(), SuperquantumPR("smooth-sine"), SuperquantumPR("linear")]
BUILT_IN = BASE_MODELS + [apply_jamming(m, form) for m in BASE_MODELS for form in ("saw", "zero")]


def best_time(fn, repeats=20):
    fn()
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


class LeakySinglet(QuantumSinglet):
    """Alice's +1 probability rises by 1e-3 when the relative angle is below pi/2."""

    name = "leaky-singlet"

    def joint(self, theta):
        d = JointDistribution.from_correlation(-math.cos(theta))
        if theta < PI / 2:
            return JointDistribution(d.p_pp + 1e-3, d.p_pm, d.p_mp - 1e-3, d.p_mm)
        return d


def test_criterion_01_superquantum_reaches_four(criterion):
    quad = canonical_quad()
    values = {ramp: chsh_value(SuperquantumPR(ramp), quad).value for ramp in ("smooth-sine", "linear")}
    elapsed = max(best_time(lambda r=ramp: chsh_value(SuperquantumPR(r), quad)) for ramp in values)
    ok = all(abs(v - 4.0) <= 1e-12 for v in values.values()) and elapsed < 1e-3
    criterion(1, "CHSH = 4 for the superquantum model, both ramps", ok, f"values {values}, {elapsed * 1e3:.3f} ms")


def test_criterion_02_lhv_enumeration(criterion):
    r = lhv_max_chsh()
    elapsed = best_time(lhv_max_chsh)
    ok = r.value == 2 and r.extras["min"] == -2 and r.iterations == 16 and elapsed < 1e-3
    criterion(2, "LHV enumeration max 2, min -2", ok, f"max {r.value}, min {r.extras['min']}, {elapsed * 1e3:.3f} ms")


def test_criterion_03_tsirelson(criterion):
    start = time.perf_counter()
    r = tsirelson_search(1e-9, restarts=10, seed=2024)
    elapsed = time.perf_counter() - start
    runs = r.extras["runs"]
    worst = max(abs(v - 2 * ROOT2) for v in runs)
    ok = abs(r.value - 2 * ROOT2) <= 1e-6 and len(runs) == 11 and worst <= 1e-6 and elapsed < 10
    criterion(3, "Tsirelson search 2*sqrt(2), stable over 10 restarts", ok, f"worst run error {worst:.2e}, {elapsed:.2f} s")


def test_criterion_04_nonsignaling_lp(criterion):
    start = time.perf_counter()
    r = nonsignaling_lp_max_chsh()
    elapsed = time.perf_counter() - start
    audit = nonsignaling_audit_analytic(r.argmax)
    ok = abs(r.value - 4) <= 1e-9 and audit.passed and audit.max_deviation <= 1e-9 and elapsed < 1
    criterion(4, "nonsignaling LP reaches 4 with a nonsignaling box", ok,
              f"value {r.value!r}, deviation {audit.max_deviation:.1e}, {elapsed * 1e3:.1f} ms")


def test_criterion_05_nonsignaling_audits(criterion):
    start = time.perf_counter()
    analytic = {m.describe(): nonsignaling_audit_analytic(m, 100).max_deviation for m in BUILT_IN}
    empirical = {}
    for k, m in enumerate(BASE_MODELS):
        tallies = collect_tallies(m, canonical_quad(), 10**6, seed=500 + k)
        empirical[m.describe()] = nonsignaling_audit_empirical(tallies, 0.01).passed
    leak = nonsignaling_audit_analytic(LeakySinglet(), 100)
    gap = nonsignaling_audit_empirical({("A", 0.0, 0.0): (600_000, 400_000), ("A", 0.0, 1.0): (500_000, 500_000)}, 0.01)
    elapsed = time.perf_counter() - start
    ok = (
        all(v == 0.0 for v in analytic.values())
        and all(empirical.values())
        and not leak.passed
        and abs(leak.max_deviation - 1e-3) <= 1e-12
        and not gap.passed
        and elapsed < 30
    )
    criterion(5, "nonsignaling audits: analytic 0.0, empirical pass, planted fault caught", ok,
              f"max analytic {max(analytic.values())}, planted deviation {leak.max_deviation:.3e}, {elapsed:.1f} s")


def test_criterion_06_unary_jamming(criterion):
    start = time.perf_counter()
    deviations = [unary_audit(m, apply_jamming(m, form), 100).max_deviation for m in BASE_MODELS for form in ("saw", "zero")]
    grid = np.linspace(0, PI, 60)
    exact_half = all(
        marginal(apply_jamming(m), local, remote, party) == 0.5
        for m in BASE_MODELS
        for local in grid
        for remote in grid[::6]
        for party in "AB"
    )
    jammed_max = max(chsh_grid_max_abs(apply_jamming(m, form), 50)[0] for m in BASE_MODELS for form in ("saw", "zero"))
    elapsed = time.perf_counter() - start
    ok = all(d == 0.0 for d in deviations) and exact_half and jammed_max <= 2 + 1e-9 and elapsed < 60
    criterion(6, "jamming keeps marginals at 1/2 and CHSH <= 2", ok, f"grid max {jammed_max!r}, {elapsed:.1f} s")


def _grid_oracle_1d(cfg_arr):
    """Dense-grid feasibility search for a point in cone(a) & cone(b) outside cone(j).

    Configurations have coordinates on a 1/4 lattice in [-1, 1], so every
    relevant point lies on the 1/8 grid below and the arithmetic is exact.
    """
    T, X = np.meshgrid(np.arange(-1, 3 + 1e-9, 0.125), np.arange(-3, 3 + 1e-9, 0.125), indexing="ij")
    T, X = T.ravel()[None, :], X.ravel()[None, :]
    ta, xa, tb, xb, tj, xj = (cfg_arr[:, k : k + 1] for k in range(6))
    in_a = (T - ta) >= np.abs(X - xa)
    in_b = (T - tb) >= np.abs(X - xb)
    in_j = (T - tj) >= np.abs(X - xj)
    return ~np.any(in_a & in_b & ~in_j, axis=1)


def test_criterion_07_binary_condition_1d(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    lattice = np.arange(-1, 1.0001, 0.25)
    cfgs = rng.choice(lattice, size=(120_000, 6))
    cfgs = cfgs[(cfgs[:, 0] != cfgs[:, 2]) | (cfgs[:, 1] != cfgs[:, 3])][:100_000]
    assert len(cfgs) == 100_000
    oracle = np.concatenate([_grid_oracle_1d(cfgs[i : i + 2000]) for i in range(0, len(cfgs), 2000)])
    exact = np.array(
        [binary_condition(JammingConfig(Event(c[0], c[1]), Event(c[2], c[3]), Event(c[4], c[5]))).binary_ok for c in cfgs]
    )
    agreement = float(np.mean(exact == oracle))
    v = config_verdict(JammingConfig(Event(0, -1), Event(0, 1), Event(0.9, 0)))
    elapsed = time.perf_counter() - start
    ok = agreement == 1.0 and v.premises_ok and v.binary_ok and v.reversal and elapsed < 60
    criterion(7, "1-d binary condition agrees with grid oracle; reversal example allowed", ok,
              f"agreement {agreement:.5f} on {len(cfgs)} configs ({int(exact.sum())} allowed), {elapsed:.1f} s")


def _random_late_jammer_2d(rng):
    while True:
        t = rng.uniform(-2, 2, 3)
        x = rng.uniform(-3, 3, (3, 2))
        if not (t[0] < t[2] and t[1] < t[2]):
            continue
        pairs = ((0, 1), (0, 2), (1, 2))
        if all((t[i] - t[k]) ** 2 < np.sum((x[i] - x[k]) ** 2) - 1e-9 for i, k in pairs):
            return JammingConfig(*(Event(t[i], tuple(x[i])) for i in range(3)))


def test_criterion_08_no_late_jammer_in_2d(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    failures = 0
    for _ in range(10_000):
        cfg = _random_late_jammer_2d(rng)
        v = config_verdict(cfg)
        w = v.witness
        verified = (
            w is not None
            and v.premises_ok
            and (w.t - cfg.a.t) >= math.dist(w.x, cfg.a.x) - 1e-12
            and (w.t - cfg.b.t) >= math.dist(w.x, cfg.b.x) - 1e-12
            and (w.t - cfg.j.t) - math.dist(w.x, cfg.j.x) < -1e-9
        )
        failures += v.binary_ok or not verified
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 120
    criterion(8, "2-d configs with a late jammer always fail, with verified witness", ok,
              f"{failures} exceptions in 10000, {elapsed:.1f} s")


def _random_allowed_config(rng, d):
    while True:
        t = rng.uniform(-2, 2, 3)
        x = rng.uniform(-3, 3, (3, d))
        try:
            cfg = JammingConfig(*(Event(t[i], tuple(x[i])) for i in range(3)))
        except ValueError:
            continue
        pairs = ((cfg.a, cfg.b), (cfg.a, cfg.j), (cfg.b, cfg.j))
        if any(interval_class(e, f) is not Interval.SPACELIKE for e, f in pairs):
            continue
        v = config_verdict(cfg)
        if v.premises_ok and v.binary_ok:
            return cfg


def test_criterion_09_no_causal_loops(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(9)
    cyclic = 0
    cross_edges = 0
    for k in range(1000):
        d = 2 if k % 5 == 0 else 1
        configs = [_random_allowed_config(rng, d) for _ in range(rng.integers(2, 5))]
        r = causal_loop_check(configs)
        cyclic += not r.acyclic
        cross_edges += sum(1 for s, t, _ in r.edges if s[-1] != t[-1])
    elapsed = time.perf_counter() - start
    ok = cyclic == 0 and elapsed < 30
    criterion(9, "multi-jammer ensembles obeying the binary condition are acyclic", ok,
              f"{cyclic} cyclic of 1000, {cross_edges} cross-config edges, {elapsed:.1f} s")


SPECS = [
    "command = chsh\nmodel = quantum-singlet\nn = 300000\n",
    "command = audit\nmodel = superquantum-pr\naudit = all\nn = 200000\ngrid = 20\n",
    "command = optimize\nmethod = all\nrestarts = 3\n",
    "command = jamming\ndim = 2\na = 0,-1,0\nb = 0,1,0\nj = 0.9,0,0\n",
    "command = jamming\ndim = 2\na = 0,-1,0\nb = 0,1,0\nj = -0.5,0,0\n",
    "command = sample\nmodel = lhv-saw\nangle = 1.1\nn = 150000\n",
]


def test_criterion_10_determinism(tmp_path, criterion):
    mismatches = []
    for i, base in enumerate(SPECS):
        for fmt in ("csv", "json"):
            outputs = []
            for run_no, workers in enumerate((1, 1, 4)):
                out = tmp_path / f"{i}_{run_no}.{fmt}"
                run(parse_config(base + f"seed = 424242\nworkers = {workers}\nformat = {fmt}\nout = {out}\n"))
                outputs.append(out.read_bytes())
            if len(set(outputs)) != 1:
                mismatches.append((base.splitlines()[0], fmt))
    criterion(10, "equal seeds give byte-identical outputs across worker counts", not mismatches,
              f"{2 * len(SPECS)} spec/format pairs, mismatches {mismatches}")
