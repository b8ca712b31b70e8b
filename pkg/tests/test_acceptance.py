"""End-to-end acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per criterion is
printed in the terminal summary.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from lipscope.dlnn import make_dlnn3, make_dlnnN, weight_index
from lipscope.fields import resolve
from lipscope.numerics import FdConfig, derivative_errors, quad_segment
from lipscope.probes import (
    fit_rho_constants,
    hessian_bound_check,
    local_lipschitz_estimate,
    rho_integrated_check,
)
from lipscope.sampling import Region
from lipscope.segments import Partition, Segment, build_chain_partition, chaining_holds, riemann_sum
from lipscope.witness import (
    dlnn3_witness_spec,
    dlnnN_witness_spec,
    log_grid,
    refute_rho_order,
    witness_dlnn3,
    witness_dlnnN,
)

E = math.e
SLACK = 1e-12

CATALOG = ["monomial:0", "monomial:1", "monomial:2", "expce", "fracce:0.25", "fracce:0.5", "fracce:0.75",
           "dlnn3", "dlnnN:4,1", "dlnnN:4,2", "dlnnN:6,3"]
NETWORKS = [(4, 1), (4, 2), (6, 3)]


def test_derivatives_match_finite_differences(criterion):
    with criterion(1, "analytic vs finite-difference derivatives on every catalog function"):
        cfg = FdConfig()
        start = time.perf_counter()
        for k, fn_id in enumerate(CATALOG):
            f = resolve(fn_id)
            X = np.random.default_rng(1000 + k).uniform(-3, 3, size=(100, f.dim))
            res = derivative_errors(f, X, cfg)
            assert res.grad_error <= 1e-5, (fn_id, res.grad_error)
            assert res.hess_error <= 1e-4, (fn_id, res.hess_error)
        assert time.perf_counter() - start < 30


@pytest.mark.parametrize("rho", [1.0, 2.0])
def test_exp_counterexample_bound(criterion, rho):
    with criterion(2, "expce satisfies |f''| <= e + |f'|^rho on [-30, 30] for rho in {1, 2}", f"rho={rho:g}"):
        res = hessian_bound_check(resolve("expce"), rho, E, 1.0, Region.box(-30, 30, seed=2), 10**5)
        assert res.max_violation <= 0


@pytest.mark.parametrize("rho", [0.25, 0.5, 0.75])
def test_fractional_counterexample_bound(criterion, rho):
    with criterion(3, "fracce bound with C0 = C1 = 1/(1-rho) on [-1e3, 1e3] for rho in {0.25, 0.5, 0.75}", f"rho={rho:g}"):
        c = 1.0 / (1.0 - rho)
        res = hessian_bound_check(resolve(f"fracce:{rho:g}"), rho, c, c, Region.box(-1e3, 1e3, seed=3), 10**5)
        assert res.max_violation <= 0


def test_exp_counterexample_not_globally_lipschitz(criterion):
    with criterion(4, "expce local estimate at 10 beats every fit on [-5, 5]; rho=0 fit grows >= 100x"):
        f = resolve("expce")
        local = local_lipschitz_estimate(f, Region.ball(10.0, 0.5, seed=4), 10**4, workers=1)
        assert local.estimate >= math.exp(9.5)
        box = Region.box(-5, 5, seed=4)
        for rho in (0.0, 0.5, 1.0, 2.0):
            fit = fit_rho_constants(f, rho, box, 10**4)
            # largest Lipschitz constant the fitted bound allows anywhere on the box
            implied = fit.C0 + fit.C1 * math.exp(5.0) ** rho
            assert local.estimate > implied, (rho, implied)
        narrow = fit_rho_constants(f, 0.0, Region.box(-5, 5, seed=4), 10**4)
        wide = fit_rho_constants(f, 0.0, Region.box(-15, 15, seed=4), 10**4)
        assert wide.C0 >= 100 * narrow.C0
        # the box maximum of |f''| is e^R, attained at the sampled corners
        assert narrow.C0 == pytest.approx(math.exp(5), rel=1e-12)
        assert wide.C0 == pytest.approx(math.exp(15), rel=1e-12)


def test_shallow_network_witness(criterion):
    with criterion(5, "dlnn3 witness bounds on 32 n in [2, 1e4] and refutation for rho in {0, 0.5, 1, 2}"):
        start = time.perf_counter()
        f = make_dlnn3()
        grid = log_grid(2, 10**4, 32)
        assert len(grid) == 32
        for n in grid:
            x, _ = witness_dlnn3(n, 0.0)
            g = math.sqrt(math.fsum(v * v for v in f.gradient(x)))
            ln = math.log(n)
            assert 0.5 * ln * (1 - SLACK) <= g <= 2 * ln * (1 + SLACK), n
            assert f.hessian(x)[0, 0] >= n * ln**2 / 4 * (1 - SLACK), n
        spec = dlnn3_witness_spec()
        for rho in (0.0, 0.5, 1.0, 2.0):
            assert refute_rho_order(spec, rho, grid).verdict == "refuted", rho
        assert time.perf_counter() - start < 5


@pytest.mark.parametrize("N,d", NETWORKS)
def test_deep_network_witness(criterion, N, d):
    with criterion(6, "dlnnN witness bounds and refutation for rho in {0, 1, 2} at (4,1), (4,2), (6,3)", f"N={N}, d={d}"):
        f = make_dlnnN(N, d)
        k = weight_index(N, d, N, 0, 0)
        grid = log_grid(3, 10**4, 32)
        for n in grid:
            theta = witness_dlnnN(N, d, n, 0.0)[0].flatten()
            g2 = math.fsum(v * v for v in f.gradient(theta))
            ln = math.log(n)
            assert ln**2 / 16 * (1 - SLACK) <= g2 <= N * ln**2 / 2 * (1 + SLACK), n
            exact = n**3 * ln**2 / (2 * (1 + n) ** 2)
            assert abs(abs(f.hessian(theta)[k, k]) - exact) <= 1e-8 * exact, n
        spec = dlnnN_witness_spec(N, d)
        for rho in (0.0, 1.0, 2.0):
            assert refute_rho_order(spec, rho, grid).verdict == "refuted", rho


def test_depth_four_width_one_reduction(criterion):
    with criterion(7, "dlnnN(4,1) with zero biases = log(2)/2 + dlnn3/2"):
        f3, f4 = make_dlnn3(), make_dlnnN(4, 1)
        rng = np.random.default_rng(7)
        for x in rng.uniform(-3, 3, size=(100, 4)):
            theta = np.concatenate([x, np.zeros(4)])
            want = 0.5 * math.log(2) + 0.5 * f3.value(x)
            assert abs(f4.value(theta) - want) <= 1e-10 * abs(want)
            gw, g3 = f4.gradient(theta)[:4], 0.5 * f3.gradient(x)
            assert np.max(np.abs(gw - g3)) <= 1e-10 * max(np.max(np.abs(g3)), np.finfo(float).tiny)


def test_integrated_and_pointwise_conditions_agree(criterion):
    with criterion(8, "expce integrated condition on 1000 segments; chained Riemann sums match quadrature"):
        f = resolve("expce")
        rng = np.random.default_rng(8)
        ends = rng.uniform(-10, 10, size=(1000, 2))
        for x1, x2 in ends:
            res = rho_integrated_check(f, 1.0, E, 1.0, [x1], [x2])
            assert res.max_violation <= 1e-6 * res.estimate, (x1, x2)
        base = Partition.uniform(10**4)

        def speed(pts):
            return np.abs(f.gradients(pts)[:, 0])

        def radius(z):
            return 0.05 * (1.0 + math.cos(float(z[0])) ** 2)

        for x1, x2 in ends[:25]:
            seg = Segment([x1], [x2])
            part = build_chain_partition(seg, radius, base=base)
            assert part.mesh <= 1e-4 * (1 + SLACK) and chaining_holds(seg, radius, part)
            r = riemann_sum(seg, speed, part)
            q = quad_segment(lambda t: speed(seg.point(t)), 20001)
            assert abs(r - q) <= 1e-3 * max(1.0, abs(q)), (x1, x2, r, q)


def _random_radius(rng, p):
    floor = rng.uniform(0.01, 0.2)
    amp = rng.uniform(0.0, 2.0)
    centre = rng.uniform(-3, 3, p)
    width = rng.uniform(0.1, 3.0)
    freq = rng.uniform(0, 4, p)

    def radius(z):
        return floor + amp * math.exp(-float(np.sum((z - centre) ** 2)) / width) \
            + floor * math.sin(float(freq @ z)) ** 2

    return radius


def test_chain_partitions(criterion):
    with criterion(9, "chain partitions chain on 500 instances and refine on 100"):
        rng = np.random.default_rng(9)
        for _ in range(500):
            p = int(rng.integers(1, 5))
            seg = Segment(rng.uniform(-3, 3, p), rng.uniform(-3, 3, p))
            radius = _random_radius(rng, p)
            assert chaining_holds(seg, radius, build_chain_partition(seg, radius))
        for _ in range(100):
            p = int(rng.integers(1, 5))
            seg = Segment(rng.uniform(-3, 3, p), rng.uniform(-3, 3, p))
            first = build_chain_partition(seg, _random_radius(rng, p))
            radius = _random_radius(rng, p)
            again = build_chain_partition(seg, radius, base=first)
            assert again.refines(first) and chaining_holds(seg, radius, again)


def _classify(fn_id, out):
    res = subprocess.run([sys.executable, "-m", "lipscope.cli", "classify", "--fn", fn_id, "--out", str(out)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    return res.stdout.strip()


@pytest.mark.parametrize("fn_id,verdict", [
    ("dlnn3", "local-only-evidence"),
    ("expce", "rho-order-evidence(1)"),
    ("monomial:0", "global-evidence"),
])
def test_end_to_end_verdicts(criterion, tmp_path, fn_id, verdict):
    with criterion(10, "classify verdicts for dlnn3, expce, monomial:0; reruns byte-identical", fn_id):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        assert _classify(fn_id, first) == f"verdict: {verdict}"
        _classify(fn_id, second)
        assert first.read_bytes() == second.read_bytes()
