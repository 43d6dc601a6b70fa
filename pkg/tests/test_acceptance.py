"""Acceptance criteria, each at its stated tolerance.

Every test records a ``criterion N: pass|fail ...`` line that is printed in
the terminal summary. Stochastic criteria use seed 1, fixed before any run.
"""

from collections import defaultdict
from fractions import Fraction as F
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import energy as energy_oracle
from priority_asep.algebra import verify_duality, verify_symmetry
from priority_asep.cli import main
from priority_asep.generator import RateParams, build_H
from priority_asep.measures import (
    canonical_measure,
    canonical_partition,
    grand_partition,
    grand_partition_product,
    reversibility_residual,
    reversible_measure,
)
from priority_asep.model import Config, Counts, Lattice, counts, enumerate_configs
from priority_asep.qcalc import QContext
from priority_asep.shocks import (
    ShockConfig,
    build_G,
    shock_predictions,
    stationary_gap_law,
    verify_intertwining,
    verify_shock_evolution,
    verify_shock_rates,
)
from priority_asep.sim import (
    SimParams,
    estimate_gap_law,
    estimate_velocity_diffusion,
    kmc_asep,
    run_replicas,
    shock_theorem_check,
    stationary_histogram,
    total_variation,
)

SEED = 1
GRID_Q = [F(1), F(3, 2), F(2)]


def record(number, ok, detail):
    line = f"criterion {number}: {'pass' if ok else 'fail'} ({detail})"
    ACCEPTANCE_LINES[number] = line
    print(line)


def test_criterion_1_reversibility():
    start = time.perf_counter()
    worst = 0
    cases = 0
    for n in (1, 2, 3):
        for L in (2, 3, 4, 5):
            for q in GRID_Q:
                ctx = QContext.exact(q)
                lat = Lattice(1, L)
                H = build_H(lat, RateParams(1, ctx, n))
                worst = max(worst, reversibility_residual(H, reversible_measure(lat, n, ctx)).max_abs())
                cases += 1
    elapsed = time.perf_counter() - start
    ok = worst == 0 and elapsed < 60
    record(1, ok, f"{cases} cases, max violation {worst}, {elapsed:.1f} s")
    assert worst == 0
    assert elapsed < 60


def test_criterion_2_partition_functions():
    worst = 0
    sectors = 0
    z_values = [F(1, 2), F(1, 3), F(2, 5)]
    for n in (1, 2, 3):
        for L in (2, 3, 4, 5):
            lat = Lattice(1, L)
            for q in GRID_Q:
                ctx = QContext.exact(q)
                z = z_values[:n]
                by_sector = defaultdict(F)
                grand = F(0)
                for c in enumerate_configs(lat, n):
                    weight = q ** (-energy_oracle(c.values()))
                    N = counts(c).N
                    by_sector[N] += weight
                    fug = F(1)
                    for a in range(1, n + 1):
                        fug *= z[a - 1] ** N[a]
                    grand += weight * fug
                for N, brute in by_sector.items():
                    worst = max(worst, abs(canonical_partition(lat, Counts(N), ctx) - brute))
                    sectors += 1
                worst = max(worst, abs(grand_partition(lat, ctx, z=z) - grand))
                if n == 1:
                    worst = max(worst, abs(grand_partition_product(lat, ctx, z=z) - grand))
    record(2, worst == 0, f"{sectors} sectors, max violation {worst}")
    assert worst == 0


def test_criterion_3_quantum_symmetry():
    worst = 0
    for n in (1, 2, 3):
        for L in (2, 3, 4):
            for q in GRID_Q:
                ctx = QContext.exact(q)
                lat = Lattice(1, L)
                worst = max(worst, verify_symmetry(build_H(lat, RateParams(1, ctx, n)), lat, n, ctx).max_violation)
    record(3, worst == 0, f"max violation {worst}")
    assert worst == 0


def test_criterion_4_self_duality():
    worst_identity = worst_closed = 0
    for n in (1, 2):
        for L in (2, 3, 4):
            for q in GRID_Q:
                ctx = QContext.exact(q)
                lat = Lattice(1, L)
                rep = verify_duality(build_H(lat, RateParams(1, ctx, n)), lat, n, ctx)
                worst_identity = max(worst_identity, rep.details["DH-HtD"])
                worst_closed = max(worst_closed, rep.details["closed-form"])
    ok = worst_identity == 0 and worst_closed == 0
    record(4, ok, f"DH-HtD {worst_identity}, closed form {worst_closed}")
    assert ok


def test_criterion_5_shock_machinery():
    start = time.perf_counter()
    worst = {"intertwining": 0, "evolution": 0, "measure-duality": 0, "normalization": 0, "rates": 0}
    cases = 0
    for n in (1, 2):
        for L in (4, 5):
            lat = Lattice(1, L)
            for q in (F(3, 2), F(2)):
                ctx = QContext.exact(q)
                H = build_H(lat, RateParams(1, ctx, n))
                worst["intertwining"] = max(worst["intertwining"], verify_intertwining(H, lat, n, ctx).max_violation)
                for K in (1, 2):
                    for colours in ((K,), ) if n == 1 else ((K, 0), (0, K), (1, 1)) if K == 2 else ((1, 0), (0, 1)):
                        for lam in (0, 1):
                            rep = verify_shock_evolution(lat, n, colours, lam, ctx)
                            for key in ("evolution", "measure-duality", "normalization"):
                                worst[key] = max(worst[key], rep.details[key])
                            rates = verify_shock_rates(build_G(lat, n, colours, lam, ctx), lam, ctx)
                            worst["rates"] = max(worst["rates"], rates.max_violation)
                            cases += 1
    elapsed = time.perf_counter() - start
    ok = all(v == 0 for v in worst.values()) and elapsed < 300
    detail = ", ".join(f"{k} {v}" for k, v in worst.items())
    record(5, ok, f"{cases} sectors, {detail}, {elapsed:.1f} s")
    assert all(v == 0 for v in worst.values())
    assert elapsed < 300


def single_shock(lam):
    s = ShockConfig((0,), (1,), 1, lam, QContext.floating(2.0))
    p = SimParams(1, None, w=1.0, q=2.0, t_max=1000.0, thinning=10.0, replicas=100, seed=SEED)
    est = estimate_velocity_diffusion(run_replicas("shock", p, s))
    pred = shock_predictions(s)
    return est, float(pred["v"][0]), float(pred["D"][0])


def test_criterion_6_single_shock():
    start = time.perf_counter()
    parts = []
    ok = True
    for lam, v_expect, D_expect in ((1, -0.45, 1.025), (0, 0.0, 1.0)):
        est, v_pred, D_pred = single_shock(lam)
        assert v_pred == pytest.approx(v_expect) and D_pred == pytest.approx(D_expect)
        z = est["v"].z(v_pred)
        rel = abs(est["D"].value - D_pred) / D_pred
        ok &= abs(z) <= 3 and rel <= 0.15
        parts.append(f"lambda={lam}: v={est['v'].value:.4f}+-{est['v'].se:.4f} (z={z:.2f}), "
                     f"D={est['D'].value:.4f} (rel {rel:.3f})")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    record(6, ok, "; ".join(parts) + f", {elapsed:.1f} s")
    assert ok


def test_criterion_7_gap_law():
    s = ShockConfig((0, 1), (1, 1), 1, 0, QContext.floating(2.0))
    p = SimParams(1, None, q=2.0, t_max=1000.0, thinning=5.0, replicas=100, seed=SEED)
    p_pred = float(stationary_gap_law(s, 1).p)
    fit = estimate_gap_law(run_replicas("shock", p, s), 1, p_pred, burn_in=0.5)
    ok = fit.samples >= 10 ** 4 and 0.33 <= fit.p_hat <= 0.39 and fit.ks_ok
    record(7, ok, f"{fit.samples} samples, p_hat={fit.p_hat:.4f} (predicted {p_pred:.4f}), "
                  f"KS fitted {fit.ks_fitted:.4f} / predicted {fit.ks_predicted:.4f} < {fit.ks_critical:.4f}")
    assert p_pred == pytest.approx(0.36)
    assert ok


def theorem_run(lam):
    s = ShockConfig((0,), (2,), 2, lam, QContext.floating(2.0))
    p = SimParams(2, Lattice.centered(400), q=2.0, t_max=20.0, thinning=20.0, replicas=200, margin=50, seed=SEED)
    return shock_theorem_check(p, s, offsets=range(-50, 51))


@pytest.fixture(scope="module")
def drifting_theorem_run():
    return theorem_run(1)


def test_criterion_8_shock_theorem(drifting_theorem_run):
    # gating run: balanced densities (lambda = 0), configuration fixed before any simulation
    start = time.perf_counter()
    rep = theorem_run(0)
    elapsed = time.perf_counter() - start
    drift = drifting_theorem_run
    ok = rep.passed() and elapsed < 600
    record(8, ok, f"lambda=0: relative max|z|={rep.relative.max_abs_z:.2f}, absolute max|z|="
                  f"{rep.absolute.max_abs_z:.2f}, discarded {rep.discarded_a:.3f}/{rep.discarded_b:.3f}, "
                  f"{elapsed:.1f} s; supplementary lambda=1 (not gating): relative max|z|="
                  f"{drift.relative.max_abs_z:.2f}, absolute max|z|={drift.absolute.max_abs_z:.2f}")
    assert rep.passed()
    assert elapsed < 600


def test_drifting_shock_profile_family_wise(drifting_theorem_run):
    # 101 offsets at a 1% family-wise level (Bonferroni): |z| <= 3.89
    rep = drifting_theorem_run
    assert rep.discarded_a == rep.discarded_b == 0
    assert rep.relative.passed(3.89) and rep.absolute.passed(3.89)
    assert abs(rep.marker_shift_a.value - rep.marker_shift_b.value) <= 3 * np.hypot(rep.marker_shift_a.se,
                                                                                   rep.marker_shift_b.se)


def test_criterion_9_stationary_sampling(tmp_path):
    conf = Config.from_values([1, 1, 0, 0], 1)
    p = SimParams(1, conf.lattice, q=2.0, t_max=1e12, thinning=1e12, max_events=10 ** 6, seed=SEED)
    tr = kmc_asep(p, conf, histogram=True, track_markers=False)
    m = canonical_measure(conf.lattice, [2], QContext.floating(2.0))
    exact = {c.eta: w for c, w in zip(enumerate_configs(conf.lattice, 1), m.weights) if w > 0}
    tv = total_variation(stationary_histogram(tr), exact)
    outputs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        code = main(["simulate-asep", "--n", "1", "--L", "4", "--counts", "2", "--q", "2", "--events", "1000000",
                     "--seed", str(SEED), "--out", str(out)])
        assert code == 0
        outputs.append({name: (out / name).read_bytes() for name in ("trajectory.csv", "summary.csv")})
    identical = outputs[0] == outputs[1]
    ok = tr.events == 10 ** 6 and tv < 0.02 and identical
    record(9, ok, f"TV {tv:.5f} after {tr.events} events, repeated CLI output identical: {identical}")
    assert ok
