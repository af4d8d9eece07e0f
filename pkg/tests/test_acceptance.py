"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The lines are printed as the tests run (visible with ``-s``) and repeated
in the terminal summary. Run alone with::

    pytest tests/test_acceptance.py -v
"""

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from bestsep import matcore, states
from bestsep.bsa import Verdict, bsa, decompose_2x2, lambda_max_pair, lambda_max_single
from bestsep.cli import werner_sweep
from bestsep.criteria import ppt_check

from conftest import SINGLET, bisect_single, cvec, grid_pair, min_eig, random_psd, unit

RESULTS = {}
RUNS = []
WORKERS = os.cpu_count() or 1


def report(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def run_bsa(rho, num_candidates=500, seed=0):
    res = bsa(rho, num_candidates, seed)
    RUNS.append(res)
    return res


def singlet_fidelity(res):
    d = res.delta_rho.matrix / res.delta_trace
    return float(np.vdot(SINGLET, d @ SINGLET).real)


def test_criterion_01_werner_separable_side():
    worst = 0.0
    for i, x in enumerate([0.05, 0.15, 0.25, 0.31]):
        res = run_bsa(states.werner(x), 500, i)
        worst = max(worst, res.delta_trace)
    report(1, worst <= 1e-4, f"max delta_trace {worst:.2e} (limit 1e-4)")


def test_criterion_02_werner_entangled_side():
    # analytic candidate first
    P = np.outer(SINGLET, SINGLET)
    oracle_ok = ppt_check(states.werner(1 / 3)).verdict == "ppt"
    for x in [0.4, 0.6, 0.8, 1.0]:
        rest = states.werner(x).matrix - (3 * x - 1) / 2 * P
        oracle_ok &= min_eig(rest) >= -1e-14
        oracle_ok &= np.allclose(rest, (3 - 3 * x) / 2 * states.werner(1 / 3).matrix, atol=1e-15)
    err, fid = 0.0, 1.0
    for i, x in enumerate([0.4, 0.6, 0.8, 1.0]):
        res = run_bsa(states.werner(x), 500, i)
        err = max(err, abs(res.delta_trace - (3 * x - 1) / 2))
        fid = min(fid, singlet_fidelity(res))
    ok = oracle_ok and err <= 2e-3 and fid >= 0.999
    report(2, ok, f"oracle {'ok' if oracle_ok else 'BROKEN'}, max |dt - (3x-1)/2| {err:.2e}, "
                  f"min singlet fidelity {fid:.6f}")


def test_criterion_03_transition_location():
    rows = [r.split(",") for r in werner_sweep(0.0, 1.0, 50, 500, 0, workers=WORKERS)[1:]]
    xs = np.array([float(r[0]) for r in rows])
    dts = np.array([float(r[1]) for r in rows])
    x_star = xs[dts <= 1e-4].max()
    report(3, abs(x_star - 1 / 3) <= 0.03, f"largest separable x {x_star:.4f}, |x - 1/3| {abs(x_star - 1 / 3):.4f}")


def test_criterion_04_candidate_set_insensitivity():
    a = run_bsa(states.werner(0.6), 300, 11).delta_trace
    b = run_bsa(states.werner(0.6), 500, 12).delta_trace
    report(4, abs(a - b) <= 5e-3, f"300 -> {a:.8f}, 500 -> {b:.8f}, diff {abs(a - b):.2e}")


def _dims(r):
    return [(2, 2), (2, 3), (3, 3)][r.integers(3)]


def test_criterion_05_single_weight_oracle():
    r = np.random.default_rng(505)
    worst = 0.0
    for _ in range(1000):
        dA, dB = _dims(r)
        d = dA * dB
        rho = random_psd(d, int(r.integers(1, d + 1)), r)
        psi = cvec(d, r)
        if r.random() < 0.7:
            psi = unit(rho @ psi)
        worst = max(worst, abs(lambda_max_single(rho, psi) - bisect_single(rho, psi)))
    report(5, worst <= 1e-7, f"max |formula - bisection| {worst:.2e} over 1000 draws")


def test_criterion_06_pair_oracle():
    r = np.random.default_rng(606)
    worst, worst_eq, interior, done = 0.0, 0.0, 0, 0
    while done < 1000:
        dA, dB = _dims(r)
        d = dA * dB
        rank = int(r.integers(1, d + 1))
        rho = random_psd(d, rank, r)
        p1, p2 = cvec(d, r), cvec(d, r)
        if r.random() < 0.8:
            p1 = unit(rho @ p1)
        if r.random() < 0.8:
            p2 = unit(rho @ p2)
        if abs(np.vdot(p1, p2)) >= 1 - 1e-12:
            continue
        done += 1
        pw = lambda_max_pair(rho, p1, p2)
        t1, t2 = grid_pair(rho, p1, p2)
        worst = max(worst, abs(pw.total - (t1 + t2)))
        if pw.case_tag == "generic" and pw.interior:
            interior += 1
            Pinv = np.linalg.pinv(rho, rcond=1e-10, hermitian=True)
            q11 = np.vdot(p1, Pinv @ p1).real
            q22 = np.vdot(p2, Pinv @ p2).real
            D = q11 * q22 - abs(np.vdot(p1, Pinv @ p2)) ** 2
            eq = 1 - pw.lambda1 * q11 - pw.lambda2 * q22 + pw.lambda1 * pw.lambda2 * D
            worst_eq = max(worst_eq, abs(eq))
    ok = worst <= 1e-5 and worst_eq <= 1e-8
    report(6, ok, f"max |sum - grid| {worst:.2e}; {interior} interior, max constraint residual {worst_eq:.2e}")


def test_criterion_07_separable_inputs():
    worst, bad = 0.0, 0
    for seed in range(50):
        rho = states.random_separable(2, 2, 1 + seed % 8, 7000 + seed)
        res = run_bsa(rho, 500, seed)
        worst = max(worst, res.delta_trace)
        bad += res.verdict is not Verdict.SEPARABLE or res.delta_trace > 1e-3
    report(7, bad == 0, f"{50 - bad}/50 separable, max delta_trace {worst:.2e}")


def _agreement(seed):
    rho = states.random_density(2, 2, 4, 8000 + seed)
    res = bsa(rho, 500, seed)
    return ppt_check(rho).verdict == "ppt", res.verdict is Verdict.SEPARABLE, res


def test_criterion_08_ppt_agreement():
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        out = list(pool.map(_agreement, range(200)))
    RUNS.extend(r for _, _, r in out)
    agree = sum(p == s for p, s, _ in out)
    n_ppt = sum(p for p, _, _ in out)
    report(8, agree == 200, f"{agree}/200 agree ({n_ppt} PPT, {200 - n_ppt} NPT)")


def test_criterion_09_entanglement_endpoints():
    e_singlet = decompose_2x2(run_bsa(states.werner(1.0), 500, 0)).entanglement_bits
    seps = [states.werner(0.2), states.werner(0.0)] + [states.random_separable(2, 2, 4, s) for s in range(5)]
    e_sep = max(decompose_2x2(run_bsa(rho, 500, 1)).entanglement_bits for rho in seps)
    e_08 = decompose_2x2(run_bsa(states.werner(0.8), 500, 2)).entanglement_bits
    ok = abs(e_singlet - 1.0) <= 1e-8 and e_sep == 0.0 and abs(e_08 - 0.7) <= 2e-3
    report(9, ok, f"singlet {e_singlet:.10f}, separable max {e_sep:g}, werner(0.8) {e_08:.6f}")


def test_criterion_10_structural_invariants():
    r = np.random.default_rng(1010)
    for i in range(10):
        dA, dB = [(2, 2), (2, 3), (3, 3)][i % 3]
        rho = states.random_density(dA, dB, dA * dB, r)
        run_bsa(rho, 200, i)
    recon = psd = mono = 0.0
    ratio, n_ent = 0.0, 0
    for res in RUNS:
        rho = res.rho
        recon = max(recon, np.max(np.abs(res.rho_s_star.matrix + res.delta_rho.matrix - rho.matrix)))
        psd = max(psd, -min_eig(res.delta_rho.matrix) / matcore.psd_slack(rho.matrix))
        mono = max(mono, -np.min(np.diff(res.trace_history), initial=0.0))
        if (rho.dimA, rho.dimB) == (2, 2) and res.verdict is Verdict.ENTANGLED:
            w = np.linalg.eigvalsh(res.delta_rho.matrix)
            ratio = max(ratio, w[-2] / w[-1])
            n_ent += 1
    ok = recon <= 1e-8 and psd <= 1.0 and mono <= 0.0 and ratio <= 1e-3
    report(10, ok, f"{len(RUNS)} runs: reconstruction {recon:.1e}, PSD violation/slack {max(psd, 0):.2f}, "
                   f"history drop {mono:.1e}, max rank-one ratio {ratio:.1e} over {n_ent} entangled 2x2")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
