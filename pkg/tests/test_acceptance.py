"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import subprocess
import sys
import time

import numpy as np
import pytest

from oracles import explicit_hadamard
from sketchla import _rng, bench
from sketchla.basis import select_independent_rows
from sketchla.embed import EmbedConfig, constant_embed, polylog_embed
from sketchla.leverage import (LevSampleConfig, amm_sample, eps_subspace_embed, qr_lev_factors,
                               two_stage_sample)
from sketchla.linalg import exact_leverage_scores, numerical_rank
from sketchla.regression import solve_regression
from sketchla.sdp import build_packing_instance, solve_packing_sdp
from sketchla.sketch import fwht, srht_build


@pytest.fixture
def emit(capsys):
    def _emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    return _emit


def test_criterion_01_fwht_exact(emit):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    err = 0.0
    for k in range(9):
        L = 2 ** k
        H = explicit_hadamard(L)
        X = rng.standard_normal((L, 50))
        err = max(err, np.max(np.abs(fwht(X) - H @ X)))
    dt = time.perf_counter() - t0
    ok = err <= 1e-10 and dt < 1
    emit(1, ok, f"fwht max abs error {err:.2e} (<= 1e-10), {dt:.2f}s (< 1s)")
    assert ok


def test_criterion_02_leverage_sum(emit):
    t0 = time.perf_counter()
    worst = 0.0
    for s in range(30):
        rng = np.random.default_rng(s)
        n, d = int(rng.integers(5, 200)), int(rng.integers(1, 30))
        k = int(rng.integers(0, min(n, d) + 1)) if s % 2 else min(n, d)
        A = rng.standard_normal((n, k)) @ rng.standard_normal((k, d)) if k else np.zeros((n, d))
        worst = max(worst, abs(exact_leverage_scores(A).sum() - numerical_rank(A)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 5
    emit(2, ok, f"max |sum(lev) - rank| {worst:.2e} (<= 1e-8) over 30 matrices, {dt:.2f}s (< 5s)")
    assert ok


def test_criterion_03_srht_flattening(emit):
    t0 = time.perf_counter()
    fracs, in_range = [], 0
    for s in range(50):
        op = srht_build(128, 8, seed=s)
        x = _rng.derive_rng(s, _rng.BENCH, 100).standard_normal(128)
        x /= np.linalg.norm(x)
        fracs.append(np.mean(np.abs(op.apply(x, scaled=False)) >= 0.1))
        in_range += 0.9 <= np.linalg.norm(op.apply(x)) <= 1.1
    dt = time.perf_counter() - t0
    ok = min(fracs) >= 0.9 and in_range >= 47 and dt < 5
    emit(3, ok, f"min flattened fraction {min(fracs):.3f} (>= 0.9), norm in range "
                f"{in_range}/50 (>= 47), {dt:.2f}s (< 5s)")
    assert ok


def test_criterion_04_constant_embedding(emit):
    t0 = time.perf_counter()
    rows_ok, small, beats = True, 0, 0
    xis = []
    for s in range(20):
        A = np.random.default_rng(1000 + s).standard_normal((4096, 32))
        res = constant_embed(A, EmbedConfig(seed=s), timing=False)
        poly = polylog_embed(A, EmbedConfig(seed=s, sdp=False), timing=False)
        xi = res.report.metrics["distortion"]
        xis.append(xi)
        rows_ok &= res.sketched.shape[0] <= 10 * 32
        small += xi <= 10
        beats += xi <= poly.report.metrics["distortion"]
    dt = time.perf_counter() - t0
    ok = rows_ok and small >= 18 and beats >= 15 and dt < 60
    emit(4, ok, f"rows <= 320: {rows_ok}; distortion <= 10 in {small}/20 (>= 18), "
                f"<= polylog in {beats}/20 (>= 15), median {np.median(xis):.2f}, {dt:.1f}s (< 60s)")
    assert ok


def _feasible(w, tol=1e-6):
    p = w.size
    return bool(np.all(w >= -tol) and np.all(w <= 2 / p + tol) and abs(w.sum() - 1) <= tol)


def test_criterion_05_sdp_reweighting(emit):
    t0 = time.perf_counter()
    inst = build_packing_instance(np.eye(40), np.eye(40))
    wv = solve_packing_sdp(inst)
    feasible = _feasible(wv.w)
    lam = wv.objective
    rng = np.random.default_rng(5)
    for _ in range(5):
        Y = rng.standard_normal((80, 8)) * rng.standard_t(2, size=(80, 1))
        feasible &= _feasible(solve_packing_sdp(build_packing_instance(Y, np.eye(8))).w)
    dt = time.perf_counter() - t0
    ok = feasible and lam <= 1.05 / 40 and dt < 10
    emit(5, ok, f"weights feasible: {feasible}; orthonormal-rows lambda_max {lam:.5f} "
                f"(<= {1.05 / 40:.5f}), {dt:.2f}s (< 10s)")
    assert ok


def test_criterion_06_eps_embedding(emit):
    t0 = time.perf_counter()
    good, rows_ok = 0, True
    lo, hi = np.inf, 0.0
    cfg0 = LevSampleConfig(epsilon=0.25)
    bound = cfg0.oversample(32)
    for s in range(20):
        A = np.random.default_rng(500 + s).standard_normal((8192, 32))
        _, smp, rep = eps_subspace_embed(A, LevSampleConfig(epsilon=0.25, seed=s), timing=False)
        m = rep.metrics
        lo, hi = min(lo, m["sigma_min"]), max(hi, m["sigma_max"])
        good += m["sigma_min"] >= 0.75 and m["sigma_max"] <= 1.25
        rows_ok &= smp.indices.size <= bound
    dt = time.perf_counter() - t0
    ok = good >= 18 and rows_ok and dt < 120
    emit(6, ok, f"singular values in [0.75, 1.25] in {good}/20 (>= 18), observed "
                f"[{lo:.3f}, {hi:.3f}]; rows <= {bound:.0f} (c_s=8): {rows_ok}, {dt:.1f}s (< 120s)")
    assert ok


def test_criterion_07_sampling_sandwich(emit):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    A = rng.standard_normal((2000, 16)) * rng.standard_t(3, size=(2000, 1))
    R, _ = qr_lev_factors(A, LevSampleConfig(seed=0))
    AR = A @ R
    ell = np.einsum("ij,ij->i", AR, AR)
    ell /= ell.sum()
    T = 500
    fractions = {}
    for s in (50, 200):
        lo, hi = np.minimum(1, s / 16 * ell), np.minimum(1, s * ell)
        counts = np.zeros(A.shape[0])
        for seed in range(T):
            counts[two_stage_sample(A, R, s, seed=seed).indices] += 1
        freq = counts / T
        inside = ((freq >= lo - 5 * np.sqrt(lo * (1 - lo) / T))
                  & (freq <= hi + 5 * np.sqrt(hi * (1 - hi) / T)))
        fractions[s] = inside.mean()
    dt = time.perf_counter() - t0
    ok = min(fractions.values()) >= 0.99 and dt < 120
    emit(7, ok, "rows inside sandwich +- 5 sigma: "
                + ", ".join(f"s={s}: {100 * f:.1f}%" for s, f in fractions.items())
                + f" (>= 99%), {dt:.1f}s (< 120s)")
    assert ok


def _basis_instance(name, seed):
    rng = np.random.default_rng(seed)
    if name == "full-rank-square":
        return rng.standard_normal((40, 40))
    if name == "duplicated-rank-4":
        block = rng.standard_normal((4, 30))
        return np.vstack([block] * 3)
    if name == "factor-product":
        d = 40
        return rng.standard_normal((50 * d, d // 2)) @ rng.standard_normal((d // 2, d))
    A = rng.standard_normal((400, 20))
    A[rng.choice(400, 20, replace=False)] = 0
    return A


def test_criterion_08_basis_selection(emit):
    t0 = time.perf_counter()
    summary, ok = [], True
    for name in ("full-rank-square", "duplicated-rank-4", "factor-product", "zero-rows"):
        wrong = fallback = 0
        for s in range(20):
            A = _basis_instance(name, s)
            res = select_independent_rows(A, seed=s)
            k = numerical_rank(A)
            wrong += not (res.k == k == numerical_rank(A[res.indices]))
            fallback += "fallback" in res.flags
        ok &= wrong == 0 and fallback <= 2
        summary.append(f"{name}: {wrong} wrong, {fallback} fallback")
    dt = time.perf_counter() - t0
    ok &= dt < 120
    emit(8, ok, "; ".join(summary) + f" (0 wrong, <= 2 fallback), {dt:.1f}s (< 120s)")
    assert ok


def test_criterion_09_matrix_product(emit):
    t0 = time.perf_counter()
    M, _ = np.linalg.qr(np.random.default_rng(9).standard_normal((512, 16)))
    r = 256
    errs = []
    for s in range(100):
        SM = amm_sample(M, r, seed=s)
        errs.append(np.linalg.norm(SM.T @ SM - M.T @ M, "fro") ** 2)
    bound = 10 / np.sqrt(r) * np.linalg.norm(M, "fro") ** 4
    dt = time.perf_counter() - t0
    ok = np.median(errs) <= bound and dt < 30
    emit(9, ok, f"median squared error {np.median(errs):.3f} (<= {bound:.1f}), {dt:.2f}s (< 30s)")
    assert ok


def test_criterion_10_regression(emit):
    t0 = time.perf_counter()
    ratio_ok = kappa_ok = 0
    monotone = True
    worst = 0.0
    for s in range(10):
        A, b, _ = bench.planted_regression(8192, 50, seed=900 + s)
        res = solve_regression(A, b, eps=0.1, seed=s, oracle=True, timing=False)
        worst = max(worst, res.oracle_ratio)
        ratio_ok += res.oracle_ratio <= 1.1
        kappa_ok += res.kappa <= 4
        monotone &= all(a >= c for a, c in zip(res.trace, res.trace[1:]))
    dt = time.perf_counter() - t0
    ok = ratio_ok >= 9 and kappa_ok >= 9 and monotone and dt < 120
    emit(10, ok, f"oracle_ratio <= 1.1 in {ratio_ok}/10 (>= 9, worst {worst:.4f}); kappa(SAR) <= 4 "
                 f"in {kappa_ok}/10 (>= 9); GD trace monotone: {monotone}, {dt:.1f}s (< 120s)")
    assert ok


COMMANDS = [
    ["embed", "--n", "4096", "--d", "32", "--seed", "7", "--alpha", "0.25"],
    ["levscore", "--n", "8192", "--d", "32", "--seed", "3", "--epsilon", "0.25"],
    ["basis", "--n", "2000", "--d", "40", "--seed", "4", "--oracle"],
    ["regress", "--n", "8192", "--d", "50", "--seed", "1", "--epsilon", "0.1", "--oracle"],
    ["selftest", "--seed", "0"],
    ["bench", "--n", "512", "--d", "8", "--seed", "2"],
]


def test_criterion_11_determinism(tmp_path, emit):
    t0 = time.perf_counter()
    same = []
    for argv in COMMANDS:
        outs = []
        for rep in range(2):
            path = tmp_path / f"{argv[0]}-{rep}.json"
            subprocess.run([sys.executable, "-m", "sketchla", *argv, "--no-timing",
                            "--out", str(path)], check=False, timeout=300)
            outs.append(path.read_bytes())
        same.append(outs[0] == outs[1] and len(outs[0]) > 0)
    dt = time.perf_counter() - t0
    ok = all(same)
    emit(11, ok, f"byte-identical JSON for {sum(same)}/{len(same)} CLI commands "
                 f"({', '.join(a[0] for a in COMMANDS)}), {dt:.1f}s")
    assert ok
