"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``CRITERION <k>: PASS|FAIL`` line (also collected in the
terminal summary) and then asserts the same verdict.
"""

import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_observable
from xxgadget.cli import effective_deviation, pgs_point
from xxgadget.dynamics import EvolutionSpec, PrepSpec, evolve, prepare_initial
from xxgadget.effective import partition_hamming, strip_identity
from xxgadget.gadgets import (
    LogicalZKind,
    OneHotSpec,
    PenaltyDominanceWarning,
    ThreeBodySpec,
    logical_z_physical,
    one_hot_effective_closed,
    one_hot_penalty,
    one_hot_physical,
    three_body_effective_closed,
)
from xxgadget.pauli import Observable, PauliTerm, assemble, basis_index, diagonal, is_hermitian
from xxgadget.spectral import gap_curve, lowest_eigs, min_gap
from xxgadget.toy import ToyInstance, Variant, build_anneal, transverse_driver

from test_dynamics import single_gadget_anneal
from test_spectral import random_tfim

CP = 100.0


@pytest.fixture
def report(capsys):
    def _report(k, ok, detail):
        line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return _report


def sched(n0, variant, cp=CP):
    return build_anneal(ToyInstance(n0, cp=cp, variant=variant))[0]


def _oracle_deviations(gadget, seed, trials=100):
    rng = np.random.default_rng(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PenaltyDominanceWarning)
        return [effective_deviation(gadget, rng, with_diagonal=True) for _ in range(trials)]


def test_criterion_01_three_body_identity(report):
    devs = _oracle_deviations("three-body", seed=101)
    worst = max(devs)
    report(1, worst < 1e-12, f"three-body Schur vs closed form, 100 specs with h,J in [-1,1]: "
                             f"max deviation {worst:.3e} (tol 1e-12)")


def test_criterion_02_one_hot_identity(report):
    devs = _oracle_deviations("one-hot", seed=102)
    worst = max(devs)
    report(2, worst < 1e-12, f"one-hot Schur (B = weights 0,2; E=0) vs six-term form, 100 specs with "
                             f"h,J in [-1,1]: max deviation {worst:.3e} (tol 1e-12)")


def test_criterion_03_chain_identity(report):
    worst = max(_oracle_deviations("chain", seed=103))
    report(3, worst < 1e-12, f"chain Schur at E=-2Cp vs -(d1 d2/2Cp) X: max deviation {worst:.3e} (tol 1e-12)")


def test_criterion_04_effective_vs_exact(report):
    errs = []
    for cp in (25, 50, 100, 200, 400, 800):
        spec = OneHotSpec.equal(1.0, float(cp))
        exact = np.linalg.eigvalsh(assemble(one_hot_physical(spec)).toarray())[:4]
        exact = exact - exact.mean()
        closed = np.linalg.eigvalsh(strip_identity(assemble(one_hot_effective_closed(spec)).toarray()))
        errs.append(float(np.max(np.abs(exact - closed))))
    ratios = [b / a for a, b in zip(errs, errs[1:])]
    ok = all(r <= 0.6 for r in ratios)
    report(4, ok, "errors " + ", ".join(f"{e:.2e}" for e in errs)
           + "; max successive ratio " + f"{max(ratios):.3f} (need <= 0.6)")


def test_criterion_05_fig2_reduced(report):
    grid = np.linspace(0.0, 1.0, 201)
    tf = gap_curve(sched(4, Variant.TF), grid)
    xx = gap_curve(sched(4, Variant.XX), grid)
    oh = gap_curve(sched(4, Variant.ONE_HOT), grid)
    s_tf = float(grid[np.argmin(tf.gaps)])
    ok_a = 0.8 < s_tf < 1.0
    d_tf = min_gap(sched(4, Variant.TF)).delta_min
    d_xx = min_gap(sched(4, Variant.XX)).delta_min
    ok_b = d_xx > d_tf
    mask = grid <= 0.99
    dev = float(np.max(np.abs(2 * CP * oh.gaps[mask] - xx.gaps[mask]) / xx.gaps[mask]))
    ok_c = dev < 0.05
    report(5, ok_a and ok_b and ok_c,
           f"(a) TF argmin s={s_tf:.3f} in (0.8,1): {ok_a}; "
           f"(b) Dmin_XX={d_xx:.5f} > Dmin_TF={d_tf:.5f}: {ok_b}; "
           f"(c) sup rel dev 2Cp*D_OH vs D_XX = {dev:.2e} < 0.05: {ok_c}")


def test_criterion_06_fig4(report):
    n0s = (2, 3, 4, 5)
    d = {(n0, v): min_gap(sched(n0, v)).delta_min
         for n0 in n0s for v in (Variant.TF, Variant.XX, Variant.ONE_HOT)}
    ratios = [d[(n, Variant.XX)] / d[(n, Variant.TF)] for n in n0s]
    ok_ratio = all(b > a for a, b in zip(ratios, ratios[1:]))
    rel = [abs(2 * CP * d[(n, Variant.ONE_HOT)] - d[(n, Variant.XX)]) / d[(n, Variant.XX)] for n in n0s]
    ok_rel = all(r < 0.05 for r in rel)
    report(6, ok_ratio and ok_rel,
           "XX/TF ratios " + ", ".join(f"{r:.2f}" for r in ratios) + f" increasing: {ok_ratio}; "
           "|2Cp D_OH - D_XX|/D_XX " + ", ".join(f"{r:.1e}" for r in rel) + f" < 0.05: {ok_rel}")


def test_criterion_07_fig5(report):
    cps = (25.0, 50.0, 100.0, 200.0, 400.0)
    dxx = min_gap(sched(3, Variant.XX)).delta_min
    errs = [abs(dxx - 2 * cp * min_gap(sched(3, Variant.ONE_HOT, cp)).delta_min) / dxx for cp in cps]
    ok_dec = all(b < a for a, b in zip(errs, errs[1:]))
    ok_factor = errs[-1] * 4 <= errs[0]
    report(7, ok_dec and ok_factor,
           "normalized errors " + ", ".join(f"{e:.2e}" for e in errs)
           + f" strictly decreasing: {ok_dec}; Cp=25/Cp=400 = {errs[0] / errs[-1]:.1f} >= 4: {ok_factor}")


FIG6_TA = (4.5, 5.0, 6.0, 8.0, 10.0, 20.0, 30.0, 50.0, 70.0)


def test_criterion_08_fig6(report):
    rows = []
    for ta in FIG6_TA:
        xx = pgs_point(3, "xx", ta)
        oh = pgs_point(3, "onehot", ta)
        rows.append((ta, xx.p_gs, oh.p_gs, oh.leakage, max(xx.norm_drift, oh.norm_drift)))
    diffs = [abs(x - o) for _, x, o, _, _ in rows]
    p = [x for _, x, _, _, _ in rows]
    ok_span = min(p) <= 0.25 and max(p) >= 0.85
    ok_diff = max(diffs) < 0.05
    ok_drift = max(r[4] for r in rows) < 1e-8
    ok_leak = max(r[3] for r in rows) < 1e-2
    report(8, ok_span and ok_diff and ok_drift and ok_leak,
           f"{len(rows)} t_a points, P_gs^XX span [{min(p):.3f}, {max(p):.3f}]: {ok_span}; "
           f"max |P_OH(2Cp ta) - P_XX(ta)| = {max(diffs):.2e} < 0.05: {ok_diff}; "
           f"max norm drift {max(r[4] for r in rows):.1e} < 1e-8: {ok_drift}; "
           f"max leakage {max(r[3] for r in rows):.1e} < 1e-2: {ok_leak}")


def test_criterion_09_fig7(report):
    grid = np.linspace(0.0, 1.0, 201)
    grid = grid[grid <= 0.99]
    hom = gap_curve(sched(2, Variant.ONE_HOT_HOM), grid)
    xx = gap_curve(sched(2, Variant.XX), grid)
    dev = float(np.max(np.abs(2 * CP * hom.gaps - xx.gaps) / xx.gaps))
    report(9, dev < 0.10, f"n0=2 homogeneous ({sched(2, Variant.ONE_HOT_HOM).n_qubits} qubits), "
                          f"{len(grid)} points: sup rel dev {dev:.2e} < 0.10")


def test_criterion_10_prep(report):
    penalty = one_hot_penalty(CP)
    psi = prepare_initial(PrepSpec("0001", 200.0, penalty))
    _, v = np.linalg.eigh(assemble(penalty + transverse_driver(4)).toarray())
    fid = float(abs(np.vdot(v[:, 0], psi)) ** 2)
    report(10, fid > 0.999, f"z=0001, prep_time=200, Cp=100: fidelity {fid:.6f} (need > 0.999)")


def test_criterion_11_truth_table(report):
    states = {"00": "0001", "01": "0010", "10": "0100", "11": "1000"}
    mismatches = 0
    for kind in LogicalZKind:
        d = diagonal(logical_z_physical(kind)).real
        for logical, phys in states.items():
            z1, z2 = (1 - 2 * int(b) for b in logical)
            want = {LogicalZKind.IDENTITY: 1, LogicalZKind.Z1: z1, LogicalZKind.Z2: z2,
                    LogicalZKind.Z1Z2: z1 * z2}[kind]
            got = d[basis_index(phys)]
            mismatches += not (got == int(got) and int(got) == want)
    report(11, mismatches == 0, f"4x4 logical Z table, {mismatches} mismatches")


def test_criterion_12_property_suites(report):
    rng = np.random.default_rng(1212)
    trials = 200
    fails = {}

    fails["hermiticity"] = sum(not is_hermitian(assemble(random_observable(rng, 4, 8))) for _ in range(trials))

    bad = 0
    for _ in range(trials):
        bad += not np.all(np.diff(lowest_eigs(random_tfim(rng, 5), 6)) >= 0)
    fails["eigenvalue ordering"] = bad

    bad = 0
    for _ in range(trials):
        m = random_tfim(rng, 10)
        dense = lowest_eigs(m, 2, dense_max=1 << 10)
        lanczos = lowest_eigs(m, 2, dense_max=1)
        bad += not np.all(np.abs(dense - lanczos) <= 1e-9 * np.maximum(1.0, np.abs(dense)))
    fails["dense/iterative agreement (2^10)"] = bad

    bad = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PenaltyDominanceWarning)
        for _ in range(trials):
            d = rng.choice([-1, 1]) * rng.uniform(0, 1, 4)
            cp = float(rng.uniform(10, 1000))
            bad += one_hot_effective_closed(OneHotSpec(*d, cp)).coefficient("X1 X2") > 0
            bad += three_body_effective_closed(ThreeBodySpec(d[0], d[1], d[2], cp)).coefficient("X1 X2") > 0
    fails["sign property"] = bad

    bad = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PenaltyDominanceWarning)
        for _ in range(trials):
            d, hj = rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 3)
            bad += one_hot_physical(OneHotSpec(*d, float(rng.uniform(10, 1000)), *hj)).max_arity() > 2
    fails["two-body arity"] = bad

    bad = 0
    for _ in range(trials):
        d, h = rng.uniform(0.5, 1.5, 4), rng.uniform(-1, 1, 3)
        ta = float(rng.uniform(1.0, 4.0))
        peaks = [evolve(EvolutionSpec(single_gadget_anneal(d, h, cp), ta, 2 * cp,
                                      partition=partition_hamming(4, 1))).diagnostics["peak_leakage"]
                 for cp in (50.0, 100.0, 200.0, 400.0)]
        bad += not all(b <= a for a, b in zip(peaks, peaks[1:]))
    fails["leakage monotone in 1/Cp"] = bad

    ok = not any(fails.values())
    report(12, ok, f"{trials} trials each; failures: " + ", ".join(f"{k}={v}" for k, v in fails.items()))
