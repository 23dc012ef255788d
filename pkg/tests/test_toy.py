import itertools

import numpy as np
import pytest

from xxgadget.effective import SubspacePartition, schur_effective, strip_identity
from xxgadget.pauli import assemble, basis_index, diagonal
from xxgadget.spectral import AnnealMatrices
from xxgadget.toy import (
    ScheduleKind,
    ToyInstance,
    Variant,
    build_anneal,
    build_problem,
    evaluate_at,
    feasible_partition,
    layout_for,
    logical_index,
)


def test_problem_coefficients():
    inst = ToyInstance(2)
    obs = build_problem(inst)
    assert inst.g0_field == pytest.approx(14.89)
    assert inst.g1_field == pytest.approx(2 * 5.33 - 2 / 3)
    assert obs.coefficient("Z1") == pytest.approx(14.89)
    for j in (3, 4, 5):
        assert obs.coefficient(f"Z{j}") == pytest.approx(9.993333333333333)
    zz = [t for t in obs.terms if t.arity == 2]
    assert len(zz) == 6 and all(t.coeff == 5.33 for t in zz)


def test_n0_guard():
    with pytest.raises(ValueError):
        ToyInstance(1, delta_w=0.0)
    with pytest.raises(ValueError):
        ToyInstance(2, cp=0.0)


@pytest.mark.parametrize("n0", [2, 3, 4])
def test_ground_state_selects_g0(n0):
    inst = ToyInstance(n0)
    d = diagonal(build_problem(inst)).real
    n = inst.n_logical
    # brute force over all bitstrings (Z=+1 on bit 0); G0 in the set means bit 0
    best = min(range(1 << n), key=lambda i: d[i])
    assert best == basis_index("0" * n0 + "1" * (n0 + 1))
    assert np.sum(d <= d[best] + 1e-9) == 1


@pytest.mark.parametrize("n0", range(2, 11))
def test_qubit_counts(n0):
    counts = {Variant.TF: 2 * n0 + 1, Variant.XX: 2 * n0 + 1,
              Variant.ONE_HOT: 2 * n0 + 3, Variant.ONE_HOT_HOM: 4 * n0 + 2}
    for v, n in counts.items():
        lay = layout_for(ToyInstance(n0, variant=v))
        assert lay.n_qubits == n
        assert len(set(lay.roles)) == n


def test_tf_large_driver():
    sched, lay = build_anneal(ToyInstance(10))
    assert sched.n_qubits == 21
    h0 = evaluate_at(sched, 0.0)
    assert all(t.coeff == -1.0 and t.factors[0][1] == "X" for t in h0.terms if t.coeff != 0)
    assert sum(1 for t in h0.terms if t.coeff != 0) == 21


def test_one_hot_layout_and_penalty():
    sched, lay = build_anneal(ToyInstance(4, variant=Variant.ONE_HOT))
    assert sched.n_qubits == 11
    assert lay.roles[:4] == ("1h", "2h", "3h", "4h")
    assert sorted(lay.roles[4:], key=int) == [str(i) for i in range(3, 10)]
    pen = sched.group(ScheduleKind.CONSTANT)
    zz = [t for t in pen.terms if t.arity == 2]
    assert len(zz) == 6 and all(t.coeff == 200.0 for t in zz)
    assert all(q <= 4 for t in zz for q, _ in t.factors)


def test_hom_layout_and_chains():
    inst = ToyInstance(4, variant=Variant.ONE_HOT_HOM)
    sched, lay = build_anneal(inst)
    assert sched.n_qubits == 18
    const = sched.group(ScheduleKind.CONSTANT)
    chain = [t for t in const.terms if t.arity == 2 and t.factors[0][0] > 4]
    assert len(chain) == 7 and all(t.coeff == -200.0 for t in chain)


@pytest.mark.parametrize("n0", [2, 4])
def test_hom_driver_is_homogeneous(n0):
    sched, _ = build_anneal(ToyInstance(n0, variant=Variant.ONE_HOT_HOM))
    xs = [t for _, obs in sched.groups for t in obs.terms if not t.is_diagonal]
    assert all(t.arity == 1 and t.coeff == -1.0 for t in xs)
    assert sorted(t.factors[0][0] for t in xs) == list(range(1, sched.n_qubits + 1))
    drv = sched.group(ScheduleKind.SQRT_ONE_MINUS_S)
    assert len(drv.terms) == sched.n_qubits


def test_schedule_kinds():
    cp = 100.0
    for s in np.linspace(0, 1, 11):
        assert ScheduleKind.CONSTANT(s, cp) == 1.0
        assert ScheduleKind.ONE_MINUS_S(s, cp) == pytest.approx(1 - s)
        assert ScheduleKind.SQRT_ONE_MINUS_S(s, cp) == pytest.approx(np.sqrt(1 - s))
        assert ScheduleKind.S_OVER_2CP(s, cp) == pytest.approx(s / 200)
        assert ScheduleKind.ONE_MINUS_S_OVER_2CP(s, cp) == pytest.approx((1 - s) / 200)


def test_evaluate_endpoints():
    inst = ToyInstance(2)
    sched, _ = build_anneal(inst)
    h1 = evaluate_at(sched, 1.0).simplify()
    assert all(t.is_diagonal for t in h1.terms)
    np.testing.assert_allclose(assemble(h1).toarray(), assemble(build_problem(inst)).toarray())
    with pytest.raises(ValueError):
        evaluate_at(sched, 1.5)

    sched, _ = build_anneal(ToyInstance(2, variant=Variant.ONE_HOT))
    h1 = evaluate_at(sched, 1.0).simplify()
    assert all(t.is_diagonal for t in h1.terms)


def test_xx_driver():
    sched, _ = build_anneal(ToyInstance(2, variant=Variant.XX))
    drv = sched.group(ScheduleKind.ONE_MINUS_S)
    assert drv.coefficient("X1 X2") == -1.0


def test_assembled_hermitian_random_s(rng):
    for v in Variant:
        sched, _ = build_anneal(ToyInstance(2, variant=v))
        mats = AnnealMatrices(sched, dense=True)
        for s in rng.uniform(0, 1, 5):
            m = mats(s)
            assert np.abs(m - m.conj().T).max() < 1e-14


def test_feasible_partition_and_logical_index():
    inst = ToyInstance(2, variant=Variant.ONE_HOT)
    p = feasible_partition(inst)
    assert len(p.indices_A) == 4 * 2 ** 3
    logical = sorted(logical_index(inst, i) for i in p.indices_A)
    assert logical == list(range(32))
    assert logical_index(inst, 0) is None

    hom = ToyInstance(2, variant=Variant.ONE_HOT_HOM)
    p = feasible_partition(hom)
    assert len(p.indices_A) == 4 * 2 ** 3
    assert sorted(logical_index(hom, i) for i in p.indices_A) == list(range(32))


def _logical_deviation(cp, s):
    """Identity-stripped Schur effective H of the one-hot variant vs (1/2C_p) H_xx(s)."""
    inst = ToyInstance(2, cp=cp, variant=Variant.ONE_HOT)
    sched, _ = build_anneal(inst)
    H = AnnealMatrices(sched, dense=True)(s)
    full = feasible_partition(inst)
    lidx = [logical_index(inst, i) for i in full.indices_A]
    order = np.argsort(lidx)
    heff = schur_effective(H, full).matrix[np.ix_(order, order)]
    sx, _ = build_anneal(ToyInstance(2, variant=Variant.XX))
    want = AnnealMatrices(sx, dense=True)(s) / (2 * cp)
    return 2 * cp * np.abs(strip_identity(heff) - strip_identity(want)).max()


@pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
def test_logical_consistency(s):
    d100 = _logical_deviation(100.0, s)
    d400 = _logical_deviation(400.0, s)
    assert d400 < d100
    assert d100 < 0.05
