"""Schrodinger evolution along an anneal and initial-state preparation.

The propagator is the fourth-order commutator-free Magnus scheme with two
exponentials per step,

    psi <- exp(-i h (a2 H(t1) + a1 H(t2))) exp(-i h (a1 H(t1) + a2 H(t2))) psi,

with Gauss nodes ``t1,2 = t + (1/2 -+ sqrt(3)/6) h`` and
``a1,2 = 1/4 +- sqrt(3)/6``. Each exponential is applied exactly (dense
eigendecomposition, or ``expm_multiply`` for large registers), so the large
static penalties cost nothing in step size. Step size is controlled by step
doubling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .effective import SubspacePartition
from .pauli import Observable, PauliTerm, basis_index, basis_state, diagonal
from .spectral import AnnealMatrices, real_if_close
from .toy import ScheduledObservable, ScheduleKind

log = logging.getLogger(__name__)

DENSE_EXP_MAX = 2**11
NORM_DRIFT_ABORT = 1e-6
MIN_STEP = 1e-12
DEFAULT_TOL = 1e-6

_C = math.sqrt(3.0) / 6.0
_A1 = 0.25 + _C
_A2 = 0.25 - _C


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvolutionSpec:
    sched: ScheduledObservable
    anneal_time: float
    time_scaling: float = 1.0
    tol: float = DEFAULT_TOL
    partition: SubspacePartition | None = None

    def __post_init__(self):
        if not self.anneal_time > 0:
            raise ValueError("anneal_time must be positive")
        if not self.time_scaling > 0:
            raise ValueError("time_scaling must be positive")
        if not 0 < self.tol <= 1e-4:
            raise ValueError("tolerance must lie in (0, 1e-4]")

    @property
    def total_time(self) -> float:
        return self.anneal_time * self.time_scaling


@dataclass
class EvolutionResult:
    final_state: np.ndarray
    p_gs: float
    norm_drift: float
    leakage: float
    steps: int = 0
    rejected: int = 0
    diagnostics: dict = field(default_factory=dict)


def _expm_action(a, h: float, psi: np.ndarray) -> np.ndarray:
    """``exp(-i h a) psi`` for Hermitian ``a``."""
    if sp.issparse(a):
        return spla.expm_multiply(-1j * h * a, psi)
    w, v = la.eigh(a, check_finite=False, driver="evd")
    return v @ (np.exp(-1j * h * w) * (v.conj().T @ psi))


class _Propagator:
    def __init__(self, mats: AnnealMatrices, total_time: float):
        self.mats = mats
        self.T = total_time

    def H(self, t: float):
        return self.mats(t / self.T)

    def step(self, psi, t, h):
        w1 = self.mats.weights((t + (0.5 - _C) * h) / self.T)
        w2 = self.mats.weights((t + (0.5 + _C) * h) / self.T)
        first = self._combine(w1, w2, _A1, _A2)
        second = self._combine(w1, w2, _A2, _A1)
        psi = _expm_action(first, h, psi)
        return _expm_action(second, h, psi)

    def _combine(self, w1, w2, c1, c2):
        out = None
        for a, b, m in zip(w1, w2, self.mats.mats):
            c = c1 * a + c2 * b
            if c == 0.0:
                continue
            out = c * m if out is None else out + c * m
        if out is None:
            return sp.csr_matrix((self.mats.dim,) * 2) if not self.mats.dense else np.zeros((self.mats.dim,) * 2)
        return out


def propagate(mats: AnnealMatrices, psi0: np.ndarray, total_time: float, tol: float,
              h0: float | None = None, observe=None) -> tuple[np.ndarray, dict]:
    """Integrate ``i dpsi/dt = H(t / total_time) psi`` over ``[0, total_time]``.

    Local error is estimated by comparing one step of size ``h`` with two of
    size ``h/2`` and kept below ``tol``; the two-half-step result is kept.
    ``observe(t, psi)`` is called after every accepted step.
    """
    prop = _Propagator(mats, total_time)
    psi = np.array(psi0, dtype=complex)
    t = 0.0
    h = h0 if h0 is not None else min(total_time, 1.0)
    steps = rejected = 0
    max_err = 0.0
    while t < total_time:
        h = min(h, total_time - t)
        full = prop.step(psi, t, h)
        half = prop.step(prop.step(psi, t, h / 2), t + h / 2, h / 2)
        err = float(np.linalg.norm(half - full)) / 15.0
        if err <= tol or h <= MIN_STEP:
            if h <= MIN_STEP and err > tol:
                raise IntegrationError(f"step size underflow at t={t:.6g} (err={err:.3e})")
            psi = half
            t += h
            steps += 1
            max_err = max(max_err, err)
            if observe is not None:
                observe(t, psi)
            drift = abs(np.linalg.norm(psi) - 1.0)
            if drift > NORM_DRIFT_ABORT:
                raise IntegrationError(f"norm drift {drift:.3e} at t={t:.6g}")
        else:
            rejected += 1
        fac = 2.0 if err == 0 else min(2.0, max(0.2, 0.9 * (tol / err) ** 0.2))
        h *= fac
    return psi, {"steps": steps, "rejected": rejected, "max_local_error": max_err}


def ground_space(H, degeneracy_tol: float | None = None, k_max: int = 8):
    """Orthonormal basis of the lowest eigenspace of a dense/sparse Hermitian ``H``."""
    a = real_if_close(H)
    a = a.toarray() if sp.issparse(a) else np.asarray(a)
    if np.allclose(a, np.diag(np.diag(a)), rtol=0, atol=0):
        d = np.diag(a).real
        e0 = float(d.min())
        tol = 1e-8 * abs(e0) + 1e-10 if degeneracy_tol is None else degeneracy_tol
        idx = np.flatnonzero(d - e0 <= tol)
        vecs = np.zeros((a.shape[0], len(idx)))
        vecs[idx, np.arange(len(idx))] = 1.0
        return e0, vecs
    w, v = la.eigh(a, subset_by_index=[0, min(k_max, a.shape[0]) - 1])
    e0 = float(w[0])
    tol = 1e-8 * abs(e0) + 1e-10 if degeneracy_tol is None else degeneracy_tol
    keep = w - e0 <= tol
    return e0, v[:, keep]


def ground_state_probability(psi: np.ndarray, final_H, degeneracy_tol: float | None = None) -> float:
    """Squared norm of the projection of ``psi`` onto the ground space of ``final_H``."""
    _, g = ground_space(final_H, degeneracy_tol)
    amp = g.conj().T @ np.asarray(psi)
    return float(np.sum(np.abs(amp) ** 2))


def leakage(psi: np.ndarray, p: SubspacePartition) -> float:
    """Population on the high-energy indices of ``p``."""
    psi = np.asarray(psi)
    b = np.asarray(p.indices_B, dtype=np.int64)
    return float(np.sum(np.abs(psi[b]) ** 2)) if b.size else 0.0


def initial_ground_state(sched: ScheduledObservable) -> np.ndarray:
    """Ground state of ``H(s=0)``; must be nondegenerate."""
    mats = AnnealMatrices(sched, dense=True)
    e0, g = ground_space(mats(0.0))
    if g.shape[1] != 1:
        raise ValueError(f"H(0) ground space is {g.shape[1]}-fold degenerate")
    return g[:, 0].astype(complex)


def evolve(spec: EvolutionSpec, initial: np.ndarray | None = None) -> EvolutionResult:
    """Anneal ``initial`` (default: ground state of ``H(0)``) for ``time_scaling * anneal_time``.

    ``p_gs`` is measured against the ground space of ``H(1)``, restricted to
    ``spec.partition``'s low-energy set when one is given. With a partition,
    ``diagnostics["peak_leakage"]`` holds the largest B population seen at
    any accepted step.
    """
    sched = spec.sched
    dim = 1 << sched.n_qubits
    mats = AnnealMatrices(sched, dense=dim <= DENSE_EXP_MAX)
    psi0 = initial_ground_state(sched) if initial is None else np.asarray(initial, dtype=complex)
    if psi0.shape != (dim,):
        raise ValueError(f"initial state has shape {psi0.shape}, expected ({dim},)")
    n0 = np.linalg.norm(psi0)
    if abs(n0 - 1.0) > 1e-10:
        raise ValueError(f"initial state not normalized (norm {n0})")

    observe = None
    if spec.partition is not None:
        b_idx = np.asarray(spec.partition.indices_B, dtype=np.int64)
        peak = [float(np.sum(np.abs(psi0[b_idx]) ** 2))]

        def observe(t, psi):
            peak[0] = max(peak[0], float(np.sum(np.abs(psi[b_idx]) ** 2)))

    psi, diag = propagate(mats, psi0, spec.total_time, spec.tol, observe=observe)
    if spec.partition is not None:
        diag["peak_leakage"] = peak[0]

    final_H = mats(1.0)
    if spec.partition is not None:
        a = np.asarray(spec.partition.indices_A, dtype=np.int64)
        h_a = final_H[np.ix_(a, a)] if not sp.issparse(final_H) else final_H[a][:, a]
        _, g = ground_space(h_a)
        p_gs = float(np.sum(np.abs(g.conj().T @ psi[a]) ** 2))
        leak = leakage(psi, spec.partition)
    else:
        p_gs = ground_state_probability(psi, final_H)
        leak = 0.0
    drift = abs(float(np.linalg.norm(psi)) - 1.0)
    return EvolutionResult(psi, p_gs, drift, leak, diag["steps"], diag["rejected"], diag)


@dataclass(frozen=True)
class PrepSpec:
    """Reverse-anneal style preparation from the classical state ``z``.

    ``z`` is a bitstring with qubit 1 first; ``constraint`` holds the
    diagonal penalty terms that stay on throughout.
    """

    z: str
    prep_time: float
    constraint: Observable

    def __post_init__(self):
        if len(self.z) != self.constraint.n_qubits:
            raise ValueError("z length must match the constraint register")
        if self.prep_time < 0:
            raise ValueError("prep_time must be nonnegative")
        if any(not t.is_diagonal for t in self.constraint.terms):
            raise ValueError("constraint terms must be diagonal")
        d = diagonal(self.constraint).real
        if d[basis_index(self.z)] > d.min() + 1e-9 * max(1.0, abs(d.min())):
            raise ValueError(f"z={self.z} violates the constraint")


def init_hamiltonian(z: str) -> Observable:
    """``sum_i (2 z_i - 1) Z_i``, whose unique ground state is ``|z>``."""
    n = len(z)
    return Observable(tuple(PauliTerm.of(2 * int(b) - 1, f"Z{i + 1}") for i, b in enumerate(z)), n)


def prep_schedule(prep: PrepSpec, cp: float = 100.0) -> ScheduledObservable:
    n = prep.constraint.n_qubits
    driver = Observable(tuple(PauliTerm.of(-1.0, f"X{q}") for q in range(1, n + 1)), n)
    return ScheduledObservable(
        (
            (ScheduleKind.CONSTANT, prep.constraint),
            (ScheduleKind.ONE_MINUS_S, init_hamiltonian(prep.z)),
            (ScheduleKind.S, driver),
        ),
        n,
        cp,
    )


def prepare_initial(prep: PrepSpec, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Evolve ``|z>`` under ``(1-u) H_init + u (-sum X) + constraint``, ``u = t / prep_time``."""
    n = prep.constraint.n_qubits
    psi = basis_state(basis_index(prep.z), n)
    if prep.prep_time == 0:
        return psi
    sched = prep_schedule(prep)
    mats = AnnealMatrices(sched, dense=(1 << n) <= DENSE_EXP_MAX)
    out, _ = propagate(mats, psi, prep.prep_time, tol)
    return out
