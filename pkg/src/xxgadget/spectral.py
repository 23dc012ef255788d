"""Low-lying spectra along an anneal: gap curves, minimum gaps and sweeps."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .pauli import assemble
from .toy import ScheduledObservable, ToyInstance, Variant, build_anneal

log = logging.getLogger(__name__)

# Dense eigh is used up to this dimension; sparse Lanczos above. On one core
# ARPACK already beats LAPACK at 2**11 for the gadget Hamiltonians.
DENSE_MAX = 2**11
DEGENERACY_TOL = 1e-10
MAX_MATVECS = 5000
GOLDEN_TOL = 1e-5
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class EigensolverError(RuntimeError):
    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals


def real_if_close(m):
    """Drop an identically zero imaginary part; keeps sparse/dense type."""
    if sp.issparse(m):
        if np.iscomplexobj(m.data) and not np.any(m.data.imag):
            m = m.real
        return m
    m = np.asarray(m)
    if np.iscomplexobj(m) and not np.any(m.imag):
        return m.real
    return m


def lowest_eigs(op, k: int = 3, *, dense_max: int = DENSE_MAX, v0=None,
                return_vectors: bool = False, info: dict | None = None):
    """The ``k`` smallest eigenvalues of a Hermitian operator, ascending.

    Dense LAPACK for ``dim <= dense_max``, otherwise ARPACK Lanczos with a
    matvec budget of :data:`MAX_MATVECS`. On Lanczos failure the solve is
    retried with a wider Krylov space before :class:`EigensolverError` is
    raised. ``info`` (if given) receives ``method`` and ``residuals``.
    """
    dim = op.shape[0]
    if not 1 <= k <= dim:
        raise ValueError(f"k={k} out of range for dimension {dim}")
    op = real_if_close(op)
    info = {} if info is None else info

    if dim <= dense_max or k >= dim - 1:
        a = op.toarray() if sp.issparse(op) else np.asarray(op)
        w, v = la.eigh(a, subset_by_index=[0, k - 1])
        info["method"] = "dense"
        info["residuals"] = [0.0] * k
        return (w, v) if return_vectors else w

    op = sp.csr_matrix(op)
    if v0 is not None:
        v0 = np.asarray(v0)
        if not np.iscomplexobj(op.data):
            v0 = v0.real if np.any(v0.real) else v0.imag
    last = None
    for ncv in (max(2 * k + 1, 40), max(4 * k + 1, 100)):
        ncv = min(ncv, dim - 1)
        try:
            w, v = spla.eigsh(op, k=k, which="SA", tol=0, ncv=ncv, v0=v0,
                              maxiter=max(1, MAX_MATVECS // ncv) * 4)
        except spla.ArpackNoConvergence as exc:
            last = exc
            log.warning("Lanczos did not converge with ncv=%d, retrying", ncv)
            continue
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        res = [float(np.linalg.norm(op @ v[:, i] - w[i] * v[:, i])) for i in range(k)]
        info["method"] = f"lanczos(ncv={ncv})"
        info["residuals"] = res
        return (w, v) if return_vectors else w
    res = None
    if last is not None and last.eigenvalues is not None and len(last.eigenvalues):
        res = [float(np.linalg.norm(op @ last.eigenvectors[:, i] - lam * last.eigenvectors[:, i]))
               for i, lam in enumerate(last.eigenvalues)]
    raise EigensolverError(f"Lanczos failed for dimension {dim}", residuals=res)


class AnnealMatrices:
    """Group matrices of a :class:`ScheduledObservable`, assembled once."""

    def __init__(self, sched: ScheduledObservable, dense: bool | None = None):
        self.sched = sched
        self.dim = 1 << sched.n_qubits
        if dense is None:
            dense = self.dim <= DENSE_MAX
        self.dense = dense
        self.kinds = []
        self.mats = []
        for kind, obs in sched.groups:
            m = real_if_close(assemble(obs))
            self.kinds.append(kind)
            self.mats.append(m.toarray() if dense else m)
        self.is_real = all(not np.iscomplexobj(m.data if sp.issparse(m) else m) for m in self.mats)

    def weights(self, s: float) -> list[float]:
        s = min(max(s, 0.0), 1.0)
        return [kind(s, self.sched.cp) for kind in self.kinds]

    def __call__(self, s: float):
        out = None
        for w, m in zip(self.weights(s), self.mats):
            if w == 0.0:
                continue
            out = w * m if out is None else out + w * m
        if out is None:
            out = np.zeros((self.dim, self.dim)) if self.dense else sp.csr_matrix((self.dim, self.dim))
        return out


@dataclass
class GapCurve:
    s_values: np.ndarray
    gaps: np.ndarray
    energies: np.ndarray
    degenerate: np.ndarray

    def rows(self):
        for s, e, g in zip(self.s_values, self.energies, self.gaps):
            yield (float(s), *[float(x) for x in e], float(g))


@dataclass
class MinGapResult:
    delta_min: float
    s_star: float
    refinement_iterations: int
    boundary: bool = False
    evaluations: int = 0
    rescans: int = 0


def _clamp_gap(e0: float, e1: float) -> tuple[float, bool]:
    g = e1 - e0
    if g < DEGENERACY_TOL:
        return 0.0, True
    return g, False


class _GapFunction:
    """Memoized ``s -> (gap, energies)`` with a Lanczos warm start."""

    def __init__(self, sched: ScheduledObservable, k: int, dense_max: int = DENSE_MAX):
        self.mats = AnnealMatrices(sched, dense=(1 << sched.n_qubits) <= dense_max)
        self.k = k
        self.dense_max = dense_max
        self.cache: dict[float, tuple[float, np.ndarray, bool]] = {}
        self._v0 = None

    def energies(self, s: float):
        s = float(s)
        if s not in self.cache:
            w, v = lowest_eigs(self.mats(s), self.k, dense_max=self.dense_max,
                               v0=self._v0, return_vectors=True)
            if not self.mats.dense:
                self._v0 = v[:, 0]
            g, deg = _clamp_gap(float(w[0]), float(w[1]))
            self.cache[s] = (g, np.asarray(w, dtype=float), deg)
        return self.cache[s]

    def __call__(self, s: float) -> float:
        return self.energies(s)[0]


def gap_curve(sched: ScheduledObservable, grid: Sequence[float], k: int = 3,
              dense_max: int = DENSE_MAX) -> GapCurve:
    grid = np.asarray(grid, dtype=float)
    if grid.size and (grid.min() < 0 or grid.max() > 1):
        raise ValueError("grid must lie in [0, 1]")
    if k < 2:
        raise ValueError("need k >= 2 for a gap")
    f = _GapFunction(sched, k, dense_max)
    gaps, energies, deg = [], [], []
    for s in grid:
        g, w, d = f.energies(s)
        gaps.append(g)
        energies.append(w)
        deg.append(d)
    return GapCurve(grid, np.array(gaps), np.array(energies).reshape(len(grid), k), np.array(deg))


def golden_section(f, a: float, b: float, tol: float = GOLDEN_TOL):
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x), iterations)``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol:
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc <= fd else (d, fd)
    return x, fx, it


def min_gap(sched: ScheduledObservable, coarse_grid_size: int = 101, k: int = 2,
            tol: float = GOLDEN_TOL, dense_max: int = DENSE_MAX) -> MinGapResult:
    """Coarse scan on ``[0, 1]`` followed by golden-section refinement.

    If refinement ends against its bracket edge the bracket is re-scanned on a
    10x finer grid and refined again (once).
    """
    if coarse_grid_size < 11:
        raise ValueError("coarse_grid_size must be >= 11")
    f = _GapFunction(sched, max(k, 2), dense_max)
    grid = np.linspace(0.0, 1.0, coarse_grid_size)
    vals = np.array([f(s) for s in grid])
    i = int(np.argmin(vals))
    if i in (0, len(grid) - 1):
        log.warning("minimum gap on the boundary s=%g", grid[i])
        return MinGapResult(float(vals[i]), float(grid[i]), 0, boundary=True, evaluations=len(f.cache))

    a, b = grid[i - 1], grid[i + 1]
    x, fx, iters = golden_section(f, a, b, tol)
    rescans = 0
    if min(x - a, b - x) <= tol:
        rescans = 1
        fine = np.linspace(a, b, 10 * 2 + 1)
        fv = np.array([f(s) for s in fine])
        j = int(np.argmin(fv))
        a2, b2 = fine[max(j - 1, 0)], fine[min(j + 1, len(fine) - 1)]
        x, fx, it2 = golden_section(f, a2, b2, tol)
        iters += it2
    # the coarse points may still hold a lower value than a poorly bracketed refinement
    best = min(f.cache.items(), key=lambda kv: kv[1][0])
    if best[1][0] < fx:
        x, fx = best[0], best[1][0]
    return MinGapResult(float(fx), float(x), iters, evaluations=len(f.cache), rescans=rescans)


@dataclass
class SweepRecord:
    n0: int
    variant: str
    cp: float
    delta_min: float
    s_star: float
    scaled: float
    seconds: float = 0.0
    error: str | None = None
    diagnostics: dict = field(default_factory=dict)


def gap_scaling_sweep(n0_list: Iterable[int], variants: Iterable[str], cp: float = 100.0,
                      scale_non_gadget_by_cp: bool = False, coarse_grid_size: int = 101,
                      jzz: float | None = None, delta_w: float | None = None) -> list[SweepRecord]:
    """Minimum gap per ``(n0, variant)``; failures are recorded, not raised.

    ``scaled`` holds ``C_p * delta_min`` for non-gadget variants when
    ``scale_non_gadget_by_cp`` is set and ``delta_min`` otherwise.
    """
    extra = {}
    if jzz is not None:
        extra["jzz"] = jzz
    if delta_w is not None:
        extra["delta_w"] = delta_w
    out = []
    for n0 in sorted(set(n0_list)):
        for v in variants:
            v = Variant(v)
            t0 = time.perf_counter()
            try:
                sched, _ = build_anneal(ToyInstance(n0, cp=cp, variant=v, **extra))
                r = min_gap(sched, coarse_grid_size)
            except Exception as exc:  # noqa: BLE001 - sweep keeps going
                log.error("sweep cell n0=%d %s failed: %s", n0, v.value, exc)
                out.append(SweepRecord(n0, v.value, cp, math.nan, math.nan, math.nan,
                                       time.perf_counter() - t0, error=str(exc)))
                continue
            scaled = r.delta_min * cp if (scale_non_gadget_by_cp and not v.is_gadget) else r.delta_min
            out.append(SweepRecord(n0, v.value, cp, r.delta_min, r.s_star, scaled,
                                   time.perf_counter() - t0,
                                   diagnostics={"refinement_iterations": r.refinement_iterations,
                                                "evaluations": r.evaluations,
                                                "boundary": r.boundary}))
    return out


@dataclass
class CpErrorRecord:
    cp: float
    delta_min_oh_scaled: float
    delta_min_xx: float
    normalized_error: float


def cp_error_sweep(n0: int, cp_list: Iterable[float], coarse_grid_size: int = 101,
                   jzz: float | None = None, delta_w: float | None = None) -> list[CpErrorRecord]:
    """``|D_xx - 2 C_p D_oh(C_p)| / D_xx`` for each ``C_p``; ``D_xx`` is computed once."""
    cp_list = list(cp_list)
    if any(not c > 0 for c in cp_list):
        raise ValueError("C_p values must be positive")
    extra = {}
    if jzz is not None:
        extra["jzz"] = jzz
    if delta_w is not None:
        extra["delta_w"] = delta_w
    sched_xx, _ = build_anneal(ToyInstance(n0, variant=Variant.XX, **extra))
    dxx = min_gap(sched_xx, coarse_grid_size).delta_min
    out = []
    for cp in cp_list:
        sched, _ = build_anneal(ToyInstance(n0, cp=cp, variant=Variant.ONE_HOT, **extra))
        doh = 2.0 * cp * min_gap(sched, coarse_grid_size).delta_min
        out.append(CpErrorRecord(cp, doh, dxx, abs(dxx - doh) / dxx))
    return out
