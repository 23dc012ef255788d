"""Low-energy effective Hamiltonians by block partitioning.

Given a split of the computational basis into a low-energy set ``A`` and a
high-energy set ``B``, the A-block of any eigenvector of ``H`` with energy ``E``
is an eigenvector of

    H_eff(E) = H_AA - H_AB (H_BB - E)^-1 H_BA

with the same eigenvalue. Fixing ``E`` to a typical low-energy value turns
this into an ordinary Hermitian matrix on ``A``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .pauli import bit_of, bitstring

DENSE_SOLVE_MAX = 4096
SINGULAR_RTOL = 1e-10


class SingularBlockError(ValueError):
    """``H_BB - E`` is (numerically) singular: E lies in the B spectrum."""


@dataclass(frozen=True)
class SubspacePartition:
    n_qubits: int
    indices_A: tuple[int, ...]
    indices_B: tuple[int, ...]
    truncated: bool = False

    def __post_init__(self):
        a = tuple(int(i) for i in self.indices_A)
        b = tuple(int(i) for i in self.indices_B)
        object.__setattr__(self, "indices_A", a)
        object.__setattr__(self, "indices_B", b)
        dim = 1 << self.n_qubits
        if set(a) & set(b):
            raise ValueError("A and B overlap")
        if any(not 0 <= i < dim for i in a + b):
            raise ValueError("basis index out of range")
        if not self.truncated and len(a) + len(b) != dim:
            raise ValueError("untruncated partition must cover the whole basis")

    @property
    def labels_A(self) -> list[str]:
        return [bitstring(i, self.n_qubits) for i in self.indices_A]


@dataclass(frozen=True)
class EffectiveResult:
    matrix: np.ndarray
    energy_E: float
    basis_labels: tuple[int, ...]

    def to_text(self, n_qubits: int, precision: int = 17) -> str:
        """One row per A-basis state, tagged with its bitstring."""
        lines = [f"# E = {self.energy_E!r}"]
        for idx, row in zip(self.basis_labels, self.matrix):
            cells = " ".join(
                f"{z.real:.{precision}g}{z.imag:+.{precision}g}j" for z in row
            )
            lines.append(f"{bitstring(idx, n_qubits)} {cells}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AssumptionReport:
    diag_dominance: float
    coupling_ratio: float
    E_shift: float


def _complement(n_qubits: int, a: Sequence[int]) -> tuple[int, ...]:
    sa = set(a)
    return tuple(i for i in range(1 << n_qubits) if i not in sa)


def partition_from_predicate(n_qubits: int, in_A: Callable[[np.ndarray], np.ndarray]) -> SubspacePartition:
    """A = basis indices where the vectorized predicate holds, ascending."""
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    mask = np.asarray(in_A(idx), dtype=bool)
    return SubspacePartition(n_qubits, tuple(idx[mask]), tuple(idx[~mask]))


def partition_hamming(n_qubits: int, weight: int) -> SubspacePartition:
    if not 0 <= weight <= n_qubits:
        raise ValueError(f"weight {weight} impossible on {n_qubits} qubits")
    return partition_from_predicate(n_qubits, lambda i: np.bitwise_count(i) == weight)


def partition_parity(n_qubits: int, qubits: Sequence[int], even: bool = True) -> SubspacePartition:
    qubits = list(qubits)

    def pred(i):
        par = np.zeros_like(i)
        for q in qubits:
            par ^= bit_of(i, q, n_qubits)
        return par == (0 if even else 1)

    return partition_from_predicate(n_qubits, pred)


def truncate_B(p: SubspacePartition, keep: Callable[[int], bool]) -> SubspacePartition:
    """Restrict B to the indices selected by ``keep``; marks the partition truncated."""
    return replace(p, indices_B=tuple(i for i in p.indices_B if keep(i)), truncated=True)


def _blocks(H, p: SubspacePartition):
    H = sp.csr_matrix(H)
    a = np.asarray(p.indices_A, dtype=np.int64)
    b = np.asarray(p.indices_B, dtype=np.int64)
    haa = H[a][:, a]
    hab = H[a][:, b]
    hba = H[b][:, a]
    hbb = H[b][:, b]
    return haa, hab, hba, hbb


def default_energy(H, p: SubspacePartition) -> float:
    """Lowest diagonal entry of H_AA."""
    d = sp.csr_matrix(H).diagonal()[list(p.indices_A)]
    return float(np.min(d.real))


def schur_effective(H, p: SubspacePartition, E: float | None = None) -> EffectiveResult:
    """Dense ``H_AA - H_AB (H_BB - E I)^-1 H_BA`` on the partition ``p``.

    ``E`` defaults to :func:`default_energy`. Raises :class:`SingularBlockError`
    when ``H_BB - E`` cannot be inverted.
    """
    if E is None:
        E = default_energy(H, p)
    E = float(E)
    haa, hab, hba, hbb = _blocks(H, p)
    haa = haa.toarray()
    nb = len(p.indices_B)
    if nb == 0:
        return EffectiveResult(haa, E, p.indices_A)

    if nb <= DENSE_SOLVE_MAX:
        shifted = hbb.toarray() - E * np.eye(nb)
        sv = la.svdvals(shifted)
        scale = max(float(np.abs(hbb).max()), abs(E), 1.0)
        if sv[-1] <= SINGULAR_RTOL * scale:
            raise SingularBlockError(f"H_BB - E singular at E={E} (smallest singular value {sv[-1]:.3e})")
        sol = la.solve(shifted, hba.toarray(), assume_a="her")
    else:
        shifted = (hbb - E * sp.identity(nb, format="csr")).tocsc()
        rhs = hba.toarray()
        sol = np.empty_like(rhs)
        for k in range(rhs.shape[1]):
            x, info = spla.minres(shifted, rhs[:, k], rtol=1e-13, maxiter=20 * nb)
            if info != 0:
                raise SingularBlockError(f"column solve {k} failed (info={info}) at E={E}")
            sol[:, k] = x
    heff = haa - hab @ sol
    return EffectiveResult(np.asarray(heff), E, p.indices_A)


def strip_identity(m) -> np.ndarray:
    m = np.asarray(m)
    n = m.shape[0]
    if m.ndim != 2 or m.shape[1] != n:
        raise ValueError("square matrix required")
    return m - (np.trace(m) / n) * np.eye(n)


def validate_assumptions(H, p: SubspacePartition, E: float | None = None) -> AssumptionReport:
    """Numbers behind the three partitioning assumptions.

    * ``diag_dominance``: largest off-diagonal magnitude of H_BB over its
      smallest diagonal magnitude (0 when H_BB is diagonal);
    * ``coupling_ratio``: spectral norm of H_AB over the gap between the
      lowest B diagonal and the highest A diagonal;
    * ``E_shift``: distance of ``E`` from the lowest A diagonal.
    """
    if E is None:
        E = default_energy(H, p)
    haa, hab, _, hbb = _blocks(H, p)
    dB = hbb.diagonal().real
    dA = haa.diagonal().real
    off = (hbb - sp.diags(hbb.diagonal())).tocsr()
    off.eliminate_zeros()
    off_max = float(abs(off).max()) if off.nnz else 0.0
    dmin = float(np.min(np.abs(dB))) if dB.size else np.inf
    diag_dom = off_max / dmin if dmin > 0 else (0.0 if off_max == 0 else np.inf)

    gap = float(np.min(dB) - np.max(dA)) if dB.size and dA.size else np.inf
    nab = float(la.norm(hab.toarray(), 2)) if hab.shape[0] and hab.shape[1] else 0.0
    coupling = nab / abs(gap) if gap != 0 else np.inf
    return AssumptionReport(diag_dom, coupling, abs(float(E) - float(np.min(dA))))
