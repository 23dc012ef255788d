"""Weighted Pauli strings and their sparse matrix representation.

Qubits are labelled from 1 in the public interface. Basis index bit ordering
puts qubit 1 on the most significant bit, so for ``n`` qubits the basis state
``|b_1 b_2 ... b_n>`` has index ``sum_q b_q * 2**(n - q)``. The only place
that knows this is :func:`qubit_bit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

AXES = ("I", "X", "Y", "Z")

HERMITIAN_TOL = 1e-14
EXPECTATION_IMAG_TOL = 1e-10


def qubit_bit(qubit: int, n_qubits: int) -> int:
    """Bit position (0 = least significant) holding 1-based ``qubit``."""
    if not 1 <= qubit <= n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")
    return n_qubits - qubit


def bit_of(index, qubit: int, n_qubits: int):
    """Value (0/1) of ``qubit`` in basis ``index``; works on arrays too."""
    return (index >> qubit_bit(qubit, n_qubits)) & 1


def basis_index(bits: str | Iterable[int]) -> int:
    """Basis index of a bitstring written with qubit 1 first, e.g. ``"0001"``."""
    bits = [int(b) for b in bits]
    idx = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bad bit {b!r}")
        idx = (idx << 1) | b
    return idx


def bitstring(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b") if n_qubits else ""


@dataclass(frozen=True)
class PauliTerm:
    """``coeff * P_{q1} P_{q2} ...`` with identity on every unlisted qubit.

    ``factors`` is a sorted tuple of ``(qubit, axis)`` pairs; identity factors
    are dropped on construction.
    """

    coeff: float
    factors: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        coeff = float(self.coeff)
        if not math.isfinite(coeff):
            raise ValueError(f"non-finite coefficient {self.coeff!r}")
        seen = set()
        cleaned = []
        for q, a in self.factors:
            q = int(q)
            a = str(a).upper()
            if a not in AXES:
                raise ValueError(f"unknown Pauli axis {a!r}")
            if q < 1:
                raise IndexError(f"qubit labels start at 1, got {q}")
            if q in seen:
                raise ValueError(f"qubit {q} appears twice in one term")
            seen.add(q)
            if a != "I":
                cleaned.append((q, a))
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "factors", tuple(sorted(cleaned)))

    @classmethod
    def of(cls, coeff: float, ops: Mapping[int, str] | str = ()) -> "PauliTerm":
        """Build from a ``{qubit: axis}`` mapping or a compact string like ``"Z1 Z2"``."""
        if isinstance(ops, str):
            pairs = []
            for tok in ops.split():
                pairs.append((int(tok[1:]), tok[0]))
            return cls(coeff, tuple(pairs))
        return cls(coeff, tuple(dict(ops).items()))

    @property
    def arity(self) -> int:
        return len(self.factors)

    @property
    def max_qubit(self) -> int:
        return max((q for q, _ in self.factors), default=0)

    @property
    def is_diagonal(self) -> bool:
        return all(a == "Z" for _, a in self.factors)

    def label(self) -> str:
        return " ".join(f"{a}@{q}" for q, a in self.factors)

    def scaled(self, c: float) -> "PauliTerm":
        return PauliTerm(self.coeff * c, self.factors)

    def masks(self, n_qubits: int) -> tuple[int, int, int]:
        """(flip mask, sign mask, number of Y factors) on ``n_qubits``."""
        flip = sign = 0
        n_y = 0
        for q, a in self.factors:
            bit = 1 << qubit_bit(q, n_qubits)
            if a in ("X", "Y"):
                flip |= bit
            if a in ("Y", "Z"):
                sign |= bit
            if a == "Y":
                n_y += 1
        return flip, sign, n_y


@dataclass(frozen=True)
class Observable:
    """Sum of Pauli terms on a fixed register of ``n_qubits``."""

    terms: tuple[PauliTerm, ...]
    n_qubits: int

    def __post_init__(self):
        terms = tuple(self.terms)
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be nonnegative")
        for t in terms:
            if t.max_qubit > self.n_qubits:
                raise IndexError(
                    f"term {t.label()} acts outside {self.n_qubits} qubits"
                )
        object.__setattr__(self, "terms", terms)

    @classmethod
    def zero(cls, n_qubits: int) -> "Observable":
        return cls((), n_qubits)

    def __add__(self, other: "Observable") -> "Observable":
        if not isinstance(other, Observable):
            return NotImplemented
        return Observable(self.terms + other.terms, max(self.n_qubits, other.n_qubits))

    def __mul__(self, c: float) -> "Observable":
        return Observable(tuple(t.scaled(c) for t in self.terms), self.n_qubits)

    __rmul__ = __mul__

    def __neg__(self) -> "Observable":
        return self * -1.0

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def with_qubits(self, n_qubits: int) -> "Observable":
        return Observable(self.terms, n_qubits)

    def relabel(self, mapping: Mapping[int, int], n_qubits: int) -> "Observable":
        """Move qubit ``q`` to ``mapping[q]`` on a register of ``n_qubits``."""
        out = []
        for t in self.terms:
            out.append(PauliTerm(t.coeff, tuple((mapping[q], a) for q, a in t.factors)))
        return Observable(tuple(out), n_qubits)

    def simplify(self, atol: float = 0.0) -> "Observable":
        """Merge terms with identical factors, dropping those with ``|coeff| <= atol``.

        Order of first appearance is kept so output stays deterministic.
        """
        acc: dict[tuple, float] = {}
        for t in self.terms:
            acc[t.factors] = acc.get(t.factors, 0.0) + t.coeff
        terms = tuple(PauliTerm(c, f) for f, c in acc.items() if abs(c) > atol)
        return Observable(terms, self.n_qubits)

    def coefficient(self, ops: Mapping[int, str] | str = ()) -> float:
        """Total coefficient of one Pauli string (0.0 if absent)."""
        key = PauliTerm.of(1.0, ops).factors
        return sum(t.coeff for t in self.terms if t.factors == key)

    def max_arity(self) -> int:
        return max((t.arity for t in self.terms), default=0)

    def to_text(self) -> str:
        return "".join(format_term(t) + "\n" for t in self.terms)

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "Observable":
        terms = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                terms.append(parse_term(line))
        if n_qubits is None:
            n_qubits = max((t.max_qubit for t in terms), default=0)
        return cls(tuple(terms), n_qubits)


def format_term(term: PauliTerm) -> str:
    """``coeff op@q ...``; ``repr`` keeps the float round-trippable."""
    label = term.label()
    return f"{term.coeff!r} {label}" if label else f"{term.coeff!r}"


def parse_term(line: str) -> PauliTerm:
    tokens = line.split()
    if not tokens:
        raise ValueError("empty term line")
    coeff = float(tokens[0])
    pairs = []
    for tok in tokens[1:]:
        axis, sep, q = tok.partition("@")
        if not sep:
            raise ValueError(f"malformed factor {tok!r}, expected e.g. Z@3")
        pairs.append((int(q), axis))
    return PauliTerm(coeff, tuple(pairs))


def _signs(sign_mask: int, rows: np.ndarray) -> np.ndarray:
    if not sign_mask:
        return np.ones(rows.shape, dtype=np.int64)
    return 1 - 2 * (np.bitwise_count(rows & sign_mask) & 1).astype(np.int64)


def _term_values(term: PauliTerm, n_qubits: int, rows: np.ndarray):
    flip, sign, n_y = term.masks(n_qubits)
    # <r|P|r^flip> = (-i)^{nY} (-1)^{popcount(r & (Y|Z mask))}
    vals = _signs(sign, rows).astype(complex)
    vals *= term.coeff * (-1j) ** n_y
    return flip, vals


def term_matrix(term: PauliTerm, n_qubits: int) -> sp.csr_matrix:
    """Sparse ``2**n x 2**n`` matrix of one weighted Pauli string."""
    if term.max_qubit > n_qubits:
        raise IndexError(f"term {term.label()} acts outside {n_qubits} qubits")
    dim = 1 << n_qubits
    rows = np.arange(dim, dtype=np.int64)
    flip, vals = _term_values(term, n_qubits, rows)
    return sp.csr_matrix((vals, (rows, rows ^ flip)), shape=(dim, dim))


def _grouped_values(obs: Observable, rows: np.ndarray) -> dict[int, np.ndarray]:
    """Row values of every flip pattern, keyed by flip mask.

    Terms sharing a flip mask and a complex weight have their integer sign
    patterns added first, so a penalty like ``C (sum Z - 2)^2`` is rounded
    once per distinct coefficient rather than once per term.
    """
    n = obs.n_qubits
    ints: dict[int, dict[complex, np.ndarray]] = {}
    for t in obs.terms:
        flip, sign, n_y = t.masks(n)
        w = complex(t.coeff * (-1j) ** n_y)
        by_w = ints.setdefault(flip, {})
        if w in by_w:
            by_w[w] += _signs(sign, rows)
        else:
            by_w[w] = _signs(sign, rows)
    out = {}
    for flip, by_w in ints.items():
        acc = np.zeros(rows.shape, dtype=complex)
        for w in sorted(by_w, key=lambda z: (-abs(z), z.real, z.imag)):
            acc += w * by_w[w]
        out[flip] = acc
    return out


def diagonal(obs: Observable) -> np.ndarray:
    """Diagonal of the assembled matrix, computed without building it."""
    rows = np.arange(1 << obs.n_qubits, dtype=np.int64)
    vals = _grouped_values(obs, rows)
    return vals.get(0, np.zeros(rows.shape, dtype=complex))


def assemble(obs: Observable) -> sp.csr_matrix:
    """Sparse complex matrix of an Observable; duplicate entries are merged."""
    dim = 1 << obs.n_qubits
    rows = np.arange(dim, dtype=np.int64)
    by_flip = _grouped_values(obs, rows)
    if not by_flip:
        return sp.csr_matrix((dim, dim), dtype=complex)
    flips = sorted(by_flip)
    r = np.concatenate([rows] * len(flips))
    c = np.concatenate([rows ^ f for f in flips])
    v = np.concatenate([by_flip[f] for f in flips])
    m = sp.csr_matrix((v, (r, c)), shape=(dim, dim))
    m.sum_duplicates()
    m.eliminate_zeros()
    return m


def _check_dim(op, psi):
    if op.shape[1] != psi.shape[0]:
        raise ValueError(f"dimension mismatch: operator {op.shape}, state {psi.shape}")


def apply(op, psi: np.ndarray) -> np.ndarray:
    """Matrix-vector product; the result is not renormalized."""
    psi = np.asarray(psi)
    _check_dim(op, psi)
    return op @ psi


def expectation(op, psi: np.ndarray) -> float:
    """<psi|op|psi> for Hermitian ``op``.

    Raises ``ValueError`` when the imaginary part is too large to be rounding,
    which means ``op`` is not Hermitian.
    """
    psi = np.asarray(psi)
    _check_dim(op, psi)
    val = np.vdot(psi, op @ psi)
    if abs(val.imag) > EXPECTATION_IMAG_TOL:
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; operator not Hermitian?")
    return float(val.real)


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    diff = m - m.conj().T
    if sp.issparse(diff):
        return diff.nnz == 0 or float(abs(diff).max()) < tol
    return float(np.abs(diff).max(initial=0.0)) < tol


def basis_state(index: int, n_qubits: int) -> np.ndarray:
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi
