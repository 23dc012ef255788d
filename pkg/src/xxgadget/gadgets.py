"""Physical and closed-form effective Hamiltonians of the -XX gadgets.

Three gadgets live here:

* three-body: logical qubits 1, 2 plus a parity qubit "12" (register index 3)
  held at even parity by ``-C_p Z1 Z2 Z12``;
* one-hot: four physical qubits held at Hamming weight 1 by
  ``C_p (sum Z - 2)^2``, encoding two logical qubits;
* chain: two physical qubits held at equal value by ``-2 C_p Z Z``, encoding
  one logical qubit under homogeneous driving.

Closed forms are written on the logical register (qubit 1 = first logical
bit). Logical states map to physical states as follows:

* three-body: ``(b1, b2) -> (b1, b2, b1 ^ b2)``
* one-hot: ``00 -> 0001, 01 -> 0010, 10 -> 0100, 11 -> 1000``
* chain: ``b -> bb``

In each case sorting the feasible physical indices ascending gives the logical
basis in ascending order, which :func:`logical_basis` relies on.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass

from .pauli import Observable, PauliTerm, basis_index

log = logging.getLogger(__name__)

DOMINANCE_RATIO = 10.0

ONE_HOT_TABLE = {"0001": "00", "0010": "01", "0100": "10", "1000": "11"}
_ONE_HOT_BY_INDEX = {basis_index(k): v for k, v in ONE_HOT_TABLE.items()}

THREE_BODY_QUBITS = {"1": 1, "2": 2, "12": 3}


class PenaltyDominanceWarning(UserWarning):
    """C_p is not much larger than the drives, so the gadget picture is shaky."""


def _check_penalty(cp: float, drives) -> None:
    if not cp > 0:
        raise ValueError(f"penalty strength must be positive, got {cp}")
    dmax = max((abs(d) for d in drives), default=0.0)
    if cp < DOMINANCE_RATIO * dmax:
        warnings.warn(
            f"C_p={cp} < {DOMINANCE_RATIO:g} x max|d|={dmax}; effective description may break down",
            PenaltyDominanceWarning,
            stacklevel=3,
        )


@dataclass(frozen=True)
class ThreeBodySpec:
    d1: float
    d2: float
    d12: float
    cp: float
    h1: float = 0.0
    h2: float = 0.0
    j12: float = 0.0

    def __post_init__(self):
        _check_penalty(self.cp, (self.d1, self.d2, self.d12))


@dataclass(frozen=True)
class OneHotSpec:
    d1: float
    d2: float
    d3: float
    d4: float
    cp: float
    h1: float = 0.0
    h2: float = 0.0
    j12: float = 0.0

    def __post_init__(self):
        _check_penalty(self.cp, self.drives)

    @classmethod
    def equal(cls, d: float, cp: float, **diag) -> "OneHotSpec":
        return cls(d, d, d, d, cp, **diag)

    @property
    def drives(self) -> tuple[float, float, float, float]:
        return (self.d1, self.d2, self.d3, self.d4)


@dataclass(frozen=True)
class ChainSpec:
    d1: float
    d2: float
    cp: float

    def __post_init__(self):
        if not self.cp > 0:
            raise ValueError(f"penalty strength must be positive, got {self.cp}")


class LogicalZKind(enum.Enum):
    IDENTITY = "I"
    Z1 = "Z1"
    Z2 = "Z2"
    Z1Z2 = "Z1Z2"


# signs of (Z1, Z2, Z3, Z4) in the half-sum realizing each logical operator
LOGICAL_Z_SIGNS = {
    LogicalZKind.IDENTITY: (1, 1, 1, 1),
    LogicalZKind.Z1: (1, 1, -1, -1),
    LogicalZKind.Z2: (1, -1, 1, -1),
    LogicalZKind.Z1Z2: (-1, 1, 1, -1),
}


def _terms(n, *items) -> Observable:
    return Observable(tuple(PauliTerm.of(c, ops) for c, ops in items), n)


def three_body_physical(spec: ThreeBodySpec) -> Observable:
    """``-C_p Z1 Z2 Z12 - sum d X + (h1 Z1 + h2 Z2 + J12 Z12) / C_p`` on 3 qubits."""
    cp = spec.cp
    return _terms(
        3,
        (-cp, "Z1 Z2 Z3"),
        (-spec.d1, "X1"),
        (-spec.d2, "X2"),
        (-spec.d12, "X3"),
        (spec.h1 / cp, "Z1"),
        (spec.h2 / cp, "Z2"),
        (spec.j12 / cp, "Z3"),
    ).simplify()


def three_body_effective_closed(spec: ThreeBodySpec) -> Observable:
    d1, d2, d12, cp = spec.d1, spec.d2, spec.d12, spec.cp
    return _terms(
        2,
        (-d1 * d12 / cp, "X1"),
        (-d2 * d12 / cp, "X2"),
        (-d1 * d2 / cp, "X1 X2"),
        (spec.h1 / cp, "Z1"),
        (spec.h2 / cp, "Z2"),
        (spec.j12 / cp, "Z1 Z2"),
    ).simplify()


def one_hot_penalty(cp: float, qubits=(1, 2, 3, 4), n_qubits: int = 4) -> Observable:
    """``C_p (sum_i Z_i - 2)^2`` expanded with ``Z^2 = I`` into two-body form.

    ``(sum Z - 2)^2 = 2 sum_{i<j} Z_i Z_j - 4 sum Z_i + 8`` for four qubits.
    """
    if len(qubits) != 4:
        raise ValueError("one-hot penalty acts on exactly four qubits")
    items = [(8.0 * cp, "")]
    for a in range(4):
        for b in range(a + 1, 4):
            items.append((2.0 * cp, f"Z{qubits[a]} Z{qubits[b]}"))
    for q in qubits:
        items.append((-4.0 * cp, f"Z{q}"))
    return _terms(n_qubits, *items)


def logical_z_physical(kind: LogicalZKind | str, qubits=(1, 2, 3, 4), n_qubits: int = 4) -> Observable:
    """Half-sum of physical Z's equal to a logical Z operator on weight-1 states."""
    kind = LogicalZKind(kind) if isinstance(kind, str) else kind
    signs = LOGICAL_Z_SIGNS[kind]
    return _terms(n_qubits, *[(0.5 * s, f"Z{q}") for s, q in zip(signs, qubits)])


def one_hot_physical(spec: OneHotSpec) -> Observable:
    """Penalty, drives and ``1/(4 C_p)``-scaled logical diagonal terms.

    The J12 term uses the logical ``Z1 Z2`` half-sum ``(-Z1 + Z2 + Z3 - Z4) / 2``.
    """
    cp = spec.cp
    if spec.j12:
        log.info("one-hot J12 term uses the (-Z1+Z2+Z3-Z4) sign pattern")
    obs = one_hot_penalty(cp) + _terms(4, *[(-d, f"X{i + 1}") for i, d in enumerate(spec.drives)])
    # (1/4C_p) * h * (2 * logical half-sum) = (1/2C_p) * h * logical Z
    logical = Observable.zero(4)
    for coeff, kind in (
        (spec.h1, LogicalZKind.Z1),
        (spec.h2, LogicalZKind.Z2),
        (spec.j12, LogicalZKind.Z1Z2),
    ):
        if coeff:
            logical += logical_z_physical(kind) * (coeff / (2.0 * cp))
    # kept apart from the penalty's local Z terms: folding a 1e-4 coefficient
    # into a -4 C_p one would round it off
    return obs.simplify() + logical.simplify()


def one_hot_effective_closed(spec: OneHotSpec) -> Observable:
    d1, d2, d3, d4 = spec.drives
    k = 1.0 / (4.0 * spec.cp)
    diag = 1.0 / (2.0 * spec.cp)
    return _terms(
        2,
        (-k * (d1 * d3 + d2 * d4), "X1"),
        (-k * (d1 * d2 + d3 * d4), "X2"),
        (-k * (d2 * d3 + d1 * d4), "X1 X2"),
        (k * (d1 * d3 - d2 * d4), "X1 Z2"),
        (k * (d1 * d2 - d3 * d4), "Z1 X2"),
        (k * (d1 * d4 - d2 * d3), "Y1 Y2"),
        (diag * spec.h1, "Z1"),
        (diag * spec.h2, "Z2"),
        (diag * spec.j12, "Z1 Z2"),
    ).simplify()


def decode_one_hot(index: int) -> str | None:
    """Logical pair for a 4-qubit basis index, or ``None`` if not weight 1."""
    if not 0 <= index < 16:
        raise ValueError(f"not a 4-qubit basis index: {index}")
    return _ONE_HOT_BY_INDEX.get(index)


def encode_one_hot(logical: str) -> int:
    for idx, lab in _ONE_HOT_BY_INDEX.items():
        if lab == logical:
            return idx
    raise ValueError(f"not a two-bit logical label: {logical!r}")


def decode_three_body(index: int) -> str | None:
    b1, b2, b12 = (index >> 2) & 1, (index >> 1) & 1, index & 1
    if b12 != b1 ^ b2:
        return None
    return f"{b1}{b2}"


def chain_physical(spec: ChainSpec) -> Observable:
    return _terms(
        2,
        (-spec.d1, "X1"),
        (-spec.d2, "X2"),
        (-2.0 * spec.cp, "Z1 Z2"),
    )


def chain_effective_closed(spec: ChainSpec) -> Observable:
    return _terms(1, (-spec.d1 * spec.d2 / (2.0 * spec.cp), "X1")).simplify()


def chain_logical_z() -> Observable:
    return _terms(2, (0.5, "Z1"), (0.5, "Z2"))


def logical_basis(decode, physical_indices) -> list[int]:
    """Permutation putting ``physical_indices`` in ascending logical order.

    ``decode`` maps a physical index to a logical bitstring.
    """
    labels = [decode(i) for i in physical_indices]
    if any(lab is None for lab in labels):
        raise ValueError("physical index outside the feasible subspace")
    return sorted(range(len(labels)), key=lambda k: int(labels[k], 2))
