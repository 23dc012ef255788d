"""Weighted maximum-independent-set toy problem and its annealing Hamiltonians.

The graph is complete bipartite between ``G0`` (``n0`` nodes) and ``G1``
(``n0 + 1`` nodes). The first two ``G0`` nodes form the pair that receives the
extra ``-XX`` driver term, either directly or through a one-hot gadget.

Four variants are built:

``tf``
    ``(1-s) (-sum X) + s H_p`` on ``2 n0 + 1`` qubits.
``xx``
    as ``tf`` with ``-X1 X2`` added to the driver.
``onehot``
    G0 nodes 1 and 2 replaced by the four gadget qubits ``1h..4h``.
``onehot-hom``
    as ``onehot`` with every other node replaced by a ferromagnetic pair, so
    all qubits see the same ``sqrt(1-s)`` drive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .effective import SubspacePartition, partition_from_predicate
from .gadgets import one_hot_penalty
from .pauli import Observable, PauliTerm

JZZ = 5.33
DELTA_W = 0.1
CP = 100.0


class Variant(str, enum.Enum):
    TF = "tf"
    XX = "xx"
    ONE_HOT = "onehot"
    ONE_HOT_HOM = "onehot-hom"

    @property
    def is_gadget(self) -> bool:
        return self in (Variant.ONE_HOT, Variant.ONE_HOT_HOM)


class ScheduleKind(str, enum.Enum):
    CONSTANT = "constant"
    ONE_MINUS_S = "1-s"
    SQRT_ONE_MINUS_S = "sqrt(1-s)"
    S = "s"
    S_OVER_2CP = "s/2cp"
    ONE_MINUS_S_OVER_2CP = "(1-s)/2cp"

    def __call__(self, s: float, cp: float = CP) -> float:
        if self is ScheduleKind.CONSTANT:
            return 1.0
        if self is ScheduleKind.ONE_MINUS_S:
            return 1.0 - s
        if self is ScheduleKind.SQRT_ONE_MINUS_S:
            return math.sqrt(max(1.0 - s, 0.0))
        if self is ScheduleKind.S:
            return s
        if self is ScheduleKind.S_OVER_2CP:
            return s / (2.0 * cp)
        return (1.0 - s) / (2.0 * cp)

    def derivative(self, s: float, cp: float = CP) -> float:
        if self is ScheduleKind.CONSTANT:
            return 0.0
        if self is ScheduleKind.ONE_MINUS_S:
            return -1.0
        if self is ScheduleKind.SQRT_ONE_MINUS_S:
            return -0.5 / math.sqrt(1.0 - s) if s < 1.0 else -math.inf
        if self is ScheduleKind.S:
            return 1.0
        if self is ScheduleKind.S_OVER_2CP:
            return 1.0 / (2.0 * cp)
        return -1.0 / (2.0 * cp)


@dataclass(frozen=True)
class ScheduledObservable:
    """``H(s) = sum_k f_k(s) H_k`` with all ``H_k`` on one register."""

    groups: tuple[tuple[ScheduleKind, Observable], ...]
    n_qubits: int
    cp: float = CP

    def __post_init__(self):
        for _, obs in self.groups:
            if obs.n_qubits != self.n_qubits:
                raise ValueError("all schedule groups must share n_qubits")

    def group(self, kind: ScheduleKind) -> Observable:
        out = Observable.zero(self.n_qubits)
        for k, obs in self.groups:
            if k is kind:
                out = out + obs
        return out


def evaluate_at(sched: ScheduledObservable, s: float) -> Observable:
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    terms = []
    for kind, obs in sched.groups:
        f = kind(s, sched.cp)
        terms.extend(t.scaled(f) for t in obs.terms)
    return Observable(tuple(terms), sched.n_qubits)


@dataclass(frozen=True)
class ToyInstance:
    n0: int
    jzz: float = JZZ
    delta_w: float = DELTA_W
    cp: float = CP
    variant: Variant = Variant.TF

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if int(self.n0) != self.n0 or self.n0 < 2:
            raise ValueError(f"n0 must be an integer >= 2, got {self.n0}")
        if not self.cp > 0:
            raise ValueError("cp must be positive")

    @property
    def n1(self) -> int:
        return self.n0 + 1

    @property
    def n_logical(self) -> int:
        return 2 * self.n0 + 1

    @property
    def g0(self) -> range:
        return range(1, self.n0 + 1)

    @property
    def g1(self) -> range:
        return range(self.n0 + 1, 2 * self.n0 + 2)

    @property
    def g0_field(self) -> float:
        return self.n1 * self.jzz - 2.0 * (1.0 + self.delta_w) / self.n0

    @property
    def g1_field(self) -> float:
        return self.n0 * self.jzz - 2.0 / self.n1


@dataclass(frozen=True)
class QubitLayout:
    """Role of each register position (1-based), e.g. ``"5"``, ``"2h"``, ``"5(2)"``."""

    roles: tuple[str, ...]
    gadget: tuple[int, ...] = ()
    chains: tuple[tuple[int, int], ...] = ()
    plain: dict = field(default_factory=dict)

    @property
    def n_qubits(self) -> int:
        return len(self.roles)


def layout_for(inst: ToyInstance) -> QubitLayout:
    v = inst.variant
    n = inst.n_logical
    if v in (Variant.TF, Variant.XX):
        return QubitLayout(tuple(str(i) for i in range(1, n + 1)), plain={i: i for i in range(1, n + 1)})
    roles = [f"{k}h" for k in range(1, 5)]
    if v is Variant.ONE_HOT:
        plain = {}
        for i in range(3, n + 1):
            roles.append(str(i))
            plain[i] = len(roles)
        return QubitLayout(tuple(roles), gadget=(1, 2, 3, 4), plain=plain)
    chains = []
    for i in range(3, n + 1):
        roles += [f"{i}(1)", f"{i}(2)"]
        chains.append((len(roles) - 1, len(roles)))
    return QubitLayout(tuple(roles), gadget=(1, 2, 3, 4), chains=tuple(chains))


def _obs(n, items) -> Observable:
    return Observable(tuple(PauliTerm.of(c, ops) for c, ops in items), n)


def build_problem(inst: ToyInstance) -> Observable:
    """Ising form of the MIS instance on ``2 n0 + 1`` qubits (G0 first)."""
    items = [(inst.g0_field, f"Z{i}") for i in inst.g0]
    items += [(inst.g1_field, f"Z{j}") for j in inst.g1]
    items += [(inst.jzz, f"Z{i} Z{j}") for i in inst.g0 for j in inst.g1]
    return _obs(inst.n_logical, items)


def transverse_driver(n_qubits: int, qubits=None) -> Observable:
    qubits = range(1, n_qubits + 1) if qubits is None else qubits
    return _obs(n_qubits, [(-1.0, f"X{q}") for q in qubits])


def _one_hot_problem(inst: ToyInstance, lay: QubitLayout) -> Observable:
    """Problem terms with G0 nodes 1, 2 carried by ``Z1h - Z4h``."""
    n = lay.n_qubits
    a, b, J = inst.g0_field, inst.g1_field, inst.jzz
    g0 = [lay.plain[i] for i in inst.g0 if i >= 3]
    g1 = [lay.plain[j] for j in inst.g1]
    items = [(a, f"Z{q}") for q in g0]
    items += [(b, f"Z{q}") for q in g1]
    items += [(J, f"Z{p} Z{q}") for p in g0 for q in g1]
    items += [(a, "Z1"), (-a, "Z4")]
    for q in g1:
        items += [(J, f"Z1 Z{q}"), (-J, f"Z4 Z{q}")]
    return _obs(n, items)


def _one_hot_hom_problem(inst: ToyInstance, lay: QubitLayout) -> Observable:
    """Problem terms with every plain node i >= 3 written as ``(Z_i1 + Z_i2) / 2``."""
    n = lay.n_qubits
    a, b, J = inst.g0_field, inst.g1_field, inst.jzz
    pair = {i: lay.chains[i - 3] for i in range(3, inst.n_logical + 1)}
    g0 = [i for i in inst.g0 if i >= 3]
    g1 = list(inst.g1)
    items = []
    for i in g0:
        items += [(a / 2, f"Z{q}") for q in pair[i]]
    for j in g1:
        items += [(b / 2, f"Z{q}") for q in pair[j]]
    for i in g0:
        for j in g1:
            items += [(J / 4, f"Z{p} Z{q}") for p in pair[i] for q in pair[j]]
    items += [(a, "Z1"), (-a, "Z4")]
    for j in g1:
        for q in pair[j]:
            items += [(J / 2, f"Z1 Z{q}"), (-J / 2, f"Z4 Z{q}")]
    return _obs(n, items)


def build_anneal(inst: ToyInstance) -> tuple[ScheduledObservable, QubitLayout]:
    v = inst.variant
    lay = layout_for(inst)
    n = lay.n_qubits
    K = ScheduleKind
    if v is Variant.TF:
        groups = ((K.ONE_MINUS_S, transverse_driver(n)), (K.S, build_problem(inst)))
    elif v is Variant.XX:
        drv = transverse_driver(n) + _obs(n, [(-1.0, "X1 X2")])
        groups = ((K.ONE_MINUS_S, drv), (K.S, build_problem(inst)))
    elif v is Variant.ONE_HOT:
        groups = (
            (K.CONSTANT, one_hot_penalty(inst.cp, lay.gadget, n)),
            (K.ONE_MINUS_S_OVER_2CP, transverse_driver(n, sorted(lay.plain.values()))),
            (K.SQRT_ONE_MINUS_S, transverse_driver(n, lay.gadget)),
            (K.S_OVER_2CP, _one_hot_problem(inst, lay)),
        )
    else:
        ferro = _obs(n, [(-2.0 * inst.cp, f"Z{p} Z{q}") for p, q in lay.chains])
        groups = (
            (K.CONSTANT, one_hot_penalty(inst.cp, lay.gadget, n) + ferro),
            (K.SQRT_ONE_MINUS_S, transverse_driver(n)),
            (K.S_OVER_2CP, _one_hot_hom_problem(inst, lay)),
        )
    return ScheduledObservable(groups, n, inst.cp), lay


def feasible_partition(inst: ToyInstance) -> SubspacePartition:
    """A = states obeying every gadget constraint (weight-1 gadget, even chains)."""
    lay = layout_for(inst)
    n = lay.n_qubits
    if not inst.variant.is_gadget:
        return partition_from_predicate(n, lambda i: np.ones(i.shape, dtype=bool))

    def shift(q):
        return n - q

    def pred(i):
        w = sum((i >> shift(q)) & 1 for q in lay.gadget)
        ok = w == 1
        for p, q in lay.chains:
            ok &= ((i >> shift(p)) & 1) == ((i >> shift(q)) & 1)
        return ok

    return partition_from_predicate(n, pred)


_GADGET_LOGICAL = {0b0001: (0, 0), 0b0010: (0, 1), 0b0100: (1, 0), 0b1000: (1, 1)}


def logical_index(inst: ToyInstance, index: int) -> int | None:
    """Index on the ``2 n0 + 1`` logical register for a feasible physical state.

    Returns ``None`` for states outside the feasible subspace.
    """
    lay = layout_for(inst)
    n = lay.n_qubits
    if not inst.variant.is_gadget:
        return index

    def bit(q):
        return (index >> (n - q)) & 1

    g = 0
    for q in lay.gadget:
        g = (g << 1) | bit(q)
    if g not in _GADGET_LOGICAL:
        return None
    bits = list(_GADGET_LOGICAL[g])
    if inst.variant is Variant.ONE_HOT:
        bits += [bit(lay.plain[i]) for i in range(3, inst.n_logical + 1)]
    else:
        for p, q in lay.chains:
            if bit(p) != bit(q):
                return None
            bits.append(bit(p))
    out = 0
    for b in bits:
        out = (out << 1) | b
    return out
