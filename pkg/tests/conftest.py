import numpy as np
import pytest

from xxgadget.pauli import Observable, PauliTerm


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_observable(rng, n_qubits, n_terms, axes="IXYZ", dyadic=False):
    """Random Hermitian Pauli sum; ``dyadic`` draws coefficients k/8 (exact in binary)."""
    terms = []
    for _ in range(n_terms):
        ops = {q: axes[rng.integers(len(axes))] for q in range(1, n_qubits + 1)}
        c = rng.integers(-16, 17) / 8 if dyadic else rng.normal()
        terms.append(PauliTerm.of(float(c), ops))
    return Observable(tuple(terms), n_qubits)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
