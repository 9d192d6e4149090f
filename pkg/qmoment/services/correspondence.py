"""Correspondence rules between phase-space operators and moment shifts.

Each rule turns an operation on the Wigner function (multiplication by q or
p, derivative in q or p) into a combination of index shifts on the ordered
moment table. Composing rules by matrix product gives the moment-domain
form of any polynomial phase-space equation.
"""

from functools import lru_cache
from typing import Dict, List

import numpy as np
from scipy import sparse

from qmoment.core.lattice import lattice_size
from qmoment.core.models import Ordering, ShiftOp

S = 1.0 / np.sqrt(2.0)

RuleSet = Dict[str, List[ShiftOp]]

NORMAL_RULES: RuleSet = {
    "dq": [
        ShiftOp(-1, 0, lambda n, m: -S * n),
        ShiftOp(0, -1, lambda n, m: -S * m),
    ],
    "dp": [
        ShiftOp(-1, 0, lambda n, m: 1j * S * n),
        ShiftOp(0, -1, lambda n, m: -1j * S * m),
    ],
    "q": [
        ShiftOp(1, 0, lambda n, m: S),
        ShiftOp(0, 1, lambda n, m: S),
        ShiftOp(-1, 0, lambda n, m: 0.5 * S * n),
        ShiftOp(0, -1, lambda n, m: 0.5 * S * m),
    ],
    "p": [
        ShiftOp(1, 0, lambda n, m: 1j * S),
        ShiftOp(0, 1, lambda n, m: -1j * S),
        ShiftOp(-1, 0, lambda n, m: -0.5j * S * n),
        ShiftOp(0, -1, lambda n, m: 0.5j * S * m),
    ],
}

ANTINORMAL_RULES: RuleSet = {
    "dq": [
        ShiftOp(-1, 0, lambda k, l: -S * k),
        ShiftOp(0, -1, lambda k, l: -S * l),
    ],
    "dp": [
        ShiftOp(-1, 0, lambda k, l: -1j * S * k),
        ShiftOp(0, -1, lambda k, l: 1j * S * l),
    ],
    "q": [
        ShiftOp(1, 0, lambda k, l: S),
        ShiftOp(0, 1, lambda k, l: S),
        ShiftOp(-1, 0, lambda k, l: -0.5 * S * k),
        ShiftOp(0, -1, lambda k, l: -0.5 * S * l),
    ],
    "p": [
        ShiftOp(1, 0, lambda k, l: -1j * S),
        ShiftOp(0, 1, lambda k, l: 1j * S),
        ShiftOp(-1, 0, lambda k, l: -0.5j * S * k),
        ShiftOp(0, -1, lambda k, l: 0.5j * S * l),
    ],
}


def rules_for(ordering: Ordering) -> RuleSet:
    """Shift operators for q, p, d/dq and d/dp in the given ordering."""
    return NORMAL_RULES if Ordering(ordering) is Ordering.NORMAL else ANTINORMAL_RULES


@lru_cache(maxsize=64)
def rule_matrix(ordering: Ordering, name: str, degree: int) -> sparse.csr_matrix:
    """Square sparse matrix of one rule on the degree-``degree`` lattice."""
    total = sparse.csr_matrix((lattice_size(degree),) * 2, dtype=complex)
    for op in rules_for(ordering)[name]:
        total = total + op.matrix(degree, degree)
    return total


def _restrict(matrix: sparse.spmatrix, rows_degree: int, cols_degree: int) -> sparse.csr_matrix:
    return sparse.csr_matrix(matrix)[: lattice_size(rows_degree), : lattice_size(cols_degree)]


def harmonic_operator(ordering: Ordering, max_degree: int) -> sparse.csr_matrix:
    """d/dt of the moments for W_t = -p dW/dq + q dW/dp."""
    ordering = Ordering(ordering)
    work = max_degree + 2

    def rule(name: str) -> sparse.csr_matrix:
        return rule_matrix(ordering, name, work)

    total = -(rule("p") @ rule("dq")) + rule("q") @ rule("dp")
    return _restrict(total, max_degree, max_degree)


def damped_operator(ordering: Ordering, max_degree: int, gamma: float) -> sparse.csr_matrix:
    """Moment form of the damped oscillator Fokker-Planck equation."""
    ordering = Ordering(ordering)
    work = max_degree + 2
    omega = np.sqrt(1.0 - gamma**2)

    def rule(name: str) -> sparse.csr_matrix:
        return rule_matrix(ordering, name, work)

    diffusion = rule("dq") @ rule("dq") + rule("dp") @ rule("dp")
    total = (
        -(rule("p") @ rule("dq"))
        + rule("q") @ rule("dp")
        + 2.0 * gamma * (rule("dp") @ rule("p"))
        + (gamma / (2.0 * omega)) * diffusion
        - (gamma**2 / omega) * (rule("dp") @ rule("dq"))
    )
    return _restrict(total, max_degree, max_degree)


def eigen_operator(ordering: Ordering, max_degree: int) -> sparse.csr_matrix:
    """Moment form of the oscillator Wigner eigen-equation.

    Rows cover degrees up to ``max_degree - 2``; columns the full table.
    """
    ordering = Ordering(ordering)

    def rule(name: str) -> sparse.csr_matrix:
        return rule_matrix(ordering, name, max_degree)

    total = 0.5 * (rule("q") @ rule("q") + rule("p") @ rule("p")) - 0.125 * (
        rule("dq") @ rule("dq") + rule("dp") @ rule("dp")
    )
    return _restrict(total, max_degree - 2, max_degree)
