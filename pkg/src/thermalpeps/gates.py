"""Gate ingredients for the transverse-field Ising model on the square lattice.

The Hamiltonian is H = -sum_<mm'> Z_m Z_m' - h sum_m X_m - delta sum_m Z_m
with coupling J = 1.  A second-order split of one imaginary-time step dbeta
of exp(-beta H / 2) is

    U_X(dbeta/2) . U_ZZ(dbeta) . U_X(dbeta/2)

where the single-site factor is exact and the interaction factor is realized
as a tensor product operator: one rank-6 tensor per site whose four bond
indices (extent 2) are contracted with the neighbors' tensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Exact critical couplings used throughout as named references.
BETA0 = -math.log(math.sqrt(2.0) - 1.0) / 2.0  # classical critical point, ~0.4407
H0 = 3.044  # quantum critical transverse field at T=0

# Each interaction gate multiplies the bond dimension by this factor.  It is
# fixed at 2 by the two-term expansion of exp(c Z Z) but kept symbolic so the
# bond-growth bookkeeping never hard-codes it.
BOND_GROWTH = 2

PAULI_I = np.eye(2)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


@dataclass(frozen=True)
class ModelParams:
    """Model and step parameters: transverse field h, longitudinal bias delta,
    imaginary-time step dbeta (all in units of the coupling)."""

    h: float
    delta: float = 0.0
    dbeta: float = 1e-3

    def __post_init__(self):
        if self.dbeta <= 0:
            raise ValueError(f"dbeta must be positive, got {self.dbeta}")
        if self.delta < 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")
        if self.h < 0:
            raise ValueError(f"h must be nonnegative, got {self.h}")


def bond_operator(dbeta: float) -> np.ndarray:
    """The per-site bond operator O = Z * tanh(dbeta/2)**(1/2)."""
    return PAULI_Z * math.sqrt(math.tanh(dbeta / 2.0))


def interaction_tensor(dbeta: float, legs: tuple[bool, bool, bool, bool] = (True,) * 4) -> np.ndarray:
    """Per-site tensor of the interaction gate exp((dbeta/2) sum_bonds Z Z).

    Axes are (i, j, s_u, s_r, s_d, s_l): spin row/column then the four bond
    indices in up, right, down, left order.  Entries are
    cosh(dbeta/2)**(n/2) * (O**s)_ij with s the sum of the active bond
    indices and n the number of active legs.  Legs flagged False (lattice
    edges on finite systems) keep extent 1 and contribute no cosh factor.
    """
    if dbeta <= 0:
        raise ValueError(f"dbeta must be positive, got {dbeta}")
    o = bond_operator(dbeta)
    nlegs = sum(legs)
    pref = math.cosh(dbeta / 2.0) ** (nlegs / 2.0)
    powers = [np.eye(2)]
    for _ in range(4):
        powers.append(powers[-1] @ o)
    shape = tuple(BOND_GROWTH if on else 1 for on in legs)
    t = np.zeros((2, 2) + shape)
    for idx in np.ndindex(shape):
        t[(slice(None), slice(None)) + idx] = pref * powers[sum(idx)]
    return t


def trotter_tensor(dbeta: float) -> np.ndarray:
    """The bulk (four-leg) interaction tensor; see :func:`interaction_tensor`."""
    return interaction_tensor(dbeta)


def field_halfstep_matrix(params: ModelParams) -> np.ndarray:
    """Exact single-site half-step exp((dbeta/4) (h X + delta Z)).

    At delta = 0 this is cosh(h dbeta / 4) I + sinh(h dbeta / 4) X.  The bias
    is folded into the same exponential: both terms are single-site, so the
    combined factor stays exact within the second-order split.
    """
    m = (params.dbeta / 4.0) * (params.h * PAULI_X + params.delta * PAULI_Z)
    vals, vecs = np.linalg.eigh(m)
    return (vecs * np.exp(vals)) @ vecs.T


def classical_ising_tensor(beta: float) -> np.ndarray:
    """Exact D=2 purification tensor of the classical (h=0) Gibbs state.

    Applying the interaction gate for total time beta to the infinite-
    temperature tensor delta^{ia} turns the spin-out index of the gate tensor
    into the ancilla index, so the site tensor is just the interaction tensor
    with axes relabeled (i, a, u, r, d, l).
    """
    return interaction_tensor(beta)
