"""Purified thermal PEPS tensors and the doubled-layer transfer tensors.

Axis conventions used everywhere in this package:

* site tensor A:      (i, a, u, r, d, l) = spin, ancilla, up, right, down, left
* transfer tensor a:  (u, r, d, l), each a fused pair of ket and bra bond
                      indices in (ket, bra) order, extent D*D
* open transfer b:    like a, but the axis toward the chosen bond keeps the
                      bra index unrenormalized: fused (ket D, bra 2D)

The gate-enlarged bond index packs the old bond u and the gate bond s_u as
k = 2u + s_u, matching the interaction tensor's two-term expansion.

All site tensors are kept isotropic: invariant under the 8 permutations of
(u, r, d, l) generated by the cyclic rotation and the left-right reflection.
Updates re-symmetrize explicitly since floating-point drift would otherwise
accumulate over thousands of gate applications.
"""

from __future__ import annotations

import numpy as np

from .tensors import DimensionMismatchError

# The dihedral group on the four bond axes, as source-axis orders for
# np.transpose restricted to (u, r, d, l).
_ROT = (3, 0, 1, 2)  # (u r d l) <- (l u r d): 90-degree rotation
_REF = (0, 3, 2, 1)  # (u r d l) <- (u l d r): left-right reflection


def _dihedral_elements() -> list[tuple[int, ...]]:
    elems = {(0, 1, 2, 3)}
    frontier = [(0, 1, 2, 3)]
    while frontier:
        g = frontier.pop()
        for h in (_ROT, _REF):
            comp = tuple(g[i] for i in h)
            if comp not in elems:
                elems.add(comp)
                frontier.append(comp)
    return sorted(elems)


BOND_SYMMETRY_GROUP = _dihedral_elements()
assert len(BOND_SYMMETRY_GROUP) == 8


def symmetrize_bonds(t: np.ndarray) -> np.ndarray:
    """Average a site tensor over the bond-permutation group.

    The first two axes (spin, ancilla) are fixed; the last four (u, r, d, l)
    are permuted.  Requires equal extents on all four bond axes.
    """
    if len(set(t.shape[2:])) != 1:
        raise DimensionMismatchError(f"bond extents differ: {t.shape[2:]}")
    acc = np.zeros_like(t)
    for g in BOND_SYMMETRY_GROUP:
        acc += t.transpose((0, 1) + tuple(2 + i for i in g))
    return acc / len(BOND_SYMMETRY_GROUP)


def symmetrization_residual(t: np.ndarray) -> float:
    """Largest deviation of a site tensor from its bond-symmetrized image."""
    return float(np.abs(t - symmetrize_bonds(t)).max())


def initial_tensor() -> np.ndarray:
    """The infinite-temperature tensor A^{ia} = delta^{ia} with D = 1.

    Each site is a maximally entangled spin-ancilla pair, so the ancilla
    trace of the one-site density matrix is proportional to the identity.
    """
    a = np.zeros((2, 2, 1, 1, 1, 1))
    a[0, 0, 0, 0, 0, 0] = 1.0
    a[1, 1, 0, 0, 0, 0] = 1.0
    return a


def apply_spin_matrix(A: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix on the spin index: A <- m_ij A^{ja}."""
    return np.einsum("ij,ja...->ia...", m, A)


def absorb_trotter(A: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Absorb the interaction tensor into a site tensor.

    B^{ia}_{2u+s_u, 2r+s_r, 2d+s_d, 2l+s_l} = sum_j T^{ij}_{s...} A^{ja}_{urdl};
    every bond extent doubles (edge legs of finite lattices keep extent 1 when
    T carries extent-1 legs there).
    """
    if A.shape[0] != 2 or T.shape[:2] != (2, 2):
        raise DimensionMismatchError("spin extents must be 2")
    out = np.einsum("ijwxyz,jaurdl->iauwrxdylz", T, A)
    s = out.shape
    return np.ascontiguousarray(out).reshape(
        s[0], s[1], s[2] * s[3], s[4] * s[5], s[6] * s[7], s[8] * s[9]
    )


def transfer_tensor_a(A: np.ndarray) -> np.ndarray:
    """Double-layer transfer tensor: contract A with itself over spin and
    ancilla, fusing each ket/bra bond pair (ket major) to extent D*D."""
    t = np.einsum("iaurdl,iaURDL->uUrRdDlL", A, A)
    d = A.shape[2]
    e = d * d
    return np.ascontiguousarray(t).reshape(e, e, e, e)


def transfer_with_insertion(A: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Transfer tensor with a 2x2 operator inserted on the spin line.

    Bra index i meets op_ij and ket index j: the fused axes stay (ket, bra).
    """
    t = np.einsum("jaurdl,ij,iaURDL->uUrRdDlL", A, op, A)
    d = A.shape[2]
    e = d * d
    return np.ascontiguousarray(t).reshape(e, e, e, e)


OPEN_LEGS = ("u", "r", "d", "l")


def transfer_tensor_b(
    Aprime: np.ndarray, B: np.ndarray, W: np.ndarray, open_leg: str
) -> np.ndarray:
    """Transfer tensor for a site flanking the chosen bond.

    The bra layer is B with three legs renormalized by the isometry W and the
    leg toward the bond left at its enlarged extent; the ket layer is the
    fully renormalized Aprime.  The open axis fuses (ket D, bra 2D); the
    other three fuse to D*D as in :func:`transfer_tensor_a`.
    """
    if open_leg not in OPEN_LEGS:
        raise ValueError(f"open_leg must be one of u/r/d/l, got {open_leg!r}")
    kexp = B.shape[2]
    if W.shape[0] != kexp:
        raise DimensionMismatchError(
            f"isometry rows {W.shape[0]} do not match enlarged bond {kexp}"
        )
    open_pos = OPEN_LEGS.index(open_leg)
    bra = B
    for pos in range(4):
        if pos == open_pos:
            continue
        bra = np.moveaxis(np.tensordot(bra, W, axes=([2 + pos], [0])), -1, 2 + pos)
    t = np.einsum("iaurdl,iaURDL->uUrRdDlL", Aprime, bra)
    d = Aprime.shape[2]
    shape = tuple(d * (kexp if pos == open_pos else d) for pos in range(4))
    return np.ascontiguousarray(t).reshape(shape)
