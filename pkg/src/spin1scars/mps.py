"""Closed-form analytics of the bond-dimension-2 scar MPS.

The state is ``|psi_x> = sum Tr(A_{m1} B_{m2} ... A_{m_{L-1}} B_{m_L}) |m1 ... mL>``
with ``A_{+-1} = (1 -+ sigma^z) / (2 sqrt 2)``, ``A_0 = sigma^x / sqrt 2`` and
``B_m = sigma^z A_m``. Site tensors are stored as arrays of shape ``(3, 2, 2)``
indexed by the digit ``m + 1``.

Transfer matrices flatten the (ket, bra) bond pair row-major with the ket index
first: ``T[(a, a'), (b, b')] = sum_m X_m[a, b] conj(X_m[a', b'])``.

Unless stated otherwise, contractions are for the *unnormalized* MPS, whose
squared norm is ``1 + 2 (-1/4)^(L/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import comb
from typing import Iterable, Optional, Sequence

import numpy as np

from .hamiltonian import SM, SP, SX, SY, SZ, HamiltonianSpec
from .hilbert import MAX_SITES, SizeError

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Z = np.diag([1.0, -1.0])
ID2 = np.eye(2)

# two-site operators in the (site i, site i+1) product basis, digit order
H_XY_BOND = (np.kron(SP, SM) + np.kron(SM, SP)) / 2
V_BOND = np.kron(SP @ SP, SM @ SM) + np.kron(SM @ SM, SP @ SP)


@dataclass(frozen=True)
class Mps:
    L: int
    A: np.ndarray
    B: np.ndarray
    unit_cell: int = 2

    def site_tensor(self, site: int) -> np.ndarray:
        """Tensor of the 1-based ``site``: ``A`` on odd sites, ``B`` on even ones."""
        return self.A if site % 2 == 1 else self.B


def _check_even(L: int, minimum: int = 2) -> None:
    if L % 2 or L < minimum:
        raise SizeError(f"L must be even and >= {minimum}, got {L}")


def mps_tensors() -> tuple[np.ndarray, np.ndarray]:
    s2 = np.sqrt(2.0)
    A = np.stack([(ID2 + PAULI_Z) / (2 * s2), PAULI_X / s2, (ID2 - PAULI_Z) / (2 * s2)])
    B = np.einsum("ab,mbc->mac", PAULI_Z, A)
    return A, B


def factored_tensors():
    """Bell-pair factors and the local map: ``M``, ``J`` (2x2) and ``P`` (3, 2, 2).

    ``P^m`` is the local map written as a matrix between the two virtual spins
    of a site (digit order ``m = -1, 0, 1``).
    """
    c = 2 ** -0.25
    M = c * ID2
    J = c * PAULI_Z
    P = np.stack([np.diag([1.0, 0.0]), PAULI_X, np.diag([0.0, 1.0])])
    return M, J, P


def factored_mps_tensors() -> tuple[np.ndarray, np.ndarray]:
    """``A = M P M`` and ``B = J P M`` assembled from the Bell-pair factors."""
    M, J, P = factored_tensors()
    A = np.einsum("ab,mbc,cd->mad", M, P, M)
    B = np.einsum("ab,mbc,cd->mad", J, P, M)
    return A, B


def build_mps(L: int) -> Mps:
    _check_even(L)
    A, B = mps_tensors()
    Af, Bf = factored_mps_tensors()
    if not (np.allclose(A, Af, atol=1e-15) and np.allclose(B, Bf, atol=1e-15)):
        raise ArithmeticError("factored construction disagrees with the site tensors")
    return Mps(L, A, B)


# --- transfer matrices -------------------------------------------------------

def chain_tensors(tensors: Sequence[np.ndarray]) -> np.ndarray:
    """Matrices ``X_{m1} X_{m2} ...`` for all multi-indices, shape ``(3**k, 2, 2)``."""
    out = tensors[0]
    for t in tensors[1:]:
        out = np.einsum("pab,mbc->pmac", out, t).reshape(-1, 2, 2)
    return out


def transfer(tensors: Sequence[np.ndarray], op: Optional[np.ndarray] = None) -> np.ndarray:
    """Transfer matrix of consecutive site tensors with ``op`` (``3**k x 3**k``) inserted."""
    X = chain_tensors(list(tensors))
    if op is None:
        T = np.einsum("mab,mcd->acbd", X, X.conj())
    else:
        T = np.einsum("nm,mab,ncd->acbd", op, X, X.conj())
    return T.reshape(4, 4)


@dataclass
class TransferObjects:
    T_A: np.ndarray
    T_B: np.ndarray
    T: np.ndarray
    T_BA: np.ndarray
    eigenvalues: np.ndarray
    left: np.ndarray
    right: np.ndarray
    mps: Mps = field(repr=False, default=None)

    def dressed(self, op: np.ndarray, start: str = "A") -> np.ndarray:
        """Transfer matrix of ``len(op)``-site window starting on an A (or B) site."""
        k = int(round(np.log(op.shape[0]) / np.log(3)))
        first, second = (self.mps.A, self.mps.B) if start == "A" else (self.mps.B, self.mps.A)
        return transfer([first if j % 2 == 0 else second for j in range(k)], op)


def transfer_objects(mps: Mps) -> TransferObjects:
    T_A = transfer([mps.A])
    T_B = transfer([mps.B])
    T_AB = T_A @ T_B
    T_BA = T_B @ T_A
    if not np.allclose(transfer([mps.A, mps.B]), T_AB):
        raise ArithmeticError("two-site transfer does not factorize")
    w, v = np.linalg.eigh(T_AB)
    order = np.argsort(-w)
    w, v = w[order], v[:, order]
    dom = v[:, 0] * np.sign(v[0, 0])
    return TransferObjects(T_A, T_B, T_AB, T_BA, w, dom.copy(), dom.copy(), mps)


def _power(T: np.ndarray, k: int) -> np.ndarray:
    if k < 0:
        raise ValueError("negative power")
    return np.linalg.matrix_power(T, k)


def norm_squared(mps: Mps) -> float:
    """``<psi_x|psi_x> = Tr(T^(L/2))``."""
    return float(np.trace(_power(transfer_objects(mps).T, mps.L // 2)).real)


def norm_squared_exact(L: int) -> Fraction:
    return 1 + 2 * Fraction(-1, 4) ** (L // 2)


def middle_state_norm_squared(L: int) -> Fraction:
    """Squared norm of the projected middle Dicke state, ``(C(L, L/2) +- 2) / C(L, L/2)``."""
    c = comb(L, L // 2)
    return Fraction(c + 2, c) if L % 4 == 0 else Fraction(c - 2, c)


def norm_from_tower(L: int) -> Fraction:
    """Squared norm rebuilt from the tower weights; only the middle rung is anomalous."""
    total = Fraction(0)
    for n in range(L + 1):
        w = Fraction(comb(L, n), 2**L)
        total += w * (middle_state_norm_squared(L) if n == L // 2 else 1)
    return total


# --- ring contractions -------------------------------------------------------

def ring_expectation(mps: Mps, placements: Iterable[tuple[int, np.ndarray]]) -> complex:
    """``<psi|prod O|psi>`` for operators on disjoint windows ``(first_site, op)``.

    Sites are 1-based, windows may wrap around the ring.
    """
    L = mps.L
    placed = {}
    covered = set()
    for first, op in placements:
        k = int(round(np.log(op.shape[0]) / np.log(3)))
        sites = [((first - 1 + j) % L) + 1 for j in range(k)]
        if covered.intersection(sites):
            raise ValueError("operator windows overlap; combine them first")
        covered.update(sites)
        placed[sites[0]] = (k, op)
    # start the product at a site that does not sit inside a window
    start = next(s for s in range(1, L + 1) if s not in covered or s in placed)
    mats = []
    s = start
    walked = 0
    while walked < L:
        if s in placed:
            k, op = placed[s]
            mats.append(transfer([mps.site_tensor(((s - 1 + j) % L) + 1) for j in range(k)], op))
        else:
            k = 1
            mats.append(transfer([mps.site_tensor(s)]))
        walked += k
        s = ((s - 1 + k) % L) + 1
    return complex(np.trace(reduce(np.matmul, mats)))


def _bond_pair(mps: Mps, i: int, j: int, X: np.ndarray, Y: np.ndarray) -> complex:
    """``<X_{i,i+1} Y_{j,j+1}>`` for bond operators (1-based first sites)."""
    L = mps.L
    d = (j - i) % L
    I3 = np.eye(3)
    if d == 0:
        return ring_expectation(mps, [(i, X @ Y)])
    if d == 1:
        return ring_expectation(mps, [(i, np.kron(X, I3) @ np.kron(I3, Y))])
    if d == L - 1:
        return ring_expectation(mps, [(j, np.kron(I3, X) @ np.kron(Y, I3))])
    return ring_expectation(mps, [(i, X), (j, Y)])


@dataclass
class HSquaredClasses:
    """Contraction classes of ``sum_j <h_{1,2} h_{j,j+1}>`` for the first bond on an A site."""

    diagonal: float
    overlap_right: float
    overlap_left: float
    same_parity: float
    opposite_parity: float

    @property
    def total(self) -> float:
        return self.diagonal + self.overlap_right + self.overlap_left + self.same_parity + self.opposite_parity

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("diagonal", "overlap_right", "overlap_left", "same_parity", "opposite_parity")}


def xy_classes(mps: Mps, X: np.ndarray = H_XY_BOND, Y: np.ndarray = H_XY_BOND) -> HSquaredClasses:
    """The five transfer-matrix contraction classes, written as explicit traces."""
    L = mps.L
    if L < 6:
        raise SizeError("the contraction classes need L >= 6")
    to = transfer_objects(mps)
    T, T_A, T_B = to.T, to.T_A, to.T_B
    n = L // 2
    I3 = np.eye(3)
    T_XY = transfer([mps.A, mps.B], X @ Y)
    T_X = transfer([mps.A, mps.B], X)
    T_Y = transfer([mps.A, mps.B], Y)
    T_Y_shift = transfer([mps.B, mps.A], Y)
    T_O = transfer([mps.A, mps.B, mps.A], np.kron(X, I3) @ np.kron(I3, Y))
    T_O_left = transfer([mps.B, mps.A, mps.B], np.kron(I3, X) @ np.kron(Y, I3))
    t1 = np.trace(T_XY @ _power(T, n - 1))
    t2 = np.trace(T_O @ T_B @ _power(T, n - 2))
    t5 = np.trace(T_O_left @ _power(T, n - 2) @ T_A)
    t3 = sum(np.trace(T_X @ _power(T, l) @ T_Y @ _power(T, n - 2 - l)) for l in range(n - 1))
    t4 = sum(np.trace(T_X @ T_A @ _power(T, l) @ T_Y_shift @ T_B @ _power(T, n - 3 - l))
             for l in range(n - 2))
    return HSquaredClasses(*(float(np.real(t)) for t in (t1, t2, t5, t3, t4)))


def xy_classes_closed_form(L: int) -> HSquaredClasses:
    """Printed closed forms of the five classes for ``h_XY`` (exact rationals)."""
    s = (-1) ** (L // 2)
    p = Fraction(1, 2**L)
    return HSquaredClasses(
        diagonal=1 + s * 4 * p,
        overlap_right=Fraction(-1, 2) - 3 * s * 2 * p,
        overlap_left=Fraction(-1, 2) - 3 * s * 2 * p,
        same_parity=(L - 2) * s * 4 * p,
        opposite_parity=(L - 4) * (-s) * 4 * p,
    )


def bond_classes_by_placement(mps: Mps, X: np.ndarray, Y: np.ndarray, first: int = 1) -> HSquaredClasses:
    """Same classes summed from individual ring contractions (independent route)."""
    L = mps.L
    vals = {"diagonal": 0j, "overlap_right": 0j, "overlap_left": 0j,
            "same_parity": 0j, "opposite_parity": 0j}
    for j in range(1, L + 1):
        d = (j - first) % L
        v = _bond_pair(mps, first, j, X, Y)
        if d == 0:
            vals["diagonal"] += v
        elif d == 1:
            vals["overlap_right"] += v
        elif d == L - 1:
            vals["overlap_left"] += v
        elif d % 2 == 0:
            vals["same_parity"] += v
        else:
            vals["opposite_parity"] += v
    return HSquaredClasses(*(float(np.real(vals[k])) for k in vals))


def _local_h0(spec: HamiltonianSpec) -> np.ndarray:
    if spec.perturbation not in ("V", "none"):
        raise ValueError("MPS contractions are implemented for the V perturbation")
    eps = spec.epsilon if spec.perturbation == "V" else 0.0
    return spec.J * H_XY_BOND + eps * V_BOND


def expect_energy(mps: Mps, spec: HamiltonianSpec, normalized: bool = True) -> float:
    """``<H>`` from bond and site transfer contractions."""
    L = mps.L
    K = _local_h0(spec)
    total = sum(ring_expectation(mps, [(i, K)]) for i in range(1, L + 1))
    total += spec.h * sum(ring_expectation(mps, [(i, SZ)]) for i in range(1, L + 1))
    val = float(np.real(total))
    return val / norm_squared(mps) if normalized else val


@dataclass
class HSquaredResult:
    value: float
    classes_A: HSquaredClasses
    classes_B: HSquaredClasses
    xy_classes: HSquaredClasses
    xy_closed_form: HSquaredClasses
    perturbation_classes: HSquaredClasses
    zeeman_part: float


def expect_h_squared(mps: Mps, spec: HamiltonianSpec, normalized: bool = True) -> HSquaredResult:
    """``<H^2>`` assembled from the five contraction classes for each bond parity.

    With ``h != 0`` the Zeeman contribution ``h^2 <M^2> + h <{H_0, M}>`` is added;
    the state is not a magnetization eigenstate, so this part does not vanish.
    """
    L = mps.L
    if L < 6:
        raise SizeError("expect_h_squared needs L >= 6")
    K = _local_h0(spec)
    shifted = Mps(L, mps.B, mps.A)
    cls_A = xy_classes(mps, K, K)
    cls_B = xy_classes(shifted, K, K)
    h0_sq = L // 2 * (cls_A.total + cls_B.total)
    zeeman = 0.0
    if spec.h:
        m2 = sum(ring_expectation(mps, [(i, SZ @ SZ)]) if i == j else ring_expectation(mps, [(i, SZ), (j, SZ)])
                 for i in range(1, L + 1) for j in range(1, L + 1))
        cross = 0j
        I3 = np.eye(3)
        for i in range(1, L + 1):
            for j in range(1, L + 1):
                d = (j - i) % L
                if d == 0:
                    op = K @ np.kron(SZ, I3) + np.kron(SZ, I3) @ K
                    cross += ring_expectation(mps, [(i, op)])
                elif d == 1:
                    op = K @ np.kron(I3, SZ) + np.kron(I3, SZ) @ K
                    cross += ring_expectation(mps, [(i, op)])
                else:
                    cross += 2 * ring_expectation(mps, [(i, K), (j, SZ)])
        zeeman = float(np.real(spec.h**2 * m2 + spec.h * cross))
    value = h0_sq + zeeman
    if normalized:
        value /= norm_squared(mps)
    return HSquaredResult(value, cls_A, cls_B, xy_classes(mps), xy_classes_closed_form(L),
                          xy_classes(mps, V_BOND, V_BOND), zeeman)


# --- correlations ------------------------------------------------------------

AXES = {"x": SX, "y": SY, "z": SZ}


@dataclass
class Correlation:
    contraction: float
    closed_form: float


def correlation_closed_form(L: int, axis: str, i: int, r: int) -> float:
    """Printed closed forms for ``<S^a_i S^a_{i+r}>`` of the unnormalized MPS.

    On A sites (odd ``i``) the x correlator carries the ``(-1)^((r+1)/2)`` sign
    at odd ``r`` and the y correlator ``(-1)^((r-1)/2)``; on B sites x and y swap.
    """
    r = r % L
    if axis == "z":
        if r == 0:
            return 0.5
        return 0.25 if r in (1, L - 1) else 0.0
    s = (-1) ** (L // 2)
    if r == 0:
        return 0.75 + s * 2.0 ** (1 - L)
    mag = 2.0**-r + s * 2.0 ** (r - L)
    if r % 2 == 0:
        return (-1) ** (r // 2) * mag
    x_on_a = (axis == "x") == (i % 2 == 1)
    sign = (-1) ** ((r + 1) // 2) if x_on_a else (-1) ** ((r - 1) // 2)
    return sign * mag


def correlation(mps: Mps, axis: str, i: int, r: int) -> Correlation:
    """Two-point function of the unnormalized MPS by transfer contraction and closed form.

    One-point functions vanish, so this is also the connected correlator
    (up to the ``1 / <psi|psi>`` normalization).
    """
    L = mps.L
    if axis not in AXES:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    if not 1 <= i <= L or not 0 <= r < L:
        raise ValueError(f"invalid site {i} or separation {r} for L={L}")
    O = AXES[axis]
    j = ((i - 1 + r) % L) + 1
    if r == 0:
        val = ring_expectation(mps, [(i, O @ O)])
    else:
        val = ring_expectation(mps, [(i, O), (j, O)])
    return Correlation(float(np.real(val)), correlation_closed_form(L, axis, i, r))


def single_site_expectation(mps: Mps, axis: str, i: int) -> float:
    return float(np.real(ring_expectation(mps, [(i, AXES[axis])])))


def injectivity_rank() -> int:
    """Rank of the map from boundary matrices to two-site amplitudes ``Tr(A_m B_m' X)``."""
    A, B = mps_tensors()
    AB = np.einsum("mab,nbc->mnac", A, B).reshape(9, 4)
    return int(np.linalg.matrix_rank(AB.T))


# --- reduced density matrices ------------------------------------------------

def rdm_closed_form(l: int) -> tuple:
    """Exact rationals ``(1/4, 1/4, 1/4 + 2^-(l+1), 1/4 - 2^-(l+1))``."""
    q = Fraction(1, 4)
    d = Fraction(1, 2 ** (l + 1))
    return (q, q, q + d, q - d)


def printed_sigmas(l: int) -> list:
    """Boundary matrices of the four RDM eigenvectors, by parity of ``l``."""
    if l % 2 == 0:
        s = (-1) ** (l // 2)
        return [np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 0.0]]),
                np.diag([1.0, s]), np.diag([1.0, -s])]
    s = (-1) ** ((l - 1) // 2)
    return [np.diag([1.0, 0.0]), np.diag([0.0, 1.0]),
            np.array([[0.0, 1.0], [s, 0.0]]), np.array([[0.0, 1.0], [-s, 0.0]])]


def region_transfer(l: int, start: int = 1) -> np.ndarray:
    A, B = mps_tensors()
    mats = [transfer([A if (start + j) % 2 == 1 else B]) for j in range(l)]
    return reduce(np.matmul, mats)


def boundary_map(l: int) -> np.ndarray:
    """Matrix (on row-major ``vec(sigma)``) of ``sigma -> rho_A`` acting on the ansatz.

    In the thermodynamic limit ``rho_A[s, s'] = Tr(X_s X_s'^dagger) / 2`` for
    ``X_s = A_{s1} B_{s2} ...``; the ansatz ``Lambda_sigma(s) = Tr(X_s sigma)``
    is an eigenvector whenever ``sigma`` is an eigenvector of this map.
    """
    E = region_transfer(l).reshape(2, 2, 2, 2)  # E[c, a, d, b], ket (c, d) / bra (a, b)
    F = np.zeros((4, 4), dtype=complex)
    for idx in range(4):
        sigma = np.zeros(4)
        sigma[idx] = 1.0
        sigma = sigma.reshape(2, 2)
        K = np.einsum("dc,cadb->ab", sigma, E)
        F[:, idx] = 0.5 * K.T.reshape(-1)
    return F.real if np.allclose(F.imag, 0) else F


def ansatz_overlaps(l: int, sigmas: Sequence[np.ndarray]) -> np.ndarray:
    """``M_ij = <Lambda_i|Lambda_j>`` for boundary matrices ``sigma_i``."""
    E = region_transfer(l).reshape(2, 2, 2, 2)
    n = len(sigmas)
    out = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            out[a, b] = np.einsum("cadb,dc,ba->", E, sigmas[b], sigmas[a].conj())
    return out.real if np.allclose(out.imag, 0) else out


def single_site_rdm() -> np.ndarray:
    A, _ = mps_tensors()
    return 0.5 * np.einsum("mab,nab->mn", A, A.conj())


@dataclass
class RdmResult:
    l: int
    closed_form: np.ndarray
    numerical: np.ndarray
    sigmas: list
    map_eigenvalues: np.ndarray
    overlap: np.ndarray


def rdm_eigenvalues(l: int) -> RdmResult:
    """Thermodynamic-limit RDM spectrum of ``l`` contiguous sites.

    ``numerical`` holds the eigenvalue of each boundary matrix under the map.
    At ``l = 1`` the last ansatz vector vanishes identically, so the 3x3
    single-site RDM is diagonalized directly instead.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    closed = np.array([float(x) for x in rdm_closed_form(l)])
    F = boundary_map(l)
    sigmas = printed_sigmas(l)
    overlap = ansatz_overlaps(l, sigmas)
    lam = np.array([np.vdot(s.reshape(-1), F @ s.reshape(-1)).real / np.vdot(s, s).real for s in sigmas])
    if l == 1:
        e = np.sort(np.linalg.eigvalsh(single_site_rdm()))[::-1]
        numerical = np.array([e[1], e[2], e[0], 0.0])
    else:
        numerical = lam
    map_eigs = np.linalg.eigvals(F)
    return RdmResult(l, closed, numerical, sigmas, np.sort(map_eigs.real)[::-1], overlap)


def tdl_entropy(l: int) -> float:
    lam = np.array([float(x) for x in rdm_closed_form(l)])
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


# --- finite-L Schmidt spectrum from the folded open chain -----------------------

def _ring_matrices(L: int) -> list:
    A, B = mps_tensors()
    return [A if s % 2 == 1 else B for s in range(1, L + 1)]


def folded_chain(L: int, parity: str) -> list:
    """Open-boundary MPS of doubled bond dimension obtained by folding the ring.

    ``parity="odd"`` keeps site 1 alone at the head, then pairs
    ``(1+k, L+1-k)`` and ends with site ``L/2+1`` alone; prefixes of this chain
    are regions of odd size centred on site 1. ``parity="even"`` starts with the
    pair ``(1, L)`` and ends with ``(L/2, L/2+1)``, giving even regions.
    Tensors have shape ``(D_left, d, D_right)``.
    """
    _check_even(L, 4)
    X = _ring_matrices(L)  # X[j-1][m, b_{j-1}, b_j]
    out = []
    if parity == "odd":
        # bond pair convention (b_k, b_{L+1-k}) for the forward/backward strands
        head = np.einsum("mab->mba", X[0]).reshape(1, 3, 4)  # (b_1, b_L)
        out.append(head)
        for k in range(1, L // 2):
            fwd = X[k]          # site 1+k: (b_k, b_{k+1})
            bwd = X[L - k]      # site L+1-k: (b_{L-k}, b_{L+1-k})
            t = np.einsum("mab,ncd->admnbc", fwd, bwd)  # (b_k, b_{L+1-k}, m, n, b_{k+1}, b_{L-k})
            out.append(t.reshape(4, 9, 4))
        tail = X[L // 2].reshape(3, 4).T.reshape(4, 3, 1)  # site L/2+1: (b_{L/2}, b_{L/2+1})
        out.append(tail)
    elif parity == "even":
        first = np.einsum("nab,mbc->mnca", X[L - 1], X[0])  # sites 1 and L share b_L
        out.append(first.reshape(1, 9, 4))                   # right bonds (b_1, b_{L-1})
        for k in range(2, L // 2):
            fwd = X[k - 1]       # site k: (b_{k-1}, b_k)
            bwd = X[L - k]       # site L+1-k: (b_{L-k}, b_{L+1-k})
            t = np.einsum("mab,ncd->admnbc", fwd, bwd)
            out.append(t.reshape(4, 9, 4))
        k = L // 2
        last = np.einsum("mab,nbd->admn", X[k - 1], X[k])   # sites L/2, L/2+1 share b_{L/2}
        out.append(last.reshape(4, 9, 1))
    else:
        raise ValueError("parity must be 'odd' or 'even'")
    return out


def bond_schmidt_values(tensors: list) -> list:
    """Normalized squared Schmidt values on every internal bond of an open MPS."""
    ts = [t.astype(float) for t in tensors]
    n = len(ts)
    for k in range(n - 1):
        Dl, d, Dr = ts[k].shape
        q, r = np.linalg.qr(ts[k].reshape(Dl * d, Dr))
        ts[k] = q.reshape(Dl, d, -1)
        ts[k + 1] = np.einsum("ab,bmc->amc", r, ts[k + 1])
    spectra = [None] * (n - 1)
    for k in range(n - 1, 0, -1):
        Dl, d, Dr = ts[k].shape
        u, s, vh = np.linalg.svd(ts[k].reshape(Dl, d * Dr), full_matrices=False)
        ts[k] = vh.reshape(-1, d, Dr)
        ts[k - 1] = np.einsum("amb,bc->amc", ts[k - 1], u * s[None, :])
        p = s**2
        spectra[k - 1] = p / p.sum()
    return spectra


def finite_rdm_spectrum(L: int, l: int) -> np.ndarray:
    """Nonzero RDM eigenvalues (descending, padded to 4) of ``l`` contiguous sites."""
    if not 1 <= l < L:
        raise ValueError(f"l={l} outside 1..{L - 1}")
    if l % 2:
        spectra = bond_schmidt_values(folded_chain(L, "odd"))
        p = spectra[(l - 1) // 2]
    else:
        spectra = bond_schmidt_values(folded_chain(L, "even"))
        p = spectra[l // 2 - 1]
    p = np.sort(p)[::-1]
    return np.pad(p, (0, max(0, 4 - len(p))))[:4]


def ee_profile(L: int, l_range: Optional[Iterable[int]] = None) -> list:
    """``(l, S_finite, S_TDL)`` for each cut, finite-L from the folded chain."""
    _check_even(L, 4)
    if l_range is None:
        l_range = range(1, L)
    odd = bond_schmidt_values(folded_chain(L, "odd"))
    even = bond_schmidt_values(folded_chain(L, "even"))
    out = []
    for l in l_range:
        if not 1 <= l < L:
            raise ValueError(f"l={l} outside 1..{L - 1}")
        p = odd[(l - 1) // 2] if l % 2 else even[l // 2 - 1]
        p = p[p > 1e-300]
        out.append((l, float(-np.sum(p * np.log(p))), tdl_entropy(l)))
    return out


def finite_rdm_spectrum_gram(L: int, l: int) -> np.ndarray:
    """Independent route: rank-4 Schmidt spectrum from region Gram matrices."""
    GX = region_transfer(l, 1).reshape(2, 2, 2, 2)       # [a, a', b, b'] ket a,b
    GY = region_transfer(L - l, l + 1).reshape(2, 2, 2, 2)
    # psi = sum_{ab} X_ab(s_A) Y_ba(s_B); Gram over index pairs (a, b)
    gx = np.einsum("xybc->xbyc", GX).reshape(4, 4).T     # <X_(a'b')|X_(ab)>, rows (a,b)
    gy = np.einsum("xybc->xbyc", GY).reshape(4, 4).T
    swap = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            swap[a * 2 + b, b * 2 + a] = 1.0
    gy_ab = swap.T @ gy @ swap
    w, v = np.linalg.eigh((gx + gx.conj().T) / 2)
    root = v @ np.diag(np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    K = root @ gy_ab.T @ root
    ev = np.sort(np.linalg.eigvalsh((K + K.conj().T) / 2))[::-1]
    return np.clip(ev, 0, None) / ev.sum()


# --- statevector export ------------------------------------------------------

def to_statevector(mps: Mps, cap: int = MAX_SITES) -> np.ndarray:
    """Unnormalized amplitudes ``Tr(A_{m1} B_{m2} ...)`` over the full ``3**L`` space."""
    L = mps.L
    if L > cap:
        raise SizeError(f"statevector export capped at L={cap}")
    state = mps.A.copy()
    for site in range(2, L + 1):
        state = np.einsum("pab,mbc->pmac", state, mps.site_tensor(site)).reshape(-1, 2, 2)
    return np.einsum("paa->p", state)


def write_vector(path, vec: np.ndarray) -> None:
    """Text export: one ``index re im`` line per nonzero amplitude."""
    vec = np.asarray(vec, dtype=complex)
    nz = np.nonzero(np.abs(vec) > 0)[0]
    with open(path, "w") as fh:
        fh.write(f"# length {len(vec)}\n")
        for i in nz:
            fh.write(f"{i} {vec[i].real:.17g} {vec[i].imag:.17g}\n")


def read_vector(path) -> np.ndarray:
    with open(path) as fh:
        n = int(fh.readline().split()[2])
        data = np.loadtxt(fh, ndmin=2)
    out = np.zeros(n, dtype=complex)
    if data.size:
        out[data[:, 0].astype(int)] = data[:, 1] + 1j * data[:, 2]
    return out
