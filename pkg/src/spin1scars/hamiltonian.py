"""Spin-1 XY Hamiltonian, its perturbations, and the twisted-boundary variant.

Local operators use the digit ordering of :mod:`spin1scars.hilbert`
(index 0, 1, 2 for m = -1, 0, +1). Every operator built here is a sum of
products of single-site operators with at most one nonzero entry per column,
which lets the assembly map each product state to a single image state.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .hilbert import SectorBasis, SpecError, check_memory

SQ2 = np.sqrt(2.0)
SZ = np.diag([-1.0, 0.0, 1.0])
SP = np.array([[0.0, 0.0, 0.0], [SQ2, 0.0, 0.0], [0.0, SQ2, 0.0]])
SM = SP.T.copy()
SX = (SP + SM) / 2
SY = (SP - SM) / 2j
ID3 = np.eye(3)

DENSE_THRESHOLD = 2000
PERTURBATIONS = ("V", "V'", "V''", "V'''", "none")


@dataclass(frozen=True)
class HamiltonianSpec:
    """Parameters of ``H = J*H_XY + epsilon*V + h*sum_i S^z_i`` on a ring of ``L`` sites.

    ``perturbation`` selects V (default), V', V'', V''' or none. ``boundary``
    is ``"periodic"`` or ``"twisted"``; the twisted chain only exists for the
    pure XY part.
    """

    L: int
    J: float = 1.0
    epsilon: float = 0.2
    h: float = 0.0
    perturbation: str = "V"
    boundary: str = "periodic"

    def __post_init__(self):
        if self.perturbation not in PERTURBATIONS:
            raise SpecError(f"unknown perturbation {self.perturbation!r}")
        if self.boundary not in ("periodic", "twisted"):
            raise SpecError(f"unknown boundary {self.boundary!r}")
        if self.boundary == "twisted" and self.epsilon != 0 and self.perturbation != "none":
            raise SpecError("the twisted boundary is defined for the pure XY chain only")


class OperatorMatrix:
    """Matrix of an operator in a :class:`SectorBasis`.

    Stored dense when the dimension is at most ``dense_threshold``, otherwise as
    CSR. ``target`` is the basis of the image space when it differs from
    ``basis`` (e.g. raising operators).
    """

    def __init__(self, basis: SectorBasis, matrix, target: Optional[SectorBasis] = None,
                 dense_threshold: int = DENSE_THRESHOLD):
        self.basis = basis
        self.target = target if target is not None else basis
        if sp.issparse(matrix):
            matrix = matrix.tocsr()
            if max(matrix.shape) <= dense_threshold:
                matrix = matrix.toarray()
        if not sp.issparse(matrix) and np.iscomplexobj(matrix) and np.allclose(matrix.imag, 0):
            matrix = matrix.real.copy()
        if sp.issparse(matrix) and np.iscomplexobj(matrix.data) and np.allclose(matrix.data.imag, 0):
            matrix = matrix.real.tocsr()
        self.matrix = matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def tosparse(self) -> sp.csr_matrix:
        return self.matrix if self.is_sparse else sp.csr_matrix(self.matrix)

    def hermiticity_error(self) -> float:
        diff = self.tosparse() - self.tosparse().conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def __matmul__(self, v):
        return apply(self, v)

    def export_triplets(self, path) -> None:
        """Write ``row col re im`` lines (0-based, nonzero entries only)."""
        coo = self.tosparse().tocoo()
        order = np.lexsort((coo.col, coo.row))
        data = coo.data.astype(complex)[order]
        with open(Path(path), "w") as fh:
            fh.write(f"# shape {self.shape[0]} {self.shape[1]}\n")
            for r, c, z in zip(coo.row[order], coo.col[order], data):
                fh.write(f"{r} {c} {z.real:.17g} {z.imag:.17g}\n")


def read_triplets(path) -> sp.csr_matrix:
    """Inverse of :meth:`OperatorMatrix.export_triplets`."""
    with open(Path(path)) as fh:
        header = fh.readline().split()
        shape = (int(header[2]), int(header[3]))
        data = np.loadtxt(fh, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix(shape, dtype=complex)
    vals = data[:, 2] + 1j * data[:, 3]
    return sp.csr_matrix((vals, (data[:, 0].astype(int), data[:, 1].astype(int))), shape=shape)


def apply(op: OperatorMatrix, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[0] != op.shape[1]:
        raise ValueError(f"dimension mismatch: operator {op.shape}, vector {v.shape}")
    return op.matrix @ v


# --- product-basis assembly -------------------------------------------------

Term = tuple  # (coefficient, ((site, 3x3 array), ...)), sites 0-based


def _monomial_tables(op: np.ndarray):
    """Image digit and amplitude of each input digit for a monomial 3x3 operator."""
    op = np.asarray(op)
    target = np.zeros(3, dtype=np.int8)
    amp = np.zeros(3, dtype=complex)
    for d in range(3):
        nz = np.nonzero(np.abs(op[:, d]) > 0)[0]
        if len(nz) > 1:
            raise ValueError("local operator is not monomial")
        if len(nz) == 1:
            target[d] = nz[0]
            amp[d] = op[nz[0], d]
    return target, amp


def product_matrix(terms: Iterable[Term], codes: np.ndarray, L: int,
                   target_codes: Optional[np.ndarray] = None) -> sp.csr_matrix:
    """Sparse matrix of ``sum_t c_t prod_s O_s`` between product bases given by codes."""
    from .hilbert import codes_to_digits, powers_of_three

    codes = np.asarray(codes, dtype=np.int64)
    if target_codes is None:
        target_codes = codes
    pw = powers_of_three(L)
    digits = codes_to_digits(codes, L)
    rows, cols, vals = [], [], []
    src = np.arange(len(codes))
    for coeff, factors in terms:
        amp = np.full(len(codes), complex(coeff))
        new = codes.copy()
        for site, op in factors:
            tgt, a = _monomial_tables(op)
            d = digits[:, site]
            amp *= a[d]
            new += (tgt[d].astype(np.int64) - d) * pw[site]
        keep = amp != 0
        if not keep.any():
            continue
        new, amp, s = new[keep], amp[keep], src[keep]
        pos = np.searchsorted(target_codes, new)
        pos = np.clip(pos, 0, len(target_codes) - 1)
        hit = target_codes[pos] == new
        rows.append(pos[hit])
        cols.append(s[hit])
        vals.append(amp[hit])
    shape = (len(target_codes), len(codes))
    if not rows:
        return sp.csr_matrix(shape, dtype=float)
    vals = np.concatenate(vals)
    if np.allclose(vals.imag, 0):
        vals = vals.real
    check_memory(len(vals) * 32, "operator assembly")
    return sp.csr_matrix((vals, (np.concatenate(rows), np.concatenate(cols))), shape=shape)


def _bonds(L: int):
    return [(i, (i + 1) % L) for i in range(L)]


def xy_terms(L: int, couplings: Sequence[float]) -> list:
    """``J_b (S^x S^x + S^y S^y) = J_b (S^+ S^- + S^- S^+) / 2`` on every ring bond."""
    terms = []
    for (i, j), Jb in zip(_bonds(L), couplings):
        if Jb == 0:
            continue
        terms.append((Jb / 2, ((i, SP), (j, SM))))
        terms.append((Jb / 2, ((i, SM), (j, SP))))
    return terms


def perturbation_terms(L: int, kind: str, strength: float) -> list:
    if kind == "none" or strength == 0:
        return []
    SP2, SM2, SZ2 = SP @ SP, SM @ SM, SZ @ SZ
    terms = []
    for i, j in _bonds(L):
        if kind == "V":
            terms += [(strength, ((i, SP2), (j, SM2))), (strength, ((i, SM2), (j, SP2)))]
        elif kind == "V'":
            terms += [(1j * strength, ((i, SP2), (j, SM2))), (-1j * strength, ((i, SM2), (j, SP2)))]
        elif kind == "V''":
            terms += [(strength, ((i, SZ2), (j, SZ))), (-strength, ((i, SZ), (j, SZ2)))]
        elif kind == "V'''":
            terms += [(strength, ((i, SZ2), (j, SZ2))), (-strength, ((i, SZ), (j, SZ)))]
    return terms


def zeeman_terms(L: int, h: float) -> list:
    return [(h, ((i, SZ),)) for i in range(L)] if h else []


# perturbations that anticommute with reflection or inversion
_BREAKS = {"V'": ("reflection", "inversion"), "V''": ("reflection", "inversion")}


def _to_sector(parent: sp.csr_matrix, basis: SectorBasis) -> sp.csr_matrix:
    if basis.is_product:
        return parent
    P = basis.lift_matrix
    return (P.conj().T @ parent @ P).tocsr()


def build_hamiltonian(spec: HamiltonianSpec, basis: SectorBasis,
                      dense_threshold: int = DENSE_THRESHOLD) -> OperatorMatrix:
    """Matrix of the full Hamiltonian in ``basis`` (periodic boundary)."""
    if basis.L != spec.L:
        raise ValueError(f"basis has L={basis.L}, spec has L={spec.L}")
    if spec.boundary == "twisted":
        raise SpecError("use build_twisted_xy for the twisted chain")
    for sym in _BREAKS.get(spec.perturbation, ()):
        if getattr(basis.spec, sym) is not None and spec.epsilon != 0:
            raise SpecError(f"perturbation {spec.perturbation} does not conserve {sym}")
    L = spec.L
    terms = xy_terms(L, [spec.J] * L) + perturbation_terms(L, spec.perturbation, spec.epsilon)
    terms += zeeman_terms(L, spec.h)
    parent = product_matrix(terms, basis.parent_codes, L)
    return OperatorMatrix(basis, _to_sector(parent, basis), dense_threshold=dense_threshold)


def build_twisted_xy(L: int, J_list: Sequence[float], phase_sign: int, M: int,
                     basis: SectorBasis, dense_threshold: int = DENSE_THRESHOLD) -> OperatorMatrix:
    """Open XY chain with couplings ``J_list[:L-1]`` plus a phase-twisted wrap bond.

    The wrap bond is ``J_list[L-1]/2 * (S_L^+ S_1^- e^{-s i pi M/2} + h.c.)`` with
    ``s = phase_sign``.
    """
    if basis.spec.M is None or basis.spec.M != M:
        raise SpecError("the twisted chain needs a basis of fixed magnetization M")
    if not basis.is_product:
        raise SpecError("the twisted chain breaks translation; use a magnetization-only basis")
    if len(J_list) != L or basis.L != L:
        raise ValueError("need one coupling per bond of the ring")
    if phase_sign not in (1, -1):
        raise ValueError("phase_sign must be +1 or -1")
    couplings = list(J_list[:-1]) + [0.0]
    terms = xy_terms(L, couplings)
    phase = np.exp(-1j * phase_sign * np.pi * M / 2)
    Jw = J_list[-1]
    terms.append((Jw / 2 * phase, ((L - 1, SP), (0, SM))))
    terms.append((Jw / 2 * np.conj(phase), ((L - 1, SM), (0, SP))))
    parent = product_matrix(terms, basis.parent_codes, L)
    return OperatorMatrix(basis, parent, dense_threshold=dense_threshold)


def build_twisted_xy_full(L: int, J_list: Sequence[float], phase_sign: int,
                          basis: SectorBasis) -> OperatorMatrix:
    """Twisted chain on an unresolved product basis, phase taken from each state's M."""
    if not basis.is_product or basis.spec.M is not None:
        raise SpecError("expected the full product basis")
    from .hilbert import codes_to_digits

    mags = codes_to_digits(basis.parent_codes, L).sum(axis=1).astype(int) - L
    couplings = list(J_list[:-1]) + [0.0]
    H = product_matrix(xy_terms(L, couplings), basis.parent_codes, L)
    phase = sp.diags(np.exp(-1j * phase_sign * np.pi * mags / 2))
    Jw = J_list[-1]
    wrap = product_matrix([(Jw / 2, ((L - 1, SP), (0, SM)))], basis.parent_codes, L)
    # the wrap hop conserves M, so the phase may be applied on either side
    H = H + wrap @ phase + (wrap @ phase).conj().T
    return OperatorMatrix(basis, H.tocsr(), dense_threshold=0)


def build_twisted_su2_generators(L: int, basis: SectorBasis, cap: int = 10):
    """Global twisted generators ``s^+_T = sum_i (S_i^+)^2/2 U_i`` and ``s^z_T = M/2``.

    ``U_i = prod_{l<i} (1 - 2 (S^z_l)^2)`` is the string of ``(-1)^{S^z}`` factors.
    """
    if L > cap:
        from .hilbert import SizeError

        raise SizeError(f"L={L} exceeds the verification cap {cap}")
    if not basis.is_product or basis.spec.M is not None:
        raise SpecError("twisted generators change M; pass the full product basis")
    string = ID3 - 2 * SZ @ SZ
    raise_local = SP @ SP / 2
    terms = []
    for i in range(L):
        factors = tuple((l, string) for l in range(i)) + ((i, raise_local),)
        terms.append((1.0, factors))
    splus = product_matrix(terms, basis.parent_codes, L)
    sz = product_matrix([(0.5, ((i, SZ),)) for i in range(L)], basis.parent_codes, L)
    return (OperatorMatrix(basis, splus, dense_threshold=0),
            OperatorMatrix(basis, sz, dense_threshold=0))


def local_operator(L: int, site: int, op: np.ndarray, basis: SectorBasis) -> OperatorMatrix:
    """Single-site operator (0-based ``site``) on a product basis."""
    if not basis.is_product:
        raise SpecError("local operators are assembled in product bases")
    return OperatorMatrix(basis, product_matrix([(1.0, ((site, op),))], basis.parent_codes, L),
                          dense_threshold=0)


def magnetization_diagonal(L: int) -> np.ndarray:
    """Total ``S^z`` of every full-space product state."""
    from .hilbert import codes_to_digits

    return codes_to_digits(np.arange(3**L), L).sum(axis=1).astype(np.int64) - L
