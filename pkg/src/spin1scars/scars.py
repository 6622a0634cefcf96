"""Virtual spin-1/2 construction of the scar tower.

Each spin-1 site ``j`` (1-based) is split into two virtual spins-1/2 at
positions ``2j - 1`` and ``2j``. The local map

    P_j = |1><up up| + |0>(<up dn| + <dn up|) + |-1><dn dn|

glues them back together. Virtual spins ``(2i, 2i + 1)`` form pair ``i``,
with pair ``L`` wrapping around as ``(2L, 1)``; pair ``i`` straddles the bond
between physical sites ``i`` and ``i + 1``. Bell pairs
``|o> = (|up up> + |dn dn>)/sqrt 2`` sit on even pairs and
``|g> = (|up up> - |dn dn>)/sqrt 2`` on odd pairs.

The pair operators ``t^+_i = s^+_{2i} s^+_{2i+1}`` generate the algebra
``J^+ = sum_i (-1)^i t^+_i``. Restricted to ``{up up, dn dn}`` a pair is a
pseudospin-1/2, and ``|o>``/``|g>`` point along ``+x``/``-x``, so the Bell-pair
state is the ``J^x = L/2`` eigenstate.

Virtual basis states are integers over ``2L`` bits with virtual site 1 the most
significant bit and bit value 0 meaning spin up.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .hamiltonian import SP
from .hilbert import MAX_SITES, SizeError, codes_to_digits, powers_of_three
from .spectral import entanglement_spectrum, entropy_from_probabilities

EXPLICIT_CAP = 12
GENERATOR_CAP = 8


@dataclass(frozen=True)
class VirtualState:
    """State of ``2L`` virtual spins.

    ``explicit`` holds all ``2**(2L)`` amplitudes; ``pseudospin`` holds ``2**L``
    amplitudes of pair configurations with both spins of every pair aligned
    (bit ``L - i`` of the index is pair ``i``, 0 meaning up up). Exactly one of
    them is set.
    """

    L: int
    explicit: Optional[np.ndarray] = None
    pseudospin: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.explicit is None) == (self.pseudospin is None):
            raise ValueError("set exactly one of explicit or pseudospin amplitudes")

    def to_explicit(self, cap: int = EXPLICIT_CAP) -> np.ndarray:
        if self.explicit is not None:
            return self.explicit
        if self.L > cap:
            raise SizeError(f"explicit virtual states are capped at L={cap}")
        out = np.zeros(4**self.L, dtype=self.pseudospin.dtype)
        out[pseudospin_to_virtual(self.L, np.arange(2**self.L))] = self.pseudospin
        return out


def _bits(codes: np.ndarray, nbits: int) -> np.ndarray:
    shifts = np.arange(nbits - 1, -1, -1, dtype=np.int64)
    return ((np.asarray(codes, dtype=np.int64)[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def pseudospin_to_virtual(L: int, configs: np.ndarray) -> np.ndarray:
    """Virtual codes of aligned pair configurations.

    Pair ``i`` covers virtual sites ``2i`` and ``2i + 1`` (pair ``L`` covers
    ``2L`` and ``1``).
    """
    t = _bits(configs, L)  # column i-1 is pair i
    v = np.zeros((len(t), 2 * L), dtype=np.int64)
    for i in range(1, L + 1):
        a, b = 2 * i, 2 * i + 1 if i < L else 1
        v[:, a - 1] = t[:, i - 1]
        v[:, b - 1] = t[:, i - 1]
    weights = 1 << np.arange(2 * L - 1, -1, -1, dtype=np.int64)
    return v @ weights


def virtual_to_physical(L: int, codes: np.ndarray) -> np.ndarray:
    """Physical digits (``m + 1``) of virtual basis states, shape ``(n, L)``."""
    b = _bits(codes, 2 * L).reshape(-1, L, 2)
    return (2 - b.sum(axis=2)).astype(np.int8)


def _bell_pair_factor(L: int) -> np.ndarray:
    """Amplitude of every aligned pair configuration in the Bell-pair product."""
    t = _bits(np.arange(2**L), L)
    odd = (np.arange(1, L + 1) % 2 == 1)
    down_on_odd = (t[:, odd] == 1).sum(axis=1)
    return (-1.0) ** down_on_odd / 2 ** (L / 2)


def build_phi_x(L: int, explicit: bool = False) -> VirtualState:
    """Alternating Bell-pair state, ``|o>`` on even pairs and ``|g>`` on odd pairs."""
    if L % 2 or L < 2:
        raise SizeError(f"L must be even and >= 2, got {L}")
    amps = _bell_pair_factor(L)
    state = VirtualState(L, pseudospin=amps)
    if explicit:
        return VirtualState(L, explicit=state.to_explicit())
    return state


def apply_projector(v: VirtualState, cap: int = MAX_SITES) -> np.ndarray:
    """``prod_j P_j`` applied to a virtual state, as a full ``3**L`` vector."""
    L = v.L
    if L > cap:
        raise SizeError(f"physical vectors are capped at L={cap}")
    if v.pseudospin is not None:
        codes = pseudospin_to_virtual(L, np.arange(2**L))
        amps = v.pseudospin
    else:
        codes = np.nonzero(v.explicit)[0]
        amps = v.explicit[codes]
    phys = virtual_to_physical(L, codes) @ powers_of_three(L)
    out = np.zeros(3**L, dtype=np.result_type(amps.dtype, np.float64))
    np.add.at(out, phys, amps)
    return out


# --- algebra on the virtual space ---------------------------------------------

def _single_spin(L: int, site: int, kind: str) -> sp.csr_matrix:
    """``s^+``, ``s^-`` or ``s^z`` on virtual ``site`` (1-based) of ``2L`` spins."""
    n = 4**L
    idx = np.arange(n, dtype=np.int64)
    bit = 1 << (2 * L - site)
    is_down = (idx & bit) != 0
    if kind == "z":
        return sp.diags(np.where(is_down, -0.5, 0.5)).tocsr()
    if kind == "+":
        src = idx[is_down]
        return sp.csr_matrix((np.ones(len(src)), (src ^ bit, src)), shape=(n, n))
    if kind == "-":
        src = idx[~is_down]
        return sp.csr_matrix((np.ones(len(src)), (src ^ bit, src)), shape=(n, n))
    raise ValueError(kind)


def pair_sites(L: int, i: int) -> tuple[int, int]:
    return (2 * i, 2 * i + 1) if i < L else (2 * L, 1)


def su2_generators(L: int, cap: int = GENERATOR_CAP):
    """Sparse ``(J^+, J^-, J^z)`` on the ``4**L``-dimensional virtual space."""
    if L > cap:
        raise SizeError(f"virtual generators are capped at L={cap}")
    n = 4**L
    Jp = sp.csr_matrix((n, n))
    for i in range(1, L + 1):
        a, b = pair_sites(L, i)
        Jp = Jp + (-1) ** i * (_single_spin(L, a, "+") @ _single_spin(L, b, "+"))
    Jz = sum(_single_spin(L, s, "z") for s in range(1, 2 * L + 1)) / 2
    Jp = Jp.tocsr()
    return Jp, Jp.T.tocsr(), sp.csr_matrix(Jz)


def casimir(Jp, Jm, Jz):
    """``J^2 = J^+ J^- + J_z^2 - J_z``."""
    return (Jp @ Jm + Jz @ Jz - Jz).tocsr()


def pair_irrep_content() -> dict:
    """Two-spin action of ``t^+ = s^+ s^+``: spin-1/2 on ``{up up, dn dn}`` and two singlets."""
    sp1 = np.array([[0.0, 1.0], [0.0, 0.0]])  # basis (up, dn)
    tp = np.kron(sp1, sp1)
    tm = tp.T
    tz = (tp @ tm - tm @ tp) / 2
    cas = tp @ tm + tz @ tz - tz
    return {"casimir": np.diag(cas).copy(), "annihilated": [1, 2]}


def pseudospin_raising(L: int) -> sp.csr_matrix:
    """``J^+`` restricted to aligned pairs: ``sum_i (-1)^i t^+_i`` on ``2**L`` configs."""
    n = 2**L
    idx = np.arange(n, dtype=np.int64)
    rows, cols, vals = [], [], []
    for i in range(1, L + 1):
        bit = 1 << (L - i)
        src = idx[(idx & bit) != 0]
        rows.append(src ^ bit)
        cols.append(src)
        vals.append(np.full(len(src), (-1.0) ** i))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


# --- the tower ------------------------------------------------------------------

@dataclass
class ScarTower:
    """Projected Dicke tower.

    ``norms`` are the norms of ``P|phi_n>`` before renormalization;
    ``magnetizations`` are measured on the physical states (total ``S^z``),
    ``pseudospin_m`` is ``n - L/2``.
    """

    L: int
    h: float
    states: list
    dicke: list
    energies: np.ndarray
    norms: np.ndarray
    magnetizations: np.ndarray
    pseudospin_m: np.ndarray
    coefficients: np.ndarray

    def records(self, psi_x: Optional[np.ndarray] = None) -> list:
        out = []
        for n in range(self.L + 1):
            rec = {"n": n, "M": int(self.magnetizations[n]), "E": float(self.energies[n]),
                   "norm": float(self.norms[n]), "c_n": float(self.coefficients[n])}
            if psi_x is not None:
                rec["overlap"] = float(abs(np.vdot(self.states[n], psi_x)))
            out.append(rec)
        return out


def middle_anomaly(L: int) -> float:
    """``sqrt((C(L, L/2) +- 2) / C(L, L/2))``, plus sign for ``L = 4n``."""
    c = comb(L, L // 2)
    return float(np.sqrt((c + 2) / c if L % 4 == 0 else (c - 2) / c))


def dicke_states(L: int) -> list:
    """Normalized ``|phi_n>`` in the pseudospin space, built rung by rung with ``J^+``."""
    Jp = pseudospin_raising(L)
    v = np.zeros(2**L)
    v[-1] = 1.0  # all pairs down down
    out = [v]
    for _ in range(L):
        v = Jp @ v
        v = v / np.linalg.norm(v)
        out.append(v)
    return out


def physical_magnetization(v: np.ndarray, L: int) -> float:
    """``<psi|sum S^z|psi> / <psi|psi>`` for a full-space vector."""
    nz = np.nonzero(v)[0]
    M = codes_to_digits(nz, L).sum(axis=1).astype(float) - L
    w = np.abs(v[nz]) ** 2
    return float(w @ M / w.sum())


def build_tower(L: int, h: float = 1.0, cap: int = EXPLICIT_CAP) -> ScarTower:
    if L % 2 or L < 2:
        raise SizeError(f"L must be even and >= 2, got {L}")
    if L > cap:
        raise SizeError(f"tower construction is capped at L={cap}")
    dicke = dicke_states(L)
    states, norms, mags = [], [], []
    for phi in dicke:
        psi = apply_projector(VirtualState(L, pseudospin=phi))
        nrm = np.linalg.norm(psi)
        norms.append(nrm)
        psi = psi / nrm
        states.append(psi)
        mags.append(physical_magnetization(psi, L))
    n = np.arange(L + 1)
    coeffs = np.sqrt(np.array([comb(L, k) for k in n], dtype=float) / 2.0**L)
    return ScarTower(L, h, states, dicke, h * (2 * n - L), np.array(norms),
                     np.rint(mags).astype(int), n - L / 2, coeffs)


def bond_bimagnon(L: int, n: int, cap: int = EXPLICIT_CAP) -> np.ndarray:
    """Normalized ``sum (-1)^{sum i_k} prod S^+_{i_k} S^+_{i_k + 1} |-1, ..., -1>``.

    The sum runs over sets of ``n`` distinct bonds ``i_k`` of the ring (bond
    ``L`` joins sites ``L`` and 1).
    """
    if L > cap:
        raise SizeError(f"bond-bimagnon states are capped at L={cap}")
    if not 0 <= n <= L:
        raise ValueError(f"n={n} outside 0..{L}")
    raise_amp = {0: 1.0, 1: SP[1, 0], 2: SP[2, 1] * SP[1, 0]}
    out = np.zeros(3**L)
    pw = powers_of_three(L)
    for bonds in combinations(range(1, L + 1), n):
        count = np.zeros(L, dtype=int)
        for i in bonds:
            count[i - 1] += 1
            count[i % L] += 1
        if count.max() > 2:
            continue
        amp = (-1.0) ** sum(bonds) * np.prod([raise_amp[c] for c in count])
        out[int(count @ pw)] += amp
    nrm = np.linalg.norm(out)
    if nrm == 0:
        raise ArithmeticError("bond-bimagnon state vanished")
    return out / nrm


def dicke_entropy(L: int, n: int, l: int) -> float:
    """Entropy of ``|phi_n>`` for ``l`` of the ``L`` pseudospins versus the rest.

    Schmidt weights are hypergeometric, ``C(l, k) C(L-l, n-k) / C(L, n)``.
    """
    if not 0 <= l <= L:
        raise ValueError(f"invalid cut l={l} for L={L}")
    if not 0 <= n <= L:
        raise ValueError(f"n={n} outside 0..{L}")
    total = comb(L, n)
    p = np.array([comb(l, k) * comb(L - l, n - k) for k in range(max(0, n - (L - l)), min(l, n) + 1)],
                 dtype=float) / total
    return entropy_from_probabilities(p)


def dicke_entropy_bruteforce(L: int, n: int, l: int) -> float:
    """Same entropy from the explicit pseudospin vector (pseudospins ``1..l`` versus the rest)."""
    phi = dicke_states(L)[n]
    mat = phi.reshape(2**l, 2 ** (L - l))
    s = np.linalg.svd(mat, compute_uv=False)
    return entropy_from_probabilities(s**2)


def physical_entropy(psi: np.ndarray, L: int, l: int) -> float:
    return entropy_from_probabilities(entanglement_spectrum(psi / np.linalg.norm(psi), L, l))


def tower_momentum(L: int, n: int) -> int:
    """Momentum index of ``|psi_n>``: translation multiplies it by ``(-1)^n``."""
    return 0 if n % 2 == 0 else L // 2


def locate_sector(psi: np.ndarray, L: int, M: int, k: int, tol: float = 1e-10):
    """Find the reflection (and inversion at ``M = 0``) quantum numbers carrying ``psi``.

    Returns ``(SectorSpec, weight)`` for the sector with the largest weight.
    """
    from .hilbert import SectorSpec, build_sector_basis

    best = None
    inv_opts = (1, -1) if M == 0 else (None,)
    for R in (1, -1):
        for I in inv_opts:
            spec = SectorSpec(L, M, k, R, I)
            basis = build_sector_basis(spec)
            if basis.dim == 0:
                continue
            c = basis.project(psi)
            w = float(np.vdot(c, c).real)
            if best is None or w > best[1]:
                best = (spec, w)
    if best is None or abs(best[1] - np.vdot(psi, psi).real) > tol:
        raise ArithmeticError(f"state is not contained in a single sector (weight {best})")
    return best
