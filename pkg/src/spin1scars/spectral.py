"""Dense eigendecomposition, level-spacing ratios, and eigenstate entanglement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la
from scipy import integrate

from .hamiltonian import OperatorMatrix
from .hilbert import MEMORY_CAP_BYTES, SectorSpec, SizeError, check_memory

HIST_BINS = 25


class EmptyStatsError(ValueError):
    pass


@dataclass
class SpectrumResult:
    sector: Optional[SectorSpec]
    energies: np.ndarray
    vectors: Optional[np.ndarray] = None
    residual: float = 0.0
    orthonormality_error: float = 0.0

    @property
    def dim(self) -> int:
        return len(self.energies)


def diagonalize(op: OperatorMatrix, want_vectors: bool = False,
                memory_cap: float = MEMORY_CAP_BYTES, check: bool = True) -> SpectrumResult:
    """Full spectrum of a Hermitian operator by dense LAPACK diagonalization.

    With ``want_vectors`` the eigenvectors are checked for orthonormality and
    residual ``max |H v - E v|`` before returning.
    """
    n = op.dim
    itemsize = 16 if (op.is_sparse and np.iscomplexobj(op.matrix.data)) or \
        (not op.is_sparse and np.iscomplexobj(op.matrix)) else 8
    copies = 2 if want_vectors else 1
    try:
        check_memory(copies * n * n * itemsize, f"dense diagonalization of dim {n}", memory_cap)
    except SizeError:
        raise
    spec = op.basis.spec if op.basis is not None else None
    if n == 0:
        return SpectrumResult(spec, np.zeros(0), np.zeros((0, 0)) if want_vectors else None)
    if op.is_sparse:
        a = op.matrix.toarray()
    else:
        a = np.array(op.matrix, copy=True)
    if not want_vectors:
        energies = la.eigh(a, eigvals_only=True, overwrite_a=True, check_finite=False)
        return SpectrumResult(spec, energies)
    energies, vecs = la.eigh(a, overwrite_a=True, check_finite=False)
    del a
    res = SpectrumResult(spec, energies, vecs)
    if check:
        res.orthonormality_error = float(np.abs(vecs.conj().T @ vecs - np.eye(n)).max())
        hv = op.matrix @ vecs
        res.residual = float(np.abs(hv - vecs * energies[None, :]).max())
        scale = max(1.0, float(np.abs(energies).max()))
        if res.orthonormality_error > 1e-10 or res.residual > 1e-10 * scale:
            raise ArithmeticError(
                f"eigendecomposition check failed: ortho {res.orthonormality_error:.2e}, "
                f"residual {res.residual:.2e}")
    return res


@dataclass
class RStats:
    r_values: np.ndarray
    mean_r: float
    histogram: tuple = field(repr=False)
    n_levels: int = 0
    n_merged: int = 0


def merge_degenerate(energies: np.ndarray, degeneracy_tol: Optional[float] = None):
    """Collapse levels closer than ``degeneracy_tol`` (default 1e-10 times the width)."""
    e = np.sort(np.asarray(energies, dtype=float))
    if len(e) == 0:
        return e, 0.0
    if degeneracy_tol is None:
        degeneracy_tol = 1e-10 * max(e[-1] - e[0], 1e-300)
    keep = np.concatenate(([True], np.diff(e) > degeneracy_tol))
    return e[keep], degeneracy_tol


def r_statistics(energies: Sequence[float], degeneracy_tol: Optional[float] = None,
                 window: Optional[float] = None, bins: int = HIST_BINS) -> RStats:
    """Ratios ``r_n = min(dE_n, dE_{n+1}) / max(dE_n, dE_{n+1})``.

    ``window`` keeps only the central fraction of the merged levels before
    forming ratios (``None`` keeps all of them).
    """
    e_all = np.asarray(energies, dtype=float)
    e, _ = merge_degenerate(e_all, degeneracy_tol)
    n_merged = len(e_all) - len(e)
    if window is not None:
        cut = int(round(len(e) * (1 - window) / 2))
        e = e[cut:len(e) - cut] if cut else e
    if len(e) < 3:
        raise EmptyStatsError(f"need at least 3 distinct levels, got {len(e)}")
    gaps = np.diff(e)
    a, b = gaps[:-1], gaps[1:]
    r = np.minimum(a, b) / np.maximum(a, b)
    dens, edges = np.histogram(r, bins=bins, range=(0.0, 1.0), density=True)
    return RStats(r, float(r.mean()), (edges, dens), len(e), n_merged)


def goe_surmise(r):
    """Density ``(27/4) (r + r^2) / (1 + r + r^2)^(5/2)`` of the GOE ratio ``min(r, 1/r)``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any((r_arr < 0) | (r_arr > 1)):
        raise ValueError("r must lie in [0, 1]")
    out = 27.0 / 4.0 * (r_arr + r_arr**2) / (1.0 + r_arr + r_arr**2) ** 2.5
    return float(out) if np.ndim(out) == 0 else out


def goe_mean_r() -> float:
    return integrate.quad(lambda x: x * goe_surmise(x), 0.0, 1.0, epsabs=1e-13)[0]


def goe_bin_density(edges: np.ndarray) -> np.ndarray:
    """Average of the surmise over each histogram bin."""
    mass = [integrate.quad(goe_surmise, a, b, epsabs=1e-13)[0] for a, b in zip(edges[:-1], edges[1:])]
    return np.asarray(mass) / np.diff(edges)


def l1_distance_to_goe(stats: RStats) -> float:
    edges, dens = stats.histogram
    return float(np.sum(np.abs(dens - goe_bin_density(edges)) * np.diff(edges)))


def entanglement_spectrum(v: np.ndarray, L: int, l: int) -> np.ndarray:
    """Squared Schmidt values across the cut after site ``l`` (descending)."""
    v = np.asarray(v)
    if v.shape != (3**L,):
        raise ValueError(f"expected a full-space vector of length 3**{L}")
    if not 1 <= l < L:
        raise ValueError(f"cut l={l} outside 1..{L - 1}")
    # strided column views would push the product off the BLAS path
    mat = np.ascontiguousarray(v).reshape(3**l, 3 ** (L - l))
    if mat.shape[0] > mat.shape[1]:
        mat = mat.T
    # the smaller Gram matrix has the same nonzero spectrum as the SVD
    gram = mat @ mat.conj().T
    p = la.eigvalsh(gram, check_finite=False)[::-1]
    return np.clip(p, 0.0, None)


def bipartite_entropy(v: np.ndarray, L: int, l: int) -> float:
    """Von Neumann entropy (natural log) of sites ``1..l`` for a normalized state."""
    norm = np.linalg.norm(v)
    if abs(norm - 1) > 1e-8:
        raise ValueError(f"state is not normalized (norm {norm:.3e})")
    return entropy_from_probabilities(entanglement_spectrum(v, L, l))


def entropy_from_probabilities(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)))


def page_value(L: int) -> float:
    """``(L/2) log 3 - 1/2``, the random-state half-chain entropy of spin-1s."""
    if L % 2:
        raise ValueError("L must be even")
    return L / 2 * np.log(3.0) - 0.5


@dataclass
class EEPoint:
    energy: float
    entropy: float
    scar: bool = False
    scar_overlap: float = 0.0


def ee_scan(spectrum: SpectrumResult, basis, l: int, scar_states: Optional[Sequence] = None,
            scar_threshold: float = 0.5, chunk: int = 64) -> list:
    """Energy/entropy pairs of every eigenvector, lifted to the full space.

    ``scar_states`` are normalized full-space vectors; an eigenvector is flagged
    when its squared overlap with any of them exceeds ``scar_threshold``.
    """
    if spectrum.vectors is None:
        raise ValueError("spectrum has no eigenvectors")
    L = basis.L
    scars = []
    if scar_states is not None:
        scars = [basis.project(s) for s in scar_states]
    out = []
    vecs = spectrum.vectors
    for start in range(0, vecs.shape[1], chunk):
        block = vecs[:, start:start + chunk]
        full = basis.lift(block)
        for j in range(block.shape[1]):
            v = full[:, j]
            S = entropy_from_probabilities(entanglement_spectrum(v, L, l))
            ov = max((abs(np.vdot(s, block[:, j])) ** 2 for s in scars), default=0.0)
            out.append(EEPoint(float(spectrum.energies[start + j]), S, ov > scar_threshold, float(ov)))
    return out


def central_slice(n: int, fraction: float = 0.8) -> slice:
    cut = int(round(n * (1 - fraction) / 2))
    return slice(cut, n - cut)
