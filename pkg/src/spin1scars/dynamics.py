"""Quench dynamics under the Zeeman-split Hamiltonian.

Initial states are decomposed over symmetry sectors (magnetization, then
momentum, reflection and inversion where they apply). Each occupied sector is
diagonalized densely and evolved exactly; sectors above ``dense_cap`` fall back
to a Krylov propagator (``scipy.sparse.linalg.expm_multiply``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.linalg import expm_multiply

from .hamiltonian import HamiltonianSpec, build_hamiltonian
from .hilbert import (MAX_SITES, SectorSpec, SizeError, build_sector_basis, check_length,
                      codes_to_digits, config_to_index)
from .spectral import diagonalize, entanglement_spectrum, entropy_from_probabilities

DEFAULT_TMAX = 30.0
DEFAULT_NT = 600
DENSE_CAP = 12000
KRYLOV_STEP = 0.05


def default_times(tmax: float = DEFAULT_TMAX, nt: int = DEFAULT_NT) -> np.ndarray:
    return np.linspace(0.0, tmax, nt)


@dataclass
class QuenchSeries:
    times: np.ndarray
    return_prob: np.ndarray
    half_chain_entropy: np.ndarray
    norms: np.ndarray
    energy: np.ndarray
    label: str = ""
    sectors: list = field(default_factory=list)
    observables: dict = field(default_factory=dict)

    @property
    def occupied_dimension(self) -> int:
        return int(sum(d for _, d, _ in self.sectors))

    def to_rows(self) -> list:
        keys = sorted(self.observables)
        rows = []
        for i, t in enumerate(self.times):
            row = [t, self.return_prob[i], self.half_chain_entropy[i]]
            row += [self.observables[k][i] for k in keys]
            rows.append(row)
        return rows

    def columns(self) -> list:
        return ["t", "return_prob", "S_vN"] + sorted(self.observables)


# --- initial states -------------------------------------------------------------

def product_state(config: Sequence[int]) -> np.ndarray:
    L = len(config)
    check_length(L)
    v = np.zeros(3**L)
    v[config_to_index(config)] = 1.0
    return v


def zero_state(L: int) -> np.ndarray:
    return product_state([0] * L)


def z2_state(L: int) -> np.ndarray:
    """``|-1, 1, -1, 1, ...>``."""
    return product_state([(-1) ** (i + 1) for i in range(L)])


def psi_x_state(L: int) -> np.ndarray:
    from .mps import build_mps, to_statevector

    v = to_statevector(build_mps(L))
    return v / np.linalg.norm(v)


INITIAL_STATES = {"psix": psi_x_state, "zero": zero_state, "z2": z2_state}


# --- sector decomposition -------------------------------------------------------

def _candidate_sectors(L: int, M: int):
    """Sector specs covering the magnetization block, likely ones first."""
    ks = [0, L // 2] + [k for k in range(L) if k not in (0, L // 2)]
    for k in ks:
        if k in (0, L // 2):
            for R in (1, -1):
                for I in ((1, -1) if M == 0 else (None,)):
                    yield SectorSpec(L, M, k, R, I)
        else:
            yield SectorSpec(L, M, k)


def sector_decomposition(psi: np.ndarray, L: int, tol: float = 1e-14, cap: int = MAX_SITES) -> list:
    """``(basis, coefficients)`` for every sector carrying weight above ``tol``."""
    digits_M = codes_to_digits(np.nonzero(np.abs(psi) > 0)[0], L).sum(axis=1).astype(int) - L
    out = []
    for M in sorted(set(digits_M.tolist())):
        block_codes = np.nonzero(np.abs(psi) > 0)[0][digits_M == M]
        block_weight = float(np.sum(np.abs(psi[block_codes]) ** 2))
        captured = 0.0
        for spec in _candidate_sectors(L, M):
            basis = build_sector_basis(spec, cap=cap)
            if basis.dim == 0:
                continue
            c = basis.project(psi)
            w = float(np.vdot(c, c).real)
            if w > tol:
                out.append((basis, c))
                captured += w
            if abs(block_weight - captured) < 1e-12:
                break
        if abs(block_weight - captured) > 1e-10:
            raise ArithmeticError(f"sector decomposition lost weight in M={M}")
    return out


# --- evolution --------------------------------------------------------------------

def _half_chain_entropies(vectors: np.ndarray, L: int) -> np.ndarray:
    l = L // 2
    return np.array([entropy_from_probabilities(entanglement_spectrum(vectors[:, j], L, l))
                     for j in range(vectors.shape[1])])


def evolve(initial: np.ndarray, spec: HamiltonianSpec, times: Optional[np.ndarray] = None,
           dense_cap: int = DENSE_CAP, chunk: int = 50, cap: int = MAX_SITES,
           observables: Optional[dict] = None, label: str = "") -> QuenchSeries:
    """Exact evolution ``e^{-iHt}|psi>`` sampled on ``times``.

    ``observables`` maps names to diagonal-in-product-basis arrays of length
    ``3**L`` or to callables ``f(full_vectors) -> values`` applied per time chunk.
    """
    L = spec.L
    check_length(L, cap)
    psi = np.asarray(initial, dtype=complex)
    if psi.shape != (3**L,):
        raise ValueError(f"initial state must have length 3**{L}")
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ValueError("initial state is not normalized")
    times = default_times() if times is None else np.asarray(times, dtype=float)
    parts = sector_decomposition(psi, L, cap=cap)
    nt = len(times)
    amp0 = np.zeros(nt, dtype=complex)
    energy = np.zeros(nt)
    norms2 = np.zeros(nt)
    sector_info = []
    # per-sector evolved coordinates, produced lazily in time chunks
    propagators = []
    for basis, c in parts:
        H = build_hamiltonian(spec, basis)
        if basis.dim <= dense_cap:
            res = diagonalize(H, want_vectors=True)
            w = res.vectors.conj().T @ c
            phases = np.exp(-1j * np.outer(res.energies, times))
            amp0 += (np.abs(w) ** 2) @ phases
            energy += float(np.abs(w) ** 2 @ res.energies)
            propagators.append(("dense", basis, res.vectors, w, res.energies))
        else:
            Hs = H.tosparse()
            energy += float(np.real(np.vdot(c, Hs @ c)))
            propagators.append(("krylov", basis, Hs, c, None))
        sector_info.append((basis.spec.label(), basis.dim, float(np.vdot(c, c).real)))
    full_states = _stream_states(propagators, times, L, chunk)
    entropies = np.zeros(nt)
    obs_vals = {k: np.zeros(nt) for k in (observables or {})}
    krylov_amp = np.zeros(nt, dtype=complex)
    has_krylov = any(p[0] == "krylov" for p in propagators)
    for sl, block in full_states:
        entropies[sl] = _half_chain_entropies(block, L)
        norms2[sl] = np.sum(np.abs(block) ** 2, axis=0)
        if has_krylov:
            krylov_amp[sl] = psi.conj() @ block
        for name, ob in (observables or {}).items():
            if callable(ob):
                obs_vals[name][sl] = ob(block)
            else:
                obs_vals[name][sl] = np.real(np.einsum("i,ij->j", ob, np.abs(block) ** 2))
    if has_krylov:
        amp0 = krylov_amp
    return QuenchSeries(times, np.abs(amp0) ** 2, entropies, np.sqrt(norms2), energy, label,
                        sector_info, obs_vals)


def _stream_states(propagators, times, L, chunk):
    """Yield ``(slice, full-space states)`` for consecutive chunks of ``times``."""
    krylov_state = {}
    for start in range(0, len(times), chunk):
        sl = slice(start, min(start + chunk, len(times)))
        ts = times[sl]
        total = np.zeros((3**L, len(ts)), dtype=complex)
        for idx, (kind, basis, a, b, e) in enumerate(propagators):
            if kind == "dense":
                coords = a @ (b[:, None] * np.exp(-1j * np.outer(e, ts)))
            else:
                coords = _krylov_chunk(a, b, ts, krylov_state, idx)
            total[basis.parent_codes] += basis.lift_parent(coords)
        yield sl, total


def _krylov_chunk(H, c0, ts, cache, key):
    """Advance the Krylov state through ``ts`` in steps no longer than ``KRYLOV_STEP``."""
    t_prev, v = cache.get(key, (0.0, np.asarray(c0, dtype=complex)))
    out = np.zeros((len(c0), len(ts)), dtype=complex)
    for j, t in enumerate(ts):
        dt = t - t_prev
        nsteps = max(1, int(np.ceil(abs(dt) / KRYLOV_STEP)))
        for _ in range(nsteps):
            v = expm_multiply(-1j * (dt / nsteps) * H, v)
        t_prev = t
        out[:, j] = v
    cache[key] = (t_prev, v)
    return out


# --- analytic comparisons ------------------------------------------------------------

def analytic_return(L: int, h: float, t):
    """Thermodynamic-limit return probability ``cos(h t)^(2L)``."""
    return np.cos(h * np.asarray(t, dtype=float)) ** (2 * L)


def exact_scar_return(L: int, h: float, t):
    """Finite-``L`` return probability of the normalized MPS state.

    With ``d = 2 (-1)^(L/2) / 2^L`` the middle-rung anomaly, the overlap is
    ``(cos(ht)^L + d) / (1 + d)``.
    """
    d = 2.0 * (-1) ** (L // 2) / 2.0**L
    amp = (np.cos(h * np.asarray(t, dtype=float)) ** L + d) / (1 + d)
    return amp**2


def return_envelope(L: int) -> float:
    """Bound on ``|P(t) - cos(ht)^(2L)|`` for the finite-``L`` form above.

    With ``c = cos(ht)^L`` the difference is ``d (2c(1-c) + d(1-c^2)) / (1+d)^2``,
    so it never exceeds ``|d| (1/2 + |d|) / (1 - |d|)^2``, about ``4^(-L/2)``.
    """
    d = 2.0 / 2.0**L
    return d * (0.5 + d) / (1 - d) ** 2


def fit_envelope(Ls: Sequence[int], deviations: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit ``log dev = log C - a L log 2``; returns ``(C, a)``."""
    Ls = np.asarray(Ls, dtype=float)
    y = np.log(np.asarray(deviations, dtype=float))
    A = np.vstack([np.ones_like(Ls), -Ls * np.log(2.0)]).T
    (logC, a), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(np.exp(logC)), float(a)


def rotation_shortcut(psi: np.ndarray, h: float, t: float) -> np.ndarray:
    """``prod_i exp(-i h t S^z_i)`` applied to a full-space vector."""
    psi = np.asarray(psi)
    L = int(round(np.log(len(psi)) / np.log(3)))
    M = codes_to_digits(np.arange(3**L), L).sum(axis=1).astype(float) - L
    return np.exp(-1j * h * t * M) * psi


def evolve_state(psi: np.ndarray, spec: HamiltonianSpec, t: float) -> np.ndarray:
    """Single full-space state at time ``t`` (dense sector diagonalization)."""
    psi = np.asarray(psi, dtype=complex)
    out = np.zeros_like(psi)
    for basis, c in sector_decomposition(psi, spec.L):
        res = diagonalize(build_hamiltonian(spec, basis), want_vectors=True)
        w = res.vectors.conj().T @ c
        out += basis.lift(res.vectors @ (np.exp(-1j * res.energies * t) * w))
    return out


def tower_span_residual(psi_t: np.ndarray, tower_states: Sequence[np.ndarray]) -> float:
    """Norm of the component of ``psi_t`` outside the span of the tower states."""
    Q = np.array(tower_states).T
    coef = Q.conj().T @ psi_t
    return float(np.linalg.norm(psi_t - Q @ coef))


def site_expectation(L: int, site: int, op: np.ndarray):
    """Callable giving ``<O_site>`` for a block of full-space states (0-based ``site``)."""
    if not 0 <= site < L:
        raise SizeError(f"site {site} outside the chain")

    def f(block: np.ndarray) -> np.ndarray:
        t = block.reshape(3**site, 3, 3 ** (L - site - 1), -1)
        return np.real(np.einsum("aibt,ij,ajbt->t", t.conj(), op, t))

    return f


def pair_expectation(L: int, site: int, op: np.ndarray):
    """Callable giving ``<O_site O_{site+1}>`` for a block of full-space states (0-based ``site``)."""
    if not 0 <= site < L - 1:
        raise SizeError(f"pair starting at {site} outside the open range of the chain")

    def f(block: np.ndarray) -> np.ndarray:
        t = block.reshape(3**site, 3, 3, 3 ** (L - site - 2), -1)
        return np.real(np.einsum("aijbt,ik,jl,aklbt->t", t.conj(), op, op, t))

    return f


def late_time_summary(series: QuenchSeries, t_from: float) -> dict:
    mask = series.times >= t_from
    return {"mean_return": float(series.return_prob[mask].mean()),
            "mean_entropy": float(series.half_chain_entropy[mask].mean()),
            "occupied_dimension": series.occupied_dimension}
