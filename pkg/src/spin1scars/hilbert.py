"""Product and symmetry-adapted bases of the periodic spin-1 chain.

Product states are encoded as base-3 integers. Site 1 is the most significant
digit and the digit of a site is ``m + 1`` with ``m`` in {-1, 0, 1}, so that a
full-space vector reshaped in C order to ``(3**l, 3**(L - l))`` splits the
chain into sites ``1..l`` and ``l+1..L``.

Symmetry sectors are built from the group generated by translation ``T``
(site ``i -> i + 1``), reflection ``R`` (site ``i -> L + 1 - i``) and spin
inversion ``I`` (``m -> -m``). A sector basis vector is

    |r~> = sqrt(|Stab(r)| / |G|) * sum_g conj(chi(g)) g|r>    (sum over distinct images)

with ``chi`` the requested eigenvalues: ``T -> exp(2 pi i k / L)``,
``R -> reflection``, ``I -> inversion``. Representatives are the minimal
integer code in each orbit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

MAX_SITES = 14
MEMORY_CAP_BYTES = 4_000_000_000


class SizeError(ValueError):
    """Requested object exceeds a size or memory cap."""


class SpecError(ValueError):
    """Inconsistent sector or model specification."""


def check_length(L: int, cap: int = MAX_SITES) -> None:
    if L % 2 or L < 2:
        raise SizeError(f"chain length must be even and >= 2, got L={L}")
    if L > cap:
        raise SizeError(f"L={L} exceeds the cap of {cap} sites")


def check_memory(nbytes: float, what: str, cap: float = MEMORY_CAP_BYTES) -> None:
    if nbytes > cap:
        raise SizeError(f"{what} needs {nbytes / 1e9:.2f} GB, cap is {cap / 1e9:.2f} GB")


def magnetization(config: Sequence[int]) -> int:
    """Total magnetization of a product configuration given as local levels."""
    return int(sum(int(m) for m in config))


@lru_cache(maxsize=None)
def powers_of_three(L: int) -> np.ndarray:
    return 3 ** np.arange(L - 1, -1, -1, dtype=np.int64)


def config_to_index(config: Sequence[int]) -> int:
    digits = np.asarray(config, dtype=np.int64) + 1
    if digits.min(initial=0) < 0 or digits.max(initial=0) > 2:
        raise ValueError("local levels must be in {-1, 0, 1}")
    return int(digits @ powers_of_three(len(digits)))


def index_to_config(index: int, L: int) -> tuple[int, ...]:
    digits = codes_to_digits(np.array([index], dtype=np.int64), L)[0]
    return tuple(int(d) - 1 for d in digits)


def codes_to_digits(codes: np.ndarray, L: int) -> np.ndarray:
    """Digits (``m + 1``) of integer codes, shape ``(len(codes), L)``."""
    codes = np.asarray(codes, dtype=np.int64)
    return ((codes[:, None] // powers_of_three(L)[None, :]) % 3).astype(np.int8)


def digits_to_codes(digits: np.ndarray) -> np.ndarray:
    return digits.astype(np.int64) @ powers_of_three(digits.shape[1])


def magnetization_codes(L: int, M: Optional[int] = None) -> np.ndarray:
    """Sorted codes of all product states, optionally restricted to magnetization ``M``."""
    # per-site digit sums accumulated without materializing the full digit table
    codes = np.arange(3**L, dtype=np.int64)
    if M is None:
        return codes
    total = np.zeros(3**L, dtype=np.int16)
    rest = codes.copy()
    for _ in range(L):
        total += (rest % 3).astype(np.int16)
        rest //= 3
    return codes[total == M + L]


@dataclass(frozen=True)
class SectorSpec:
    """Quantum numbers of a sector; ``None`` means the symmetry is not resolved.

    ``k`` is the integer momentum index (``T`` eigenvalue ``exp(2 pi i k / L)``).
    Reflection is only resolvable for ``k`` in ``{0, L/2}`` (or with ``k``
    unresolved is rejected, since reflection alone is not combined with a
    translation-free basis here). Inversion flips ``M`` and is only resolvable
    at ``M = 0``.
    """

    L: int
    M: Optional[int] = None
    k: Optional[int] = None
    reflection: Optional[int] = None
    inversion: Optional[int] = None

    def __post_init__(self):
        L = self.L
        if L % 2 or L < 2:
            raise SpecError(f"L must be even and >= 2, got {L}")
        if self.M is not None and not -L <= self.M <= L:
            raise SpecError(f"M={self.M} outside [-L, L]")
        if self.k is not None and not 0 <= self.k < L:
            raise SpecError(f"k={self.k} outside [0, L)")
        for name in ("reflection", "inversion"):
            val = getattr(self, name)
            if val is not None and val not in (1, -1):
                raise SpecError(f"{name} eigenvalue must be +1 or -1, got {val}")
        if self.reflection is not None:
            if self.k is None:
                raise SpecError("reflection requires a resolved momentum k in {0, L/2}")
            if self.k not in (0, L // 2):
                raise SpecError(f"reflection does not commute with momentum k={self.k}")
        if self.inversion is not None:
            if self.M is None or self.M != 0:
                raise SpecError("spin inversion flips M and is only resolvable at M = 0")
            if self.k is None:
                raise SpecError("inversion requires a resolved momentum k")

    @property
    def translation_resolved(self) -> bool:
        return self.k is not None

    def label(self) -> str:
        parts = [f"L={self.L}"]
        for name, val in (("M", self.M), ("k", self.k), ("R", self.reflection), ("I", self.inversion)):
            if val is not None:
                parts.append(f"{name}={val:+d}" if name in ("R", "I") else f"{name}={val}")
        return ",".join(parts)


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Orthonormal basis of a symmetry sector.

    ``parent_codes`` are the sorted product-state codes of the magnetization
    block (or of the whole space) underlying the sector, and ``lift_matrix``
    has shape ``(len(parent_codes), dim)`` with orthonormal columns expressing
    each sector basis vector in that product basis.
    """

    spec: SectorSpec
    parent_codes: np.ndarray
    representatives: np.ndarray
    stabilizer_sizes: np.ndarray
    lift_matrix: sp.csr_matrix
    group_order: int = 1
    _rep_index: dict = field(default_factory=dict, repr=False)

    @property
    def L(self) -> int:
        return self.spec.L

    @property
    def dim(self) -> int:
        return len(self.representatives)

    @property
    def is_product(self) -> bool:
        """True when the basis vectors are the product states themselves."""
        return not self.spec.translation_resolved

    @property
    def norms(self) -> np.ndarray:
        """Normalization ``sqrt(|G| * |Stab|)`` of ``sum_g conj(chi(g)) g|r>``."""
        return np.sqrt(self.group_order * self.stabilizer_sizes.astype(float))

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.lift_matrix.data)

    def parent_index(self, codes: np.ndarray) -> np.ndarray:
        """Positions of product-state codes in ``parent_codes`` (-1 when absent)."""
        codes = np.asarray(codes, dtype=np.int64)
        pos = np.searchsorted(self.parent_codes, codes)
        pos = np.clip(pos, 0, len(self.parent_codes) - 1)
        found = self.parent_codes[pos] == codes
        return np.where(found, pos, -1)

    def lift(self, vec: np.ndarray) -> np.ndarray:
        """Sector vector(s) to full ``3**L`` space vector(s)."""
        vec = np.asarray(vec)
        parent = self.lift_matrix @ vec
        shape = (3**self.L,) + parent.shape[1:]
        dtype = np.result_type(parent.dtype, np.float64)
        out = np.zeros(shape, dtype=dtype)
        out[self.parent_codes] = parent
        return out

    def project(self, full: np.ndarray) -> np.ndarray:
        """Full-space vector(s) to sector coordinates (orthogonal projection)."""
        full = np.asarray(full)
        parent = full[self.parent_codes]
        return self.lift_matrix.conj().T @ parent

    def lift_parent(self, vec: np.ndarray) -> np.ndarray:
        """Sector vector(s) to the magnetization-block product basis."""
        return self.lift_matrix @ np.asarray(vec)


def build_full_basis(L: int, cap: int = MAX_SITES) -> SectorBasis:
    """Unresolved product basis of all ``3**L`` states."""
    check_length(L, cap)
    return build_sector_basis(SectorSpec(L), cap=cap)


_CACHE: dict = {}


def build_sector_basis(spec: SectorSpec, cap: int = MAX_SITES, cache: bool = True) -> SectorBasis:
    """Build (and cache) the basis of a sector; an empty sector has ``dim == 0``."""
    check_length(spec.L, cap)
    key = (spec, cap)
    if cache and key in _CACHE:
        return _CACHE[key]
    L = spec.L
    check_memory(3**L * (8 + 2), "product-state enumeration")
    codes = magnetization_codes(L, spec.M)
    if not spec.translation_resolved:
        n = len(codes)
        lift = sp.identity(n, dtype=float, format="csr")
        basis = SectorBasis(spec, codes, codes.copy(), np.ones(n, dtype=np.int64), lift, 1)
    else:
        basis = _symmetric_basis(spec, codes)
    if cache:
        _CACHE[key] = basis
    return basis


def clear_cache() -> None:
    _CACHE.clear()


def _group_elements(spec: SectorSpec):
    """Yield ``(transform, character)``; ``transform`` acts on digit arrays."""
    L = spec.L
    omega = np.exp(2j * np.pi * spec.k / L)
    refl = [0, 1] if spec.reflection is not None else [0]
    inv = [0, 1] if spec.inversion is not None else [0]
    for c in inv:
        for b in refl:
            for j in range(L):
                chi = omega**j
                if b:
                    chi *= spec.reflection
                if c:
                    chi *= spec.inversion

                def transform(d, j=j, b=b, c=c):
                    out = np.roll(d, j, axis=1)
                    if b:
                        out = out[:, ::-1]
                    if c:
                        out = 2 - out
                    return out

                yield transform, complex(chi)


def _symmetric_basis(spec: SectorSpec, codes: np.ndarray) -> SectorBasis:
    n = len(codes)
    elements = list(_group_elements(spec))
    order = len(elements)
    check_memory(n * (spec.L + 40), "sector construction")
    digits = codes_to_digits(codes, spec.L)
    rep = codes.copy()
    rep_char = np.ones(n, dtype=complex)
    stab = np.zeros(n, dtype=np.int64)
    stab_ok = np.ones(n, dtype=bool)
    for transform, chi in elements:
        image = digits_to_codes(transform(digits))
        smaller = image < rep
        rep[smaller] = image[smaller]
        rep_char[smaller] = chi
        fixed = image == codes
        stab += fixed
        stab_ok &= ~fixed | np.isclose(chi, 1.0)
    del digits
    is_rep = rep == codes
    valid_rep = is_rep & stab_ok
    reps = codes[valid_rep]
    rep_stab = stab[valid_rep]
    # parent states whose orbit representative survives the projection
    col = np.searchsorted(reps, rep)
    col = np.clip(col, 0, max(len(reps) - 1, 0))
    member = (len(reps) > 0) & (reps[col] == rep) if len(reps) else np.zeros(n, dtype=bool)
    rows = np.nonzero(member)[0]
    cols = col[member]
    # amplitude of |r~> on c = g_c r is conj(chi(g_c)); rep_char holds chi(g*) with g* c = r
    vals = rep_char[member] * np.sqrt(rep_stab[cols] / order)
    if np.allclose(vals.imag, 0.0):
        vals = vals.real.copy()
    lift = sp.csr_matrix((vals, (rows, cols)), shape=(n, len(reps)))
    return SectorBasis(spec, codes, reps, rep_stab, lift, order)


def full_space_operator(L: int, kind: str) -> sp.csr_matrix:
    """Permutation matrix of translation, reflection or inversion on the full space."""
    check_length(L)
    codes = np.arange(3**L, dtype=np.int64)
    digits = codes_to_digits(codes, L)
    if kind == "translation":
        image = np.roll(digits, 1, axis=1)
    elif kind == "reflection":
        image = digits[:, ::-1]
    elif kind == "inversion":
        image = 2 - digits
    else:
        raise ValueError(f"unknown symmetry {kind!r}")
    target = digits_to_codes(image)
    return sp.csr_matrix((np.ones(3**L), (target, codes)), shape=(3**L, 3**L))


def sector_dimensions(L: int, resolve_reflection: bool = False) -> dict:
    """Dimensions of all (M, k) sectors, optionally split by reflection at k in {0, L/2}."""
    dims = {}
    for M in range(-L, L + 1):
        for k in range(L):
            if resolve_reflection and k in (0, L // 2):
                for R in (1, -1):
                    spec = SectorSpec(L, M=M, k=k, reflection=R)
                    dims[(M, k, R)] = build_sector_basis(spec, cache=False).dim
            else:
                dims[(M, k)] = build_sector_basis(SectorSpec(L, M=M, k=k), cache=False).dim
    return dims
