from math import comb

import numpy as np
import pytest

from spin1scars import mps, scars
from spin1scars.hamiltonian import HamiltonianSpec, build_hamiltonian
from spin1scars.hilbert import SizeError, build_full_basis, codes_to_digits


def test_phi_x_two_sites():
    v = scars.build_phi_x(2, explicit=True).explicit
    nz = np.nonzero(v)[0]
    assert len(nz) == 4
    assert np.allclose(np.abs(v[nz]), 0.5)


@pytest.mark.parametrize("L", [2, 4, 6, 8, 10])
def test_projector_reproduces_mps(L):
    proj = scars.apply_projector(scars.build_phi_x(L))
    ref = mps.to_statevector(mps.build_mps(L))
    # the two constructions agree up to the global sign (-1)^(L/2)
    assert np.abs(ref - (-1) ** (L // 2) * proj).max() < 1e-12


def test_explicit_and_pseudospin_modes_agree():
    L = 6
    a = scars.apply_projector(scars.build_phi_x(L, explicit=True))
    b = scars.apply_projector(scars.build_phi_x(L))
    assert np.array_equal(a, b)


def test_local_map():
    L = 2
    for bits, digit in [((0, 0), 2), ((1, 1), 0), ((0, 1), 1), ((1, 0), 1)]:
        code = bits[0] * 8 + bits[1] * 4  # virtual sites 1, 2 form physical site 1
        assert scars.virtual_to_physical(L, np.array([code]))[0, 0] == digit


def test_magnetization_intertwining():
    L = 3 * 2
    codes = np.arange(4**L)
    b = ((codes[:, None] >> np.arange(2 * L)[None, :]) & 1)
    virtual_sz = ((1 - b) - b).sum(axis=1) / 2
    phys = scars.virtual_to_physical(L, codes).astype(int).sum(axis=1) - L
    assert np.array_equal(phys, virtual_sz)


def test_middle_configurations_interfere():
    for L, expected in [(4, 2), (6, 0), (8, 2)]:
        configs = [int("".join(str((i // 1 + s) % 2) for i in range(L)), 2) for s in (0, 1)]
        codes = scars.pseudospin_to_virtual(L, np.array(configs))
        phys = scars.virtual_to_physical(L, codes)
        assert np.all(phys == 1)
        state = np.zeros(2**L)
        state[configs] = (-1.0) ** np.array([sum(i + 1 for i in range(L) if ((c >> (L - 1 - i)) & 1) == 0)
                                             for c in configs])
        v = scars.apply_projector(scars.VirtualState(L, pseudospin=state))
        assert abs(v[np.nonzero(v)[0]]).sum() == pytest.approx(expected)


def test_su2_algebra():
    L = 4
    Jp, Jm, Jz = scars.su2_generators(L)
    assert abs(Jp @ Jm - Jm @ Jp - 2 * Jz).max() < 1e-12
    assert abs(Jz @ Jp - Jp @ Jz - Jp).max() < 1e-12
    assert abs(Jz @ Jm - Jm @ Jz + Jm).max() < 1e-12
    phi = scars.build_phi_x(L, explicit=True).explicit
    Jx = (Jp + Jm) / 2
    assert np.allclose(Jx @ phi, L / 2 * phi)
    C = scars.casimir(Jp, Jm, Jz)
    assert np.allclose(C @ phi, L / 2 * (L / 2 + 1) * phi)
    # a single J = L/2 multiplet in the whole virtual space
    ev = np.linalg.eigvalsh(C.toarray())
    assert np.sum(np.abs(ev - L / 2 * (L / 2 + 1)) < 1e-9) == L + 1
    with pytest.raises(SizeError):
        scars.su2_generators(10)


def test_pair_irreps():
    content = scars.pair_irrep_content()
    # basis up-up, up-dn, dn-up, dn-dn: Casimir 3/4 on the aligned pair, 0 on the rest
    assert np.allclose(content["casimir"], [0.75, 0, 0, 0.75])


@pytest.mark.parametrize("L", [4, 6, 8])
@pytest.mark.parametrize("eps", [0.0, 0.2])
@pytest.mark.parametrize("h", [0.0, 1.0, 2.7])
def test_tower_eigenstates(L, eps, h):
    tower = scars.build_tower(L, h)
    H = build_hamiltonian(HamiltonianSpec(L, epsilon=eps, h=h), build_full_basis(L)).tosparse()
    for n, v in enumerate(tower.states):
        assert np.linalg.norm(H @ v - tower.energies[n] * v) < 1e-10


def test_tower_bookkeeping():
    L = 8
    tower = scars.build_tower(L, 1.0)
    n = np.arange(L + 1)
    assert np.array_equal(tower.magnetizations, 2 * n - L)
    assert np.allclose(tower.pseudospin_m, n - L / 2)
    assert np.allclose(tower.energies, 2 * n - L)
    G = np.array(tower.states) @ np.array(tower.states).T
    assert np.allclose(G, np.eye(L + 1), atol=1e-12)
    lowest = np.zeros(3**L)
    lowest[0] = 1
    assert np.allclose(tower.states[0], lowest)
    anomaly = np.ones(L + 1)
    anomaly[L // 2] = scars.middle_anomaly(L)
    assert np.allclose(tower.norms, anomaly)
    assert scars.middle_anomaly(8) == pytest.approx(np.sqrt((comb(8, 4) + 2) / comb(8, 4)))
    assert scars.middle_anomaly(6) == pytest.approx(np.sqrt((comb(6, 3) - 2) / comb(6, 3)))


def test_tower_decomposes_psi_x():
    L = 8
    tower = scars.build_tower(L)
    psi = mps.to_statevector(mps.build_mps(L))
    nrm2 = float(mps.norm_squared_exact(L))
    # sum_n c_n P|phi_n> rebuilds the projected Bell-pair state
    rebuilt = sum(c * nrm * v for c, nrm, v in zip(tower.coefficients, tower.norms, tower.states))
    assert np.abs(rebuilt - (-1) ** (L // 2) * psi).max() < 1e-12
    ov = np.array([abs(np.vdot(v, psi)) for v in tower.states]) / np.sqrt(nrm2)
    assert np.allclose(ov, tower.coefficients * tower.norms / np.sqrt(nrm2), atol=1e-12)


def test_tower_quantum_numbers():
    L = 8
    tower = scars.build_tower(L)
    T = np.roll(np.arange(L), 1)
    for n, v in enumerate(tower.states):
        t = v.reshape([3] * L).transpose(np.argsort(T)).reshape(-1)
        assert np.allclose(t, (-1) ** n * v)
        spec, w = scars.locate_sector(v, L, 2 * n - L, scars.tower_momentum(L, n))
        assert w == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("n", range(9))
def test_bond_bimagnons(n):
    L = 8
    tower = scars.build_tower(L, 1.0)
    bb = scars.bond_bimagnon(L, n)
    assert abs(np.vdot(bb, tower.states[n])) == pytest.approx(1.0, abs=1e-10)
    H = build_hamiltonian(HamiltonianSpec(L, h=1.0), build_full_basis(L)).tosparse()
    assert np.linalg.norm(H @ bb - (2 * n - L) * bb) < 1e-10


def test_bond_bimagnon_edge_cases():
    v = scars.bond_bimagnon(4, 0)
    assert v[0] == 1
    with pytest.raises(ValueError):
        scars.bond_bimagnon(4, 5)


def test_dicke_entropy():
    L = 12
    for l in range(L + 1):
        assert scars.dicke_entropy(L, 0, l) == 0
    val = scars.dicke_entropy(L, L // 2, L // 2)
    assert val == pytest.approx(scars.dicke_entropy_bruteforce(L, L // 2, L // 2), abs=1e-12)
    assert val <= np.log(L / 2 + 1)
    with pytest.raises(ValueError):
        scars.dicke_entropy(L, 3, L + 1)


def test_physical_entropy_bound():
    L = 8
    tower = scars.build_tower(L)
    for n, v in enumerate(tower.states):
        for l in range(1, L):
            assert scars.physical_entropy(v, L, l) <= scars.dicke_entropy(L, n, l) + 2 * np.log(2) + 1e-12
