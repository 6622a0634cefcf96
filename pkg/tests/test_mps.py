from fractions import Fraction

import numpy as np
import pytest

from spin1scars import mps
from spin1scars.hamiltonian import SX, SY, SZ, HamiltonianSpec, build_hamiltonian
from spin1scars.hilbert import SizeError, build_full_basis, codes_to_digits
from spin1scars.spectral import entanglement_spectrum

EVEN_L = [4, 6, 8, 10, 12]


@pytest.fixture(scope="module")
def states():
    return {L: mps.build_mps(L) for L in EVEN_L}


def test_tensors_and_factorization():
    A, B = mps.mps_tensors()
    s2 = np.sqrt(2)
    assert np.allclose(A[0], np.diag([1, 0]) / s2)
    assert np.allclose(A[1], [[0, 1], [1, 0]] / s2)
    assert np.allclose(A[2], np.diag([0, 1]) / s2)
    assert np.allclose(B, np.einsum("ab,mbc->mac", np.diag([1, -1]), A))
    Af, Bf = mps.factored_mps_tensors()
    assert np.allclose(A, Af) and np.allclose(B, Bf)


def test_transfer_matrices(states):
    to = mps.transfer_objects(states[8])
    h = 0.5
    assert np.allclose(to.T_A, [[h, 0, 0, h], [0, 0, h, 0], [0, h, 0, 0], [h, 0, 0, h]], atol=1e-15)
    assert np.allclose(to.T_B, [[h, 0, 0, h], [0, 0, -h, 0], [0, -h, 0, 0], [h, 0, 0, h]], atol=1e-15)
    assert np.allclose(to.T, [[h, 0, 0, h], [0, -0.25, 0, 0], [0, 0, -0.25, 0], [h, 0, 0, h]], atol=1e-15)
    assert np.allclose(to.T, to.T_BA, atol=1e-15)
    assert np.allclose(np.sort(to.eigenvalues), [-0.25, -0.25, 0, 1], atol=1e-14)
    assert np.allclose(to.left, np.array([1, 0, 0, 1]) / np.sqrt(2), atol=1e-14)


@pytest.mark.parametrize("L", EVEN_L)
def test_norm(states, L):
    exact = mps.norm_squared_exact(L)
    assert mps.norm_squared(states[L]) == pytest.approx(float(exact), abs=1e-12)
    assert mps.norm_from_tower(L) == exact
    v = mps.to_statevector(states[L])
    assert np.vdot(v, v).real == pytest.approx(float(exact), abs=1e-12)


def test_norm_examples():
    assert mps.norm_squared_exact(4) == Fraction(9, 8)
    assert mps.norm_squared_exact(6) == Fraction(31, 32)


@pytest.mark.parametrize("L", EVEN_L)
def test_energy_vanishes(states, L):
    for h in (0.0, 1.3):
        assert abs(mps.expect_energy(states[L], HamiltonianSpec(L, h=h))) < 1e-12


@pytest.mark.parametrize("L", [6, 8, 10, 12])
def test_h_squared_classes(states, L):
    res = mps.expect_h_squared(states[L], HamiltonianSpec(L))
    assert abs(res.value) < 1e-12
    cf = res.xy_closed_form
    for name, val in res.xy_classes.as_dict().items():
        assert val == pytest.approx(float(getattr(cf, name)), abs=1e-12)
    assert float(cf.total) == 0
    placed = mps.bond_classes_by_placement(states[L], mps.H_XY_BOND, mps.H_XY_BOND)
    for name, val in placed.as_dict().items():
        assert val == pytest.approx(getattr(res.xy_classes, name), abs=1e-12)


def test_class_examples_l8():
    cf = mps.xy_classes_closed_form(8)
    assert cf.diagonal == Fraction(65, 64)
    assert cf.overlap_right == Fraction(-67, 128)


def test_h_squared_needs_l6():
    with pytest.raises(SizeError):
        mps.expect_h_squared(mps.build_mps(4), HamiltonianSpec(4))


def test_h_squared_with_field_matches_statevector():
    L = 8
    spec = HamiltonianSpec(L, h=0.9)
    v = mps.to_statevector(mps.build_mps(L))
    H = build_hamiltonian(spec, build_full_basis(L)).tosparse()
    direct = np.linalg.norm(H @ v) ** 2 / np.vdot(v, v).real
    assert mps.expect_h_squared(mps.build_mps(L), spec).value == pytest.approx(direct, abs=1e-11)


def _oracle_corr(v, L, op, i, j):
    full = v.reshape([3] * L)
    w = np.tensordot(op, full, axes=([1], [j - 1]))
    w = np.moveaxis(w, 0, j - 1)
    w = np.tensordot(op, w, axes=([1], [i - 1]))
    w = np.moveaxis(w, 0, i - 1)
    return np.vdot(full.reshape(-1), w.reshape(-1)).real


@pytest.mark.parametrize("L", [6, 8])
def test_correlations_against_oracle(states, L):
    v = mps.to_statevector(states[L])
    ops = {"x": SX, "y": SY, "z": SZ}
    for axis, op in ops.items():
        for i in (1, 2):
            for r in range(L):
                c = mps.correlation(states[L], axis, i, r)
                assert c.contraction == pytest.approx(c.closed_form, abs=1e-12)
                j = (i - 1 + r) % L + 1
                ref = np.vdot(v, _apply_two(v, L, op, i, j)).real
                assert c.contraction == pytest.approx(ref, abs=1e-12)


def _apply_two(v, L, op, i, j):
    t = v.reshape([3] * L)
    for s in (j, i):
        t = np.moveaxis(np.tensordot(op, t, axes=([1], [s - 1])), 0, s - 1)
    return t.reshape(-1)


def test_correlation_examples():
    s = mps.build_mps(50)
    assert mps.correlation(s, "z", 1, 1).closed_form == 0.25
    assert mps.correlation(s, "z", 1, 0).closed_form == 0.5
    assert mps.correlation(s, "z", 1, 2).closed_form == 0.0
    assert mps.correlation(s, "x", 1, 2).closed_form == pytest.approx(-(0.25 - 2.0**-48))
    assert mps.correlation(s, "x", 1, 2).contraction == pytest.approx(-0.25, abs=1e-12)


def test_clustering_bound():
    L = 20
    for r in range(L):
        for axis in "xy":
            assert abs(mps.correlation_closed_form(L, axis, 1, r)) <= 2.0**-r + 2.0 ** -(L - r) + 0.75 * (r == 0)


def test_one_point_functions_vanish(states):
    for axis in "xyz":
        assert abs(mps.single_site_expectation(states[8], axis, 3)) < 1e-14


def test_invalid_correlation_args(states):
    with pytest.raises(ValueError):
        mps.correlation(states[8], "w", 1, 1)
    with pytest.raises(ValueError):
        mps.correlation(states[8], "x", 1, 8)


def test_injectivity():
    assert mps.injectivity_rank() == 4


@pytest.mark.parametrize("l", range(1, 9))
def test_rdm_tdl(l):
    res = mps.rdm_eigenvalues(l)
    assert np.allclose(res.numerical, res.closed_form, atol=1e-12)
    assert sum(mps.rdm_closed_form(l)) == 1
    F = mps.boundary_map(l)
    for sigma, lam in zip(res.sigmas, res.closed_form):
        v = sigma.reshape(-1)
        assert np.allclose(F @ v, lam * v, atol=1e-14)
    d = 2.0 ** (1 - l)
    assert np.allclose(res.overlap, np.diag([0.5, 0.5, 1 + d, 1 - d]), atol=1e-14)


def test_rdm_examples():
    assert np.allclose(mps.rdm_eigenvalues(2).closed_form, [0.25, 0.25, 0.375, 0.125])
    assert np.allclose(mps.rdm_eigenvalues(1).closed_form, [0.25, 0.25, 0.5, 0])
    assert np.allclose(np.sort(np.linalg.eigvalsh(mps.single_site_rdm())), [0.25, 0.25, 0.5])
    assert mps.tdl_entropy(1) == pytest.approx(0.5 * np.log(8))


@pytest.mark.parametrize("L", [8, 10])
def test_finite_schmidt_three_ways(states, L):
    v = mps.to_statevector(states[L])
    v = v / np.linalg.norm(v)
    for l in range(1, L):
        fold = mps.finite_rdm_spectrum(L, l)
        gram = mps.finite_rdm_spectrum_gram(L, l)
        direct = np.pad(entanglement_spectrum(v, L, l), (0, 4))[:4]
        assert np.allclose(fold, direct, atol=1e-12)
        assert np.allclose(np.sort(gram), np.sort(direct), atol=1e-12)


def test_folded_chain_shapes():
    odd = mps.folded_chain(8, "odd")
    even = mps.folded_chain(8, "even")
    assert odd[0].shape == (1, 3, 4) and odd[-1].shape == (4, 3, 1)
    assert even[0].shape == (1, 9, 4) and even[-1].shape == (4, 9, 1)


def test_finite_size_corrections_shrink_with_l():
    L = 24
    dev = [np.abs(np.sort(mps.finite_rdm_spectrum(L, l))
                  - np.sort([float(x) for x in mps.rdm_closed_form(l)])).max() for l in range(2, 12)]
    # deviations grow like 2^(l - L), so doubling per step
    ratios = np.array(dev[1:]) / np.array(dev[:-1])
    assert np.allclose(ratios, 2.0, rtol=0.05)


def test_ee_profile_saturation():
    prof = mps.ee_profile(34)
    l, s_fin, s_tdl = prof[16]
    assert l == 17
    assert s_fin == pytest.approx(np.log(4), abs=1e-6)
    assert prof[0][2] == pytest.approx(0.5 * np.log(8))
    with pytest.raises(ValueError):
        mps.ee_profile(8, [8])


def test_statevector_export(tmp_path):
    s = mps.build_mps(2)
    v = mps.to_statevector(s)
    A, B = mps.mps_tensors()
    for m1 in range(3):
        for m2 in range(3):
            assert v[3 * m1 + m2] == pytest.approx(np.trace(A[m1] @ B[m2]))
    assert v[4] == 0 and v[6] == 0  # |0,0> and |1,-1>
    big = mps.to_statevector(mps.build_mps(8))
    mps.write_vector(tmp_path / "v.txt", big)
    assert np.array_equal(mps.read_vector(tmp_path / "v.txt"), big.astype(complex))
    with pytest.raises(SizeError):
        mps.to_statevector(mps.build_mps(16))


def test_statevector_spans_all_magnetizations():
    L = 8
    v = mps.to_statevector(mps.build_mps(L))
    nz = np.nonzero(np.abs(v) > 1e-14)[0]
    M = codes_to_digits(nz, L).sum(axis=1) - L
    assert set(M.tolist()) == set(range(-L, L + 1, 2))
