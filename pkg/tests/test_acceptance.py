"""Acceptance suite: one PASS/FAIL line per criterion.

Runs at the full target sizes (tens of minutes on one core). Setting
``SPIN1SCARS_FAST=1`` replaces the L=14 level-statistics sector with the
scaled L=12 fallback. Run directly with ``python tests/test_acceptance.py``
or through pytest (``pytest tests/test_acceptance.py -s``).
"""

import os
import sys
from math import log

import numpy as np
import pytest
import scipy.sparse.linalg as sla

from spin1scars import dynamics, mps, scars, spectral
from spin1scars.hamiltonian import (SX, SY, SZ, HamiltonianSpec, build_hamiltonian,
                                    build_twisted_xy)
from spin1scars.hilbert import SectorSpec, build_full_basis, build_sector_basis

FAST = os.environ.get("SPIN1SCARS_FAST", "") not in ("", "0")


def _report(request, n: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}"
    capman = request.config.pluginmanager.getplugin("capturemanager") if request else None
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)
    assert ok, line


def _apply_ops(v, L, placements):
    t = v.reshape([3] * L)
    for site, op in placements:
        t = np.moveaxis(np.tensordot(op, t, axes=([1], [site - 1])), 0, site - 1)
    return t.reshape(-1)


def _rstats(L, M, eps):
    basis = build_sector_basis(SectorSpec(L, M, 0, 1))
    e = spectral.diagonalize(build_hamiltonian(HamiltonianSpec(L, epsilon=eps, h=0.0), basis)).energies
    st = spectral.r_statistics(e)
    return basis.dim, st.mean_r, spectral.l1_distance_to_goe(st)


def test_criterion_1_mps_identities(request):
    worst = {"norm": 0.0, "energy": 0.0, "h2": 0.0, "classes": 0.0}
    for L in (4, 6, 8, 10, 12):
        state = mps.build_mps(L)
        spec = HamiltonianSpec(L, epsilon=0.2, h=0.0)
        worst["norm"] = max(worst["norm"], abs(mps.norm_squared(state) - (1 + 2 * (-0.25) ** (L // 2))))
        worst["energy"] = max(worst["energy"], abs(mps.expect_energy(state, spec)))
        if L >= 6:
            res = mps.expect_h_squared(state, spec)
            worst["h2"] = max(worst["h2"], abs(res.value))
            got, ref = res.xy_classes.as_dict(), res.xy_closed_form.as_dict()
            worst["classes"] = max(worst["classes"], max(abs(got[k] - ref[k]) for k in ref))
        else:
            # the five-class decomposition needs disjoint bond windows, so L=4 uses the state vector
            v = mps.to_statevector(state)
            H = build_hamiltonian(spec, build_full_basis(L)).tosparse()
            worst["h2"] = max(worst["h2"], float(np.linalg.norm(H @ v) ** 2 / np.vdot(v, v).real))
    ok = all(x < 1e-12 for x in worst.values())
    _report(request, 1, ok, "L=4..12 " + ", ".join(f"{k} err {v:.1e}" for k, v in worst.items()) + " (tol 1e-12)")


def test_criterion_2_transfer_spectrum(request):
    t = mps.transfer_objects(mps.build_mps(8))
    ev_err = float(np.abs(np.sort(t.eigenvalues.real) - [-0.25, -0.25, 0.0, 1.0]).max())
    ev_err = max(ev_err, float(np.abs(t.eigenvalues.imag).max()))
    dom = np.array([1, 0, 0, 1]) / np.sqrt(2)
    vec_err = float(np.abs(t.left - dom).max())
    fix_err = float(np.abs(t.T @ dom - dom).max())
    ok = max(ev_err, vec_err, fix_err) < 1e-14
    _report(request, 2, ok, f"eigenvalue err {ev_err:.1e}, dominant vector err {max(vec_err, fix_err):.1e} (tol 1e-14)")


def test_criterion_3_oracle_equivalence(request):
    eq_err, h_err = 0.0, 0.0
    for L in (2, 4, 6, 8, 10):
        ref = mps.to_statevector(mps.build_mps(L))
        proj = scars.apply_projector(scars.build_phi_x(L))
        # identical up to the global sign (-1)^(L/2) fixed by the virtual-index order
        eq_err = max(eq_err, float(np.abs(ref - (-1) ** (L // 2) * proj).max()))
        H = build_hamiltonian(HamiltonianSpec(L, epsilon=0.2, h=0.0), build_full_basis(L)).tosparse()
        v = ref / np.linalg.norm(ref)
        h_err = max(h_err, float(np.linalg.norm(H @ v)))
    ok = eq_err < 1e-12 and h_err < 1e-10
    _report(request, 3, ok, f"L=2..10 entrywise err {eq_err:.1e} (tol 1e-12), max |H psi_x| {h_err:.1e} (tol 1e-10)")


def test_criterion_4_scar_tower(request):
    L = 8
    tower = scars.build_tower(L, h=1.0)
    H = build_hamiltonian(HamiltonianSpec(L, J=1.0, epsilon=0.2, h=1.0), build_full_basis(L)).tosparse()
    res = max(float(np.linalg.norm(H @ v - (2 * n - L) * v)) for n, v in enumerate(tower.states))
    ov = max(abs(abs(np.vdot(scars.bond_bimagnon(L, n), v)) - 1) for n, v in enumerate(tower.states))
    Jp, Jm, Jz = scars.su2_generators(4)
    comm = max(abs(Jp @ Jm - Jm @ Jp - 2 * Jz).max(), abs(Jz @ Jp - Jp @ Jz - Jp).max(),
               abs(Jz @ Jm - Jm @ Jz + Jm).max())
    ok = len(tower.states) == L + 1 and res < 1e-10 and ov < 1e-10 and comm < 1e-12
    _report(request, 4, ok, f"L=8 {len(tower.states)} states, residual {res:.1e}, bimagnon overlap err {ov:.1e}, "
                            f"su(2) L=4 err {comm:.1e}")


def test_criterion_5_level_statistics(request):
    if FAST:
        L, M, tol, want_dim = 12, -2, 0.03, None
    else:
        L, M, tol, want_dim = 14, -2, 0.02, 18204
    dim, r, l1 = _rstats(L, M, 0.2)
    ok = abs(r - 0.53) <= tol and (want_dim is None or dim == want_dim) and (FAST or l1 < 0.1)
    _report(request, 5, ok, f"L={L} M={M} k=0 R=+1 dim {dim}, <r> {r:.4f} (0.53 +- {tol}), L1 {l1:.3f} (< 0.1)")


def test_criterion_6_twisted_su2(request):
    L = 8
    worst = 0.0
    for M in range(-L, L + 1, 2):
        basis = build_sector_basis(SectorSpec(L, M))
        e_xy = spectral.diagonalize(build_hamiltonian(HamiltonianSpec(L, epsilon=0.0), basis)).energies
        Jw = 1.0 if M % 4 == 0 else -1.0
        for s in (1, -1):
            e_t = spectral.diagonalize(build_twisted_xy(L, [1.0] * (L - 1) + [Jw], s, M, basis)).energies
            worst = max(worst, float(np.abs(e_t - e_xy).max()))
    stats = {M: _rstats(14, M, 0.0) for M in (5, 3, 4, 2)}
    odd_ok = all(abs(stats[M][1] - 0.53) <= 0.04 for M in (3, 5))
    even_ok = all(abs(stats[M][1] - 0.40) <= 0.04 for M in (2, 4))
    ok = worst < 1e-10 and odd_ok and even_ok
    detail = ", ".join(f"M={M} <r> {stats[M][1]:.4f}" for M in sorted(stats))
    _report(request, 6, ok, f"L=8 even-M coincidence err {worst:.1e}; L=14 eps=0 {detail} "
                            f"(odd 0.53 +- 0.04, even 0.40 +- 0.04)")


def test_criterion_7_quench(request):
    L = 12
    h = 1.0
    spec = HamiltonianSpec(L, epsilon=0.2, h=h)
    times = dynamics.default_times()
    psix = dynamics.evolve(dynamics.psi_x_state(L), spec, times)
    ent_ptp = float(np.ptp(psix.half_chain_entropy))
    dev = float(np.abs(psix.return_prob - dynamics.analytic_return(L, h, times)).max())
    devs = []
    Ls = (6, 8, 10)
    for l_ in Ls:
        s = dynamics.evolve(dynamics.psi_x_state(l_), HamiltonianSpec(l_, epsilon=0.2, h=h), times)
        devs.append(float(np.abs(s.return_prob - dynamics.analytic_return(l_, h, times)).max()))
    C, a = dynamics.fit_envelope(Ls + (L,), devs + [dev])
    psix_ok = ent_ptp < 1e-8 and dev <= dynamics.return_envelope(L) * (1 + 1e-9) and abs(a - 1) < 0.1
    page = spectral.page_value(L)
    parts = [f"psi_x S ptp {ent_ptp:.1e}, |P - cos^2L| {dev:.1e} <= {dynamics.return_envelope(L):.1e}, "
             f"fit 2^(-{a:.3f} L)"]
    prod_ok = True
    for lab in ("zero", "z2"):
        s = dynamics.evolve(dynamics.INITIAL_STATES[lab](L), spec, times)
        late = dynamics.late_time_summary(s, times[-1] / 2)
        ratio = late["mean_return"] * late["occupied_dimension"]
        good = abs(late["mean_entropy"] - page) <= 0.15 * page and 0.1 <= ratio <= 10
        prod_ok &= good
        parts.append(f"{lab} S/Page {late['mean_entropy'] / page:.3f}, P*dim {ratio:.2f}")
    _report(request, 7, psix_ok and prod_ok, f"L={L} " + "; ".join(parts))


def test_criterion_8_entanglement(request):
    L = 34
    rdm_err = 0.0
    for l in range(1, 9):
        r = mps.rdm_eigenvalues(l)
        rdm_err = max(rdm_err, float(np.abs(np.sort(r.numerical) - np.sort(np.array(r.closed_form, float))).max()))
    finite = {}
    for l in range(1, L // 2 + 1):
        tdl = np.sort(np.array(mps.rdm_closed_form(l), float))[::-1]
        finite[l] = float(np.abs(mps.finite_rdm_spectrum(L, l) - tdl).max())
    fin_err = max(finite.values())
    bad = [l for l, e in finite.items() if e >= 1e-6]
    prof = mps.ee_profile(L, [L // 2])[0]
    sat_err = abs(prof[1] - log(4))
    one_site = abs(mps.tdl_entropy(1) - 0.5 * log(8))
    corr_err = 0.0
    for Lc in (6, 8):
        state = mps.build_mps(Lc)
        v = mps.to_statevector(state)
        for axis, op in (("x", SX), ("y", SY), ("z", SZ)):
            for i in (1, 2):
                for r in range(Lc):
                    c = mps.correlation(state, axis, i, r)
                    j = (i - 1 + r) % Lc + 1
                    ref = np.vdot(v, _apply_ops(v, Lc, [(j, op), (i, op)])).real
                    corr_err = max(corr_err, abs(c.contraction - c.closed_form), abs(c.contraction - ref))
    ok = rdm_err < 1e-12 and fin_err < 1e-6 and sat_err < 1e-6 and one_site < 1e-12 and corr_err < 1e-12
    _report(request, 8, ok, f"TDL RDM err {rdm_err:.1e}; L=34 finite vs TDL max {fin_err:.1e} "
                            f"(< 1e-6 fails at l={bad}); |S(17) - log 4| {sat_err:.1e}; "
                            f"one-site err {one_site:.1e}; correlations err {corr_err:.1e}")


def test_criterion_9_two_branches(request):
    L = 12
    h = 1.0
    spec = HamiltonianSpec(L, epsilon=0.2, h=h)
    page = spectral.page_value(L)
    basis = build_sector_basis(SectorSpec(L, 0, 0, 1, 1))
    res = spectral.diagonalize(build_hamiltonian(spec, basis), want_vectors=True)
    S = np.array([p.entropy for p in spectral.ee_scan(res, basis, L // 2)])
    central = S[spectral.central_slice(len(S))]
    frac = float(np.mean(np.abs(central - page) <= 0.15 * page))
    del res
    tower = scars.build_tower(L, h)
    found, low, dicke = 0, 0.0, True
    for n, v in enumerate(tower.states):
        sec, _ = scars.locate_sector(v, L, 2 * n - L, scars.tower_momentum(L, n))
        b = build_sector_basis(sec)
        c = b.project(v)
        E = tower.energies[n]
        H = build_hamiltonian(spec, b)
        if b.dim <= 3000:
            w, vecs = np.linalg.eigh(H.toarray())
        else:
            w, vecs = sla.eigsh(H.tosparse(), k=8, sigma=E + 1e-7)
        sel = np.abs(w - E) < 1e-8
        weight = float(np.sum(np.abs(vecs[:, sel].conj().T @ c) ** 2))
        if sel.any() and abs(weight - 1) < 1e-8:
            found += 1
        S_n = scars.physical_entropy(v, L, L // 2)
        low = max(low, S_n)
        dicke &= S_n <= scars.dicke_entropy(L, n, L // 2) + 2 * log(2) + 1e-12
    ok = frac >= 0.9 and found == L + 1 and low < 0.5 * page and dicke
    _report(request, 9, ok, f"L={L} bulk within 15% of Page {frac:.3f} (>= 0.9, dim {basis.dim}); "
                            f"scars found {found}/{L + 1}, max scar S {low:.3f} < {0.5 * page:.3f}; "
                            f"Dicke bound {'holds' if dicke else 'violated'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
