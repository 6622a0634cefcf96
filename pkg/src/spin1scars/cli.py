"""Command-line front end.

Every subcommand writes its data files plus ``<subcommand>_report.json`` into
``--out``. Exit codes: 0 all checks passed, 1 a verification failed, 2 usage
or specification error, 3 a size or memory cap was hit.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import dynamics, mps, scars, spectral
from .hamiltonian import (SX, HamiltonianSpec, build_hamiltonian, build_twisted_su2_generators,
                          build_twisted_xy, build_twisted_xy_full)
from .hilbert import SectorSpec, SizeError, SpecError, build_full_basis, build_sector_basis

log = logging.getLogger("spin1scars")

FLOAT_FMT = "%.17g"
DEFAULTS = {"L": 8, "J": 1.0, "epsilon": 0.2, "h": 1.0, "perturbation": "V", "out": ".",
            "format": "csv", "seed": 0, "tmax": dynamics.DEFAULT_TMAX, "nt": dynamics.DEFAULT_NT,
            "initial": "psix", "cut": None, "window": None, "profile_L": 34, "threads": None}


class Report:
    """Collects verification claims for the JSON report."""

    def __init__(self, subcommand: str, config: dict):
        self.subcommand = subcommand
        self.config = config
        self.claims = []
        self.extra = {}

    def check(self, claim: str, ref: str, value, target, tolerance, ok: bool) -> bool:
        self.claims.append({"claim": claim, "paper_ref": ref, "value": _jsonable(value),
                            "target": _jsonable(target), "tolerance": _jsonable(tolerance),
                            "pass": bool(ok)})
        log.info("%s %s: value=%s", "PASS" if ok else "FAIL", claim, value)
        return ok

    def close(self, target, tol, value, claim, ref):
        return self.check(claim, ref, value, target, tol, abs(value - target) <= tol)

    def below(self, value, bound, claim, ref):
        return self.check(claim, ref, value, f"< {bound}", bound, value < bound)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.claims)

    def write(self, out: Path) -> Path:
        path = out / f"{self.subcommand}_report.json"
        body = {"subcommand": self.subcommand, "config": self.config, "claims": self.claims,
                "pass": self.passed}
        body.update(self.extra)
        path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
        return path


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_table(out: Path, name: str, columns: Sequence[str], rows, fmt: str = "csv",
                meta: Optional[dict] = None) -> Path:
    """Write rows with 17 significant digits (CSV) or as JSON lists."""
    if fmt == "json":
        path = out / f"{name}.json"
        body = {"columns": list(columns), "rows": [[_jsonable(v) for v in r] for r in rows]}
        if meta:
            body["meta"] = meta
        path.write_text(json.dumps(body, indent=1, sort_keys=True) + "\n")
        return path
    path = out / f"{name}.csv"
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join(FLOAT_FMT % v if isinstance(v, (float, np.floating)) else str(v)
                              for v in r) + "\n")
    if meta:
        (out / f"{name}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def _sector(args) -> SectorSpec:
    return SectorSpec(args.L, args.M, args.k, args.R, args.I)


def _ham(args, **over) -> HamiltonianSpec:
    kw = dict(L=args.L, J=args.J, epsilon=args.epsilon, h=args.h, perturbation=args.perturbation)
    kw.update(over)
    return HamiltonianSpec(**kw)


# --- subcommands --------------------------------------------------------------------

def cmd_spectrum(args, rep: Report, out: Path):
    basis = build_sector_basis(_sector(args))
    H = build_hamiltonian(_ham(args), basis)
    res = spectral.diagonalize(H)
    rep.extra["dimension"] = basis.dim
    rep.below(H.hermiticity_error(), 1e-12, "Hamiltonian is Hermitian", "Hermiticity of the model")
    write_table(out, "spectrum", ["index", "energy"], [(i, float(e)) for i, e in enumerate(res.energies)],
                args.format)


def cmd_rstats(args, rep: Report, out: Path):
    basis = build_sector_basis(_sector(args))
    H = build_hamiltonian(_ham(args), basis)
    res = spectral.diagonalize(H)
    st = spectral.r_statistics(res.energies, window=args.window)
    l1 = spectral.l1_distance_to_goe(st)
    rep.extra.update(dimension=basis.dim, mean_r=st.mean_r, l1_goe=l1, n_merged=st.n_merged)
    if args.epsilon != 0:
        rep.close(0.53, 0.02, st.mean_r, "mean r matches GOE", "level-spacing ratio, <r> = 0.53")
        rep.below(l1, 0.1, "P(r) within L1 distance 0.1 of the GOE surmise", "GOE surmise for P(r)")
    elif args.M is not None and args.M % 2:
        rep.close(0.53, 0.04, st.mean_r, "odd-M sector is ergodic at epsilon = 0", "odd/even M trend")
    elif args.M is not None:
        rep.close(0.40, 0.04, st.mean_r, "even-M sector is non-ergodic at epsilon = 0", "odd/even M trend")
    edges, dens = st.histogram
    goe = spectral.goe_bin_density(edges)
    rows = [(float(a), float(b), float(d), float(g)) for a, b, d, g in zip(edges[:-1], edges[1:], dens, goe)]
    write_table(out, "rstats_hist", ["r_lo", "r_hi", "density", "goe_density"], rows, args.format)


def cmd_ee_scan(args, rep: Report, out: Path):
    L = args.L
    basis = build_sector_basis(_sector(args))
    H = build_hamiltonian(_ham(args), basis)
    res = spectral.diagonalize(H, want_vectors=True)
    cut = args.cut or L // 2
    tower = scars.build_tower(L, args.h)
    pts = spectral.ee_scan(res, basis, cut, tower.states)
    page = spectral.page_value(L)
    S = np.array([p.entropy for p in pts])
    central = S[spectral.central_slice(len(S))]
    frac = float(np.mean(np.abs(central - page) <= 0.15 * page)) if len(central) else 0.0
    rep.extra["dimension"] = basis.dim
    rep.check("central 80% of states within 15% of the Page value (fraction >= 0.9)",
              "thermal bulk near the Page value", frac, 0.9, 0.0, frac >= 0.9)
    for p in pts:
        if p.scar:
            rep.below(p.entropy, 0.5 * page, f"scar at E={p.energy:.6f} has low entanglement",
                      "scar branch far below the Page value")
    write_table(out, "ee_scan", ["energy", "entropy", "scar", "scar_overlap"],
                [(p.energy, p.entropy, int(p.scar), p.scar_overlap) for p in pts], args.format)


def cmd_mps_verify(args, rep: Report, out: Path):
    L = args.L
    state = mps.build_mps(L)
    ref = "MPS transfer-matrix identities"
    rep.close(float(mps.norm_squared_exact(L)), 1e-12, mps.norm_squared(state), "norm^2 = 1 + 2(-1/4)^(L/2)", ref)
    spec = _ham(args, h=0.0)
    rep.close(0.0, 1e-12, mps.expect_energy(state, spec), "<H> = 0", ref)
    to = mps.transfer_objects(state)
    rep.close(0.0, 1e-14, float(np.abs(np.sort(to.eigenvalues) - [-0.25, -0.25, 0, 1]).max()),
              "transfer eigenvalues {1, -1/4, -1/4, 0}", ref)
    rows = []
    if L >= 6:
        hs = mps.expect_h_squared(state, spec)
        rep.close(0.0, 1e-12, hs.value, "<H^2> = 0", ref)
        for name, val in hs.xy_classes.as_dict().items():
            target = float(getattr(hs.xy_closed_form, name))
            rep.close(target, 1e-12, val, f"class {name} matches closed form", ref)
            rows.append((name, val, target))
    write_table(out, "mps_classes", ["class", "contraction", "closed_form"], rows, args.format)
    rdm_rows = []
    for l in range(1, 9):
        r = mps.rdm_eigenvalues(l)
        rep.close(0.0, 1e-12, float(np.abs(r.numerical - r.closed_form).max()),
                  f"RDM eigenvalues l={l} match closed form", "reduced density matrix spectrum")
        rdm_rows.append((l, *map(float, r.closed_form)))
    write_table(out, "rdm_tdl", ["l", "lam1", "lam2", "lam3", "lam4"], rdm_rows, args.format)
    prof = mps.ee_profile(args.profile_L)
    mid = [s for l, s, _ in prof if l == args.profile_L // 2][0]
    rep.close(float(np.log(4)), 1e-6, mid, f"half-chain entropy at L={args.profile_L} saturates to log 4",
              "entanglement profile saturation")
    write_table(out, "ee_profile", ["l", "S_finite", "S_tdl"], prof, args.format)


def cmd_scars(args, rep: Report, out: Path):
    L = args.L
    tower = scars.build_tower(L, args.h)
    basis = build_full_basis(L)
    H = build_hamiltonian(_ham(args), basis).tosparse()
    psi_x = dynamics.psi_x_state(L)
    for n, v in enumerate(tower.states):
        rep.below(float(np.linalg.norm(H @ v - tower.energies[n] * v)), 1e-10,
                  f"H psi_{n} = h(2n-L) psi_{n}", "tower energies E_n = h(2n - L)")
        ov = abs(np.vdot(scars.bond_bimagnon(L, n), v))
        rep.close(1.0, 1e-10, float(ov), f"bond-bimagnon overlap n={n}", "bond-bimagnon correspondence")
    if L <= scars.GENERATOR_CAP:
        Jp, Jm, Jz = scars.su2_generators(L)
        err = abs(Jp @ Jm - Jm @ Jp - 2 * Jz).max()
        rep.below(float(err), 1e-12, "[J+, J-] = 2 Jz", "pseudospin su(2) algebra")
    write_table(out, "tower", ["n", "M", "E", "norm", "c_n", "overlap"],
                [(r["n"], r["M"], r["E"], r["norm"], r["c_n"], r["overlap"]) for r in tower.records(psi_x)],
                args.format)


def cmd_quench(args, rep: Report, out: Path):
    L = args.L
    init = dynamics.INITIAL_STATES[args.initial](L)
    times = dynamics.default_times(args.tmax, args.nt)
    spec = _ham(args)
    obs = {"Sx_1": dynamics.site_expectation(L, 0, SX), "SxSx_12": dynamics.pair_expectation(L, 0, SX)}
    series = dynamics.evolve(init, spec, times, observables=obs, label=args.initial)
    rep.below(float(np.abs(series.norms - 1).max()), 1e-10, "norm conserved", "unitary evolution")
    if args.initial == "psix":
        rep.below(float(np.ptp(series.half_chain_entropy)), 1e-8, "entropy constant in time",
                  "scar state entanglement stays constant")
        dev = float(np.abs(series.return_prob - dynamics.analytic_return(L, args.h, times)).max())
        rep.below(dev, dynamics.return_envelope(L) * (1 + 1e-9), "return probability within envelope of cos^2L(ht)",
                  "return probability approaches cos^2L(ht)")
    else:
        late = dynamics.late_time_summary(series, args.tmax / 2)
        page = spectral.page_value(L)
        rep.close(page, 0.15 * page, late["mean_entropy"], "late-time entropy near the Page value",
                  "thermalizing quench saturates near the Page value")
        ratio = late["mean_return"] * late["occupied_dimension"]
        rep.check("late-time return probability within a factor 10 of 1/dim", "return probability ~ 1/dim",
                  ratio, 1.0, 10.0, 0.1 <= ratio <= 10.0)
    meta = {"L": L, "initial": args.initial, "J": args.J, "epsilon": args.epsilon, "h": args.h,
            "sectors": series.sectors}
    write_table(out, f"quench_{args.initial}", series.columns(), series.to_rows(), args.format, meta)


def cmd_twisted_check(args, rep: Report, out: Path):
    L = args.L
    J = args.J
    rows = []
    spectra = {1: {}, -1: {}}
    for M in range(-L, L + 1, 2):
        basis = build_sector_basis(SectorSpec(L, M))
        e_xy = spectral.diagonalize(build_hamiltonian(HamiltonianSpec(L, J=J, epsilon=0.0), basis)).energies
        Jw = J if M % 4 == 0 else -J
        worst = 0.0
        for s in (1, -1):
            Ht = build_twisted_xy(L, [J] * (L - 1) + [Jw], s, M, basis)
            worst = max(worst, float(np.abs(spectral.diagonalize(Ht).energies - e_xy).max()))
            spectra[s][M] = spectral.diagonalize(build_twisted_xy(L, [J] * L, s, M, basis)).energies
        rep.below(worst, 1e-10, f"M={M}: spectrum of H_XY equals twisted chain", "twisted SU(2) coincidence")
        rows.append((M, basis.dim, worst))
    # the uniform twisted chain is organized in multiplets: levels at M > 0 reappear at M - 2
    for s in (1, -1):
        for M in range(2, L + 1, 2):
            lo = spectra[s][M - 2]
            miss = max(float(np.min(np.abs(lo - e))) for e in spectra[s][M])
            rep.below(miss, 1e-9, f"twisted chain (sign {s:+d}): levels at M={M} reappear at M={M - 2}",
                      "twisted SU(2) multiplets")
    if L <= 10:
        full = build_full_basis(L)
        for s in (1, -1):
            Hf = build_twisted_xy_full(L, [J] * L, s, full).tosparse()
            sp_, sz = build_twisted_su2_generators(L, full, cap=10)
            c = Hf @ sp_.tosparse() - sp_.tosparse() @ Hf
            rep.below(float(abs(c).max()) if c.nnz else 0.0, 1e-12,
                      f"twisted chain commutes with s+_T (phase sign {s:+d})", "twisted SU(2) generators")
    write_table(out, "twisted", ["M", "dim", "max_abs_diff"], rows, args.format)


def cmd_corr(args, rep: Report, out: Path):
    L = args.L
    state = mps.build_mps(L)
    rows = []
    worst = 0.0
    for axis in "xyz":
        for i in (1, 2):
            for r in range(L):
                c = mps.correlation(state, axis, i, r)
                worst = max(worst, abs(c.contraction - c.closed_form))
                rows.append((axis, i, r, c.contraction, c.closed_form))
    rep.below(worst, 1e-12, "correlation closed forms match contraction", "two-point correlation tables")
    write_table(out, "correlations", ["axis", "i", "r", "contraction", "closed_form"], rows, args.format)


COMMANDS = {"spectrum": cmd_spectrum, "rstats": cmd_rstats, "ee-scan": cmd_ee_scan,
            "mps-verify": cmd_mps_verify, "scars": cmd_scars, "quench": cmd_quench,
            "twisted-check": cmd_twisted_check, "corr": cmd_corr}


# --- argument handling ------------------------------------------------------------

def _signed(x: str) -> int:
    v = int(x)
    if v not in (1, -1):
        raise argparse.ArgumentTypeError("expected +1 or -1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--L", type=int, help="number of spin-1 sites (even)")
    common.add_argument("--J", type=float, help="XY coupling")
    common.add_argument("--epsilon", type=float, help="perturbation strength")
    common.add_argument("--h", type=float, help="Zeeman field")
    common.add_argument("--perturbation", choices=["V", "V'", "V''", "V'''", "none"])
    common.add_argument("--M", type=int, help="total magnetization sector")
    common.add_argument("--k", type=int, help="momentum index")
    common.add_argument("--R", type=_signed, help="reflection eigenvalue (+1/-1)")
    common.add_argument("--I", type=_signed, help="spin-inversion eigenvalue (+1/-1)")
    common.add_argument("--tmax", type=float)
    common.add_argument("--nt", type=int)
    common.add_argument("--initial", choices=sorted(dynamics.INITIAL_STATES))
    common.add_argument("--cut", type=int, help="entanglement cut (default L/2)")
    common.add_argument("--window", type=float, help="central fraction of levels for r statistics")
    common.add_argument("--profile-L", dest="profile_L", type=int, help="chain length of the EE profile")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="cap on BLAS threads (default: all cores)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="spin1scars", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


_TYPES = {"L": int, "J": float, "epsilon": float, "h": float, "M": int, "k": int, "R": _signed,
          "I": _signed, "tmax": float, "nt": int, "cut": int, "window": float, "profile_L": int,
          "seed": int, "threads": int}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Apply precedence flags > config file > defaults."""
    cfg = read_config(args.config) if args.config else {}
    for key, val in cfg.items():
        if key not in _TYPES and key not in DEFAULTS:
            raise SpecError(f"unknown config key {key!r}")
        if getattr(args, key, None) is None:
            setattr(args, key, _TYPES.get(key, str)(val))
    for key, val in DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)
    if args.cut is None and args.L:
        args.cut = args.L // 2
    return args


def config_dict(args) -> dict:
    keys = sorted(set(DEFAULTS) | set(_TYPES))
    return {k: getattr(args, k, None) for k in keys}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args = resolve(args)
    except (SpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rep = Report(args.command, config_dict(args))
    np.random.seed(args.seed)
    t0 = time.perf_counter()
    try:
        if args.threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                COMMANDS[args.command](args, rep, out)
        else:
            COMMANDS[args.command](args, rep, out)
    except SizeError as exc:
        rep.extra["error"] = {"type": "resource_cap", "message": str(exc)}
        rep.write(out)
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SpecError as exc:
        rep.extra["error"] = {"type": "specification", "message": str(exc)}
        rep.write(out)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    log.info("%s finished in %.1f s", args.command, time.perf_counter() - t0)
    path = rep.write(out)
    status = "PASS" if rep.passed else "FAIL"
    print(f"{status} {args.command}: {sum(c['pass'] for c in rep.claims)}/{len(rep.claims)} checks, report {path}")
    return 0 if rep.passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
