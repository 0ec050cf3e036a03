"""Command-line front end.

    isospec construct --clifford l=3 a=1 b=1 [--space-out FILE]
    isospec verify {intertwine,isotonal,conjugator,geosphere,fourier} ...
    isospec scan {hopf,geosphere,rim} ...

Reports are structured key: value text, CSV for scans.  Exit codes: 0 PASS,
1 FAIL, 2 error.  A run is a pure function of its arguments and --seed.
ISOSPEC_THREADS caps BLAS threads.
"""

from __future__ import annotations

import os

if os.environ.get("ISOSPEC_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["ISOSPEC_THREADS"])

import argparse
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import endospace as es

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

_GROUP = re.compile(r"(?P<kind>sh|n|h|j)(?P<l>\d)_?(?P<a>\d)(?P<b>\d)")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def header(self) -> list[str]:
        lines = [f"isospec: {__version__}", f"command: {self.command}", f"seed: {self.seed}"]
        lines += [f"{k}: {_fmt(v)}" for k, v in sorted(self.params.items())]
        return lines


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


# --- group and space parsing -----------------------------------------------------

def parse_space(name: str) -> tuple[es.EndoSpace, bool]:
    """'h3_11' / 'n3_13' / 'j3_10' (nilpotent) or 'sh3_11' (solvable), or a space file."""
    m = _GROUP.fullmatch(name)
    if m:
        space = es.clifford_space(int(m["l"]), int(m["a"]), int(m["b"]))
        return space, m["kind"] == "sh"
    path = Path(name)
    if path.exists():
        return es.EndoSpace.from_text(path.read_text()), False
    raise UsageError(f"unknown group {name!r}")


def _group(name: str):
    from .nilgeom import MetricGroup
    from .solvgeom import SolvGroup
    space, solv = parse_space(name)
    g = MetricGroup(space)
    return SolvGroup(g) if solv else g


def _floats(text: str) -> np.ndarray:
    return np.array([float(x) for x in text.split(",") if x.strip()])


def _kv(items) -> dict:
    out = {}
    for it in items:
        if "=" not in it:
            raise UsageError(f"expected key=value, got {it!r}")
        k, v = it.split("=", 1)
        out[k.strip()] = int(v)
    return out


def read_config(path: str) -> dict:
    """'key = value' lines; '#' starts a comment.  Values become argument defaults."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"bad config line {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


# --- commands ----------------------------------------------------------------------

def cmd_construct(args) -> tuple[list[str], int]:
    if args.matrix_file:
        text = Path(args.matrix_file).read_text()
        space = es.EndoSpace.from_text(text)
        src = {"matrix_file": args.matrix_file}
    elif args.clifford:
        kv = _kv(args.clifford)
        space = es.clifford_space(kv.get("l", 3), kv.get("a", 1), kv.get("b", 0))
        src = {"clifford": " ".join(args.clifford)}
    else:
        raise UsageError("need --clifford or --matrix-file")
    cfg = RunConfig("construct", args.seed, src)
    lines = cfg.header() + [f"k: {space.k}", f"l: {space.l}",
                            f"heisenberg_type: {space.is_heisenberg_type(1e-10)}",
                            f"heisenberg_residual: {es.heisenberg_residual(space):.3e}",
                            "anticommutator_table:"]
    for a in range(space.l):
        z = np.zeros(space.l)
        z[a] = 1.0
        chk = es.is_anticommutator(space, z)
        lines.append(f"  J_{a}: {chk.ok}")
    if args.space_out:
        Path(args.space_out).write_text(space.to_text() + "\n")
        lines.append(f"space_file: {args.space_out}")
    lines.append("status: PASS")
    return lines, EXIT_PASS


def _status(lines, ok: bool) -> tuple[list[str], int]:
    lines.append(f"status: {'PASS' if ok else 'FAIL'}")
    return lines, EXIT_PASS if ok else EXIT_FAIL


def cmd_intertwine(args) -> tuple[list[str], int]:
    from . import harmonics as hm
    s1, solv1 = parse_space(args.pair[0])
    s2, solv2 = parse_space(args.pair[1])
    fams = tuple(args.families.split(",")) if args.families else \
        ("spherical_laplacian", "D_A", "D_perp", "M_cd", "JA_norm")
    cfg = RunConfig("verify intertwine", args.seed,
                    {"pair": list(args.pair), "rmax": args.rmax, "tol": args.tol, "families": list(fams)})
    rep = hm.verify_intertwining(s1, s2, r_max=args.rmax, tol=args.tol, families=fams)
    lines = cfg.header() + ["[nilpotent]"] + rep.to_text().splitlines()
    ok = rep.all_passed
    if solv1 or solv2:
        srep = hm.solvable_intertwining(s1, s2, s=args.s, n_points=args.points, seed=args.seed,
                                        r_max=args.rmax, tol=args.tol, base=rep)
        lines += ["[solvable geodesic sphere]", f"s: {args.s:.12g}"] + srep.to_text().splitlines()
        ok = ok and srep.all_passed
    return _status(lines, ok)


def cmd_isotonal(args) -> tuple[list[str], int]:
    from .solvgeom import isotonal_decomposition
    g1, g2 = _group(args.pair[0]), _group(args.pair[1])
    cfg = RunConfig("verify isotonal", args.seed, {"pair": list(args.pair), "tol": args.tol,
                                                   "invariance_tol": args.invariance_tol})
    rep = isotonal_decomposition(g1, g2, tol=args.invariance_tol)
    lines = cfg.header() + [f"invariance_residual: {rep.invariance_residual:.3e}",
                            f"set: {rep.set_verdict.relation} (hausdorff {rep.set_verdict.distance:.3e})",
                            f"multiset: {rep.multiset_verdict.relation} "
                            f"(distance {rep.multiset_verdict.distance:.3e})", "blocks:"]
    for key, v in sorted(rep.block_verdicts.items()):
        lines.append(f"  {key}: {v.relation} ({v.distance:.3e})")
    if rep.reflection:
        lines.append(f"reflection_center: {rep.reflection['center']:.12g} "
                     f"(residual {rep.reflection['residual']:.3e})")
    ok = rep.set_verdict.passed and not rep.multiset_verdict.passed
    return _status(lines, ok)


def cmd_conjugator(args) -> tuple[list[str], int]:
    s1, _ = parse_space(args.pair[0])
    s2, _ = parse_space(args.pair[1])
    cfg = RunConfig("verify conjugator", args.seed, {"pair": list(args.pair), "samples": args.samples})
    eq = es.verify_spectral_equivalence(s1, s2, n_samples=args.samples, rng=args.seed)
    A0 = es.rescale_to_unit(s1.J(np.eye(s1.l)[0]))[1]
    B0 = es.rescale_to_unit(s2.J(np.eye(s2.l)[0]))[1]
    perp = [s1.J(e) for e in np.eye(s1.l)[1:]]
    perp_p = [s2.J(e) for e in np.eye(s2.l)[1:]]
    same_perp = all(np.abs(F - Fp).max() < 1e-12 for F, Fp in zip(perp, perp_p))
    lines = cfg.header() + [f"spectral_equivalence_deviation: {eq.deviation:.3e}"]
    ok = eq.passed
    if same_perp:
        uc = es.unit_endo_conjugator(A0, B0, perp)
        lines.append("unit_endo_conjugator:")
        lines += [f"  {k}: {v:.3e}" for k, v in sorted(uc.residuals.items())]
        ok = ok and max(uc.residuals.values()) <= args.tol
    nc = es.nonconjugacy_certificate(s1, s2)
    lines.append(f"nonconjugacy: {nc.verdict} {sorted(nc.differing)}")
    return _status(lines, ok)


def _geosphere_points(g, s, n, seed):
    from . import hypersurface as hs
    prof = hs.geodesic_sphere_profile(s)
    return prof, [hs.snap_to_surface(prof, p) for p in hs.sample_geodesic_sphere(g, s, n, seed)]


def _pure_point(g, prof):
    from . import hypersurface as hs
    X = np.zeros(g.k)
    X[0] = 1.0
    return hs.point_on_surface(g, prof, X, np.array([0.3, 0.2, 0.1]), 1.0)


def cmd_geosphere(args) -> tuple[list[str], int]:
    from . import hypersurface as hs
    from .solvgeom import SolvGroup
    g = _group(args.group)
    if not isinstance(g, SolvGroup):
        raise UsageError("geosphere needs a solvable group (sh...)")
    cfg = RunConfig("verify geosphere", args.seed, {"group": args.group, "s": args.s, "points": args.points})
    prof, pts = _geosphere_points(g, args.s, args.points, args.seed)
    rt, kap, Ls, margins = 0.0, [], [], []
    for p in pts:
        from .solvgeom import SolvPoint
        sp_ = SolvPoint(p.X, p.Z, p.t)
        back = hs.cayley(g, *hs.cayley_inverse(g, sp_))
        rt = max(rt, float(np.abs(np.concatenate([back.x - p.X, back.z - p.Z, [back.t - p.t]])).max()))
        kap.append(hs.scalar_curvature(g, prof, p))
        Ls.append(hs.tensor_L_norm(g, prof, p))
        margins.append(hs.solv_ricci_matrix(g, prof, p).margin)
    lo, hi = hs.t_axis_intersections(args.s)
    axis = max(abs(lo - np.exp(-args.s)), abs(hi - np.exp(args.s)))
    kap = np.array(kap)
    rel_std = float(np.std(kap) / abs(np.mean(kap)))
    pure = hs.tensor_L_norm(g, prof, _pure_point(g, prof))
    lines = cfg.header() + [
        f"cayley_round_trip: {rt:.3e}",
        f"t_axis_residual: {axis:.3e}",
        f"scalar_curvature_mean: {np.mean(kap):.10g}",
        f"scalar_curvature_relative_std: {rel_std:.3e}",
        f"tensor_L_max: {max(Ls):.6e}",
        f"tensor_L_min: {min(Ls):.6e}",
        f"tensor_L_pure_point: {pure:.3e}",
        f"ricci_margin_min: {min(margins):.6e}",
        f"locally_homogeneous_signature: {max(Ls) <= 1e-9}",
    ]
    return _status(lines, rt <= 1e-10 and axis <= 1e-10 and rel_std <= 1e-7)


def cmd_fourier(args) -> tuple[list[str], int]:
    from . import spectra
    s1, _ = parse_space(args.pair[0])
    s2, _ = parse_space(args.pair[1])
    beta = _floats(args.beta)
    if len(beta) != s1.l:
        raise UsageError(f"beta needs {s1.l} components")
    cfg = RunConfig("verify fourier", args.seed, {"pair": list(args.pair), "beta": beta, "N": args.N,
                                                  "eigs": args.eigs})
    J1, J2 = s1.J(beta), s2.J(beta)
    O = spectra.orthogonal_conjugator(J1, J2)
    rep = spectra.compare_reduced(J1, J2, beta, N=args.N, n_eigs=args.eigs, conjugator=O)
    lines = cfg.header() + rep.to_text().splitlines()[1:]
    return _status(lines, rep.passed and rep.exact_residual <= args.tol)


# --- scans --------------------------------------------------------------------------

def scan_hopf(args) -> list[str]:
    from . import hypersurface as hs
    prof = hs.euclidean_profile(args.R2)
    hc = hs.hopf_curvature(prof, n_samples=args.points)
    f = hs.sp.lambdify(hs.TAU, hc.expr, "numpy")
    rows = ["tau,kappa,dkappa"]
    rows += [f"{t:.12g},{float(f(t)):.12g},{d:.12g}" for t, d in zip(hc.sample_tau, hc.derivative_values)]
    return rows


def scan_geosphere(args) -> list[str]:
    from . import hypersurface as hs
    g = _group(args.group)
    prof, pts = _geosphere_points(g, args.s, args.points, args.seed)
    rows = ["index,x_norm2,z_norm2,t,scalar_curvature,tensor_L"]
    for i, p in enumerate(pts):
        rows.append(f"{i},{p.X @ p.X:.12g},{p.Z @ p.Z:.12g},{p.t:.12g},"
                    f"{hs.scalar_curvature(g, prof, p):.12g},{hs.tensor_L_norm(g, prof, p):.6e}")
    return rows


def scan_rim(args) -> list[str]:
    from . import hypersurface as hs
    g = _group(args.group)
    prof = hs.euclidean_profile(args.R2)
    rows = ["index,z_norm,scalar_curvature,flag"]
    zmax = np.sqrt(args.R2)
    X = np.ones(g.k) / np.sqrt(g.k)
    for i, r in enumerate(np.linspace(0.5, 1.0, args.points) * zmax):
        Z = np.zeros(g.l)
        Z[0] = r
        try:
            p = hs.point_on_surface(g, prof, X, Z)
            rows.append(f"{i},{r:.12g},{hs.scalar_curvature(g, prof, p):.12g},ok")
        except hs.RimPoint:
            rows.append(f"{i},{r:.12g},,RimPoint")
    return rows


def cmd_scan(args) -> tuple[list[str], int]:
    rows = {"hopf": scan_hopf, "geosphere": scan_geosphere, "rim": scan_rim}[args.what](args)
    return rows, EXIT_PASS


# --- argument parsing ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isospec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--config", help="key = value file supplying defaults")
    common.add_argument("--tol", type=float, default=1e-8)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", parents=[common])
    c.add_argument("--clifford", nargs="+", metavar="KEY=VALUE")
    c.add_argument("--matrix-file")
    c.add_argument("--space-out", help="write the constructed space file here")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify").add_subparsers(dest="suite", required=True)
    s = v.add_parser("intertwine", parents=[common])
    s.add_argument("--pair", nargs=2, required=True)
    s.add_argument("--rmax", type=int, default=6)
    s.add_argument("--families", help="comma-separated subset of the operator families")
    s.add_argument("--s", type=float, default=1.0)
    s.add_argument("--points", type=int, default=20)
    s.set_defaults(func=cmd_intertwine)
    s = v.add_parser("isotonal", parents=[common])
    s.add_argument("--pair", nargs=2, required=True)
    s.add_argument("--invariance-tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_isotonal)
    s = v.add_parser("conjugator", parents=[common])
    s.add_argument("--pair", nargs=2, required=True)
    s.add_argument("--samples", type=int, default=50)
    s.set_defaults(func=cmd_conjugator)
    s = v.add_parser("geosphere", parents=[common])
    s.add_argument("--group", required=True)
    s.add_argument("--s", type=float, default=1.0)
    s.add_argument("--points", type=int, default=30)
    s.set_defaults(func=cmd_geosphere)
    s = v.add_parser("fourier", parents=[common])
    s.add_argument("--pair", nargs=2, required=True)
    s.add_argument("--beta", required=True)
    s.add_argument("--N", type=int, default=20)
    s.add_argument("--eigs", type=int, default=10)
    s.set_defaults(func=cmd_fourier)

    sc = sub.add_parser("scan", parents=[common])
    sc.add_argument("what", choices=["hopf", "geosphere", "rim"])
    sc.add_argument("--group", default="sh3_20")
    sc.add_argument("--R2", type=float, default=2.0)
    sc.add_argument("--s", type=float, default=1.0)
    sc.add_argument("--points", type=int, default=30)
    sc.set_defaults(func=cmd_scan)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        conf = read_config(args.config)
        known = vars(args)
        for k, v in conf.items():
            if k not in known:
                raise UsageError(f"unknown config key {k!r}")
        # command-line flags win over the file: re-parse with file values as defaults
        explicit = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
        for k, v in conf.items():
            if k in explicit:
                continue
            cur = known[k]
            if isinstance(cur, list):
                setattr(args, k, v.split())
            elif isinstance(cur, bool):
                setattr(args, k, v.lower() in ("1", "true", "yes"))
            elif isinstance(cur, int):
                setattr(args, k, int(v))
            elif isinstance(cur, float):
                setattr(args, k, float(v))
            else:
                setattr(args, k, v)
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if any(getattr(args, t, 1.0) <= 0 for t in ("tol", "invariance_tol")):
            raise UsageError("tolerances must be positive")
        lines, code = args.func(args)
    except SystemExit as e:
        return EXIT_ERROR if e.code not in (0, None) else EXIT_PASS
    except (es.EndoSpaceError, UsageError, ValueError, OSError, RuntimeError) as e:
        sys.stderr.write(f"status: ERROR\nreason: {type(e).__name__}\nmessage: {e}\n")
        return EXIT_ERROR
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
