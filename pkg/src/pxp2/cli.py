"""Command-line interface.

Every command writes CSV with '#  key=value' metadata headers so a finished
file reconstructs its run configuration.  Scans flush one completed point at
a time and can resume from a partial file; a run exits 0 only if every
requested point completed, otherwise it prints a manifest of completed
points and exits nonzero.  PXP2_MAX_DIM overrides the dense-diagonalization
and propagation size guards.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .basis import BoundaryCondition, ConstrainedBasis, dimension, named_state
from .errors import ConvergenceError, ResourceLimitError, SoftSpinDomainError, StiffnessError
from .observables import (
    entanglement_entropy,
    eigenstate_overlaps,
    level_statistics,
    order_parameters,
    reference_spacing_pdf,
    spectral_density,
)
from .operators import (
    ModelParameters,
    build_pxp2,
    build_symmetry_breaking,
)
from .quench import QuenchSpec, growth_rate_scan, run_quench
from .softspin import dispersion, solve_constraints
from .solvers import (
    FULL_DIAG_LIMIT,
    KRYLOV_DIM_LIMIT,
    full_spectrum,
    ground_state,
    max_dim_override,
)
from .symmetry import build_sectors, find_sector, project_operator, project_state, sector_summary


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_metadata(fh, config):
    for key in sorted(config):
        fh.write(f"# {key}={_fmt(config[key])}\n")


def parse_metadata(path):
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value
    return meta


def read_completed_keys(path, column=0):
    done = set()
    if not os.path.exists(path):
        return done
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line[0].isalpha():
                continue
            done.add(line.split(",")[column])
    return done


def run_sweep(points, worker, writer, threads=1, skip=None):
    """Run worker over points, writing completed rows in point order.

    Returns (completed keys, failures) where failures maps a point key to
    the error message.  Points whose formatted key is in skip are not rerun.
    """
    skip = skip or set()
    todo = [(key, p) for key, p in points if key not in skip]
    failures = {}
    completed = []
    if threads <= 1:
        for key, p in todo:
            try:
                writer(key, worker(p))
                completed.append(key)
            except (SoftSpinDomainError, ResourceLimitError) as exc:
                failures[key] = str(exc)
        return completed, failures
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futures = [(key, ex.submit(worker, p)) for key, p in todo]
        for key, fut in futures:
            try:
                writer(key, fut.result())
                completed.append(key)
            except (SoftSpinDomainError, ResourceLimitError) as exc:
                failures[key] = str(exc)
    return completed, failures


def finish_sweep(completed, failures, out):
    if failures:
        print(f"{len(failures)} point(s) failed:", file=sys.stderr)
        for key, msg in failures.items():
            print(f"  point {key}: {msg}", file=sys.stderr)
        print("manifest of completed points: " + ",".join(completed), file=sys.stderr)
        return 1
    if out:
        print(f"wrote {out}")
    return 0


def _delta_points(args):
    if args.delta_range is not None:
        start, stop, num = args.delta_range
        return list(np.linspace(start, stop, int(num)))
    if args.delta is None:
        raise SystemExit("need --delta or --delta-range")
    return [args.delta]


def _single_delta(args):
    return 0.0 if args.delta is None else args.delta


def _check_dim_guard(guard, size, cap):
    cap = max_dim_override() or cap
    if size > cap:
        raise ResourceLimitError(guard, size, cap)


def _open_scan_file(path, config, header, resume_key_column=0):
    """Open a scan CSV for append, validating resume metadata if present."""
    done = set()
    if path and os.path.exists(path) and os.path.getsize(path) > 0:
        meta = parse_metadata(path)
        stale = {
            k: (meta.get(k), _fmt(v))
            for k, v in config.items()
            if meta.get(k) != _fmt(v)
        }
        if stale:
            raise SystemExit(
                f"refusing to resume {path}: metadata mismatch {stale}; "
                "delete the file or change --out"
            )
        done = read_completed_keys(path)
        fh = open(path, "a")
    else:
        fh = open(path, "w") if path else sys.stdout
        write_metadata(fh, config)
        fh.write(header + "\n")
        fh.flush()
    return fh, done


def cmd_ground_scan(args):
    bc = BoundaryCondition(args.bc)
    dim = dimension(args.L, bc)
    _check_dim_guard("ground_scan_dim", dim, KRYLOV_DIM_LIMIT)
    basis = ConstrainedBasis(args.L, bc)
    deltas = _delta_points(args)
    config = {
        "command": "ground-scan",
        "L": args.L,
        "bc": bc.value,
        "epsilon": args.epsilon,
        "broken": args.broken,
        "n_points": len(deltas),
    }
    cols = "delta,energy,mx,mx_projected,mz_stag,entropy_bits"
    if args.broken:
        cols += ",energy_broken,mx_broken,mx_projected_broken,mz_stag_broken,entropy_bits_broken"
    fh, done = _open_scan_file(args.out, config, cols)

    breaker = build_symmetry_breaking(basis, args.epsilon) if args.broken else None

    def worker(delta):
        op = build_pxp2(basis, ModelParameters(L=args.L, delta=delta, bc=bc))
        e0, psi = ground_state(op)
        ops = order_parameters(psi)
        ent = entanglement_entropy(psi).entropy_bits
        row = [delta, e0, ops.mx, ops.mx_projected, ops.mz_staggered, ent]
        if breaker is not None:
            opb = type(op)(op.matrix + breaker.matrix, basis)
            e0b, psib = ground_state(opb)
            opsb = order_parameters(psib)
            entb = entanglement_entropy(psib).entropy_bits
            row += [e0b, opsb.mx, opsb.mx_projected, opsb.mz_staggered, entb]
        return row

    def writer(key, row):
        fh.write(",".join(_fmt(v) for v in row) + "\n")
        fh.flush()

    points = [(_fmt(float(d)), float(d)) for d in deltas]
    completed, failures = run_sweep(points, worker, writer, args.threads, skip=done)
    if fh is not sys.stdout:
        fh.close()
    return finish_sweep(completed, failures, args.out)


def cmd_spectral_density(args):
    bc = BoundaryCondition(args.bc)
    if bc != BoundaryCondition.PERIODIC:
        raise SystemExit("spectral density needs a periodic chain")
    basis = ConstrainedBasis(args.L, bc)
    params = ModelParameters(L=args.L, delta=_single_delta(args), bc=bc)
    op = build_pxp2(basis, params)
    sectors = build_sectors(basis)
    if args.kpoints:
        wanted = sorted(set(int(k) for k in args.kpoints))
    else:
        wanted = sorted({s.momentum_index for s in sectors})
    e0, ground = ground_state(op)
    sector_eigs = {}
    for n_k in wanted:
        parts = [s for s in sectors if s.momentum_index == n_k]
        for s in parts:
            _check_dim_guard("sector_dense_diag", s.dim, FULL_DIAG_LIMIT)
        blocks = [project_operator(op, s) for s in parts]
        # merge inversion blocks of a k=0 or k=pi sector back into one momentum sector
        if len(parts) == 1:
            sec, block = parts[0], blocks[0]
        else:
            import scipy.sparse as sp

            from .symmetry import SymmetrySector

            u = sp.hstack([s.basis_matrix for s in parts]).tocsr()
            sec = SymmetrySector(n_k, None, sum((s.representatives for s in parts), []), u)
            block = project_operator(op, sec)
        sector_eigs[n_k] = (sec, full_spectrum(block))
    lo, hi, num = args.omega_range
    grid = np.linspace(lo, hi, int(num))
    result = spectral_density(sector_eigs, ground, e0, grid, args.eta)
    config = {
        "command": "spectral-density",
        "L": args.L,
        "bc": bc.value,
        "delta": params.delta,
        "eta": args.eta,
        "ground_energy": e0,
        "k_indices": " ".join(str(k) for k in result.momentum_indices),
    }
    for n_k in result.momentum_indices:
        config[f"sum_rule_k{n_k}"] = result.sum_rule[n_k]
    fh = open(args.out, "w") if args.out else sys.stdout
    write_metadata(fh, config)
    fh.write("k_index,k,omega,A\n")
    for row, n_k in enumerate(result.momentum_indices):
        k = 2.0 * np.pi * n_k / args.L
        for w, a in zip(result.omega_grid, result.values[row]):
            fh.write(f"{n_k},{_fmt(k)},{_fmt(float(w))},{_fmt(float(a))}\n")
    if fh is not sys.stdout:
        fh.close()
        print(f"wrote {args.out}")
    return 0


def cmd_level_stats(args):
    basis = ConstrainedBasis(args.L, BoundaryCondition.PERIODIC)
    params = ModelParameters(L=args.L, delta=_single_delta(args))
    op = build_pxp2(basis, params)
    sectors = build_sectors(basis)
    sector = find_sector(sectors, 0, 1)
    _check_dim_guard("sector_dense_diag", sector.dim, FULL_DIAG_LIMIT)
    eig = full_spectrum(project_operator(op, sector))
    stats = level_statistics(eig.energies)
    config = {
        "command": "level-stats",
        "L": args.L,
        "delta": params.delta,
        "sector": "k=0,parity=+1",
        "sector_dim": sector.dim,
        "mean_spacing": stats.mean_spacing,
        "collapsed_levels": stats.collapsed_levels,
        "dropped_spacings": stats.dropped_spacings,
    }
    for name, d in stats.ks_distances.items():
        config[f"ks_{name}"] = d
    fh = open(args.out, "w") if args.out else sys.stdout
    write_metadata(fh, config)
    fh.write("s,density,poisson,wigner_dyson,semi_poisson\n")
    centers = 0.5 * (stats.bin_edges[1:] + stats.bin_edges[:-1])
    for c, dens in zip(centers, stats.density):
        refs = [reference_spacing_pdf(n, c) for n in ("poisson", "wigner_dyson", "semi_poisson")]
        fh.write(",".join(_fmt(float(v)) for v in (c, dens, *refs)) + "\n")
    if fh is not sys.stdout:
        fh.close()
        print(f"wrote {args.out}")
    return 0


def cmd_overlaps(args):
    basis = ConstrainedBasis(args.L, BoundaryCondition.PERIODIC)
    params = ModelParameters(L=args.L, delta=_single_delta(args))
    op = build_pxp2(basis, params)
    target = named_state(basis, args.target)
    sectors = build_sectors(basis)
    rows = []
    total = 0.0
    for sector in sectors:
        coeffs = project_state(target, sector)
        weight = float(np.vdot(coeffs, coeffs).real)
        if weight < 1e-12:
            continue
        _check_dim_guard("sector_dense_diag", sector.dim, FULL_DIAG_LIMIT)
        eig = full_spectrum(project_operator(op, sector))
        energies, w = eigenstate_overlaps(eig, coeffs)
        total += float(np.sum(w))
        parity = sector.inversion_parity if sector.inversion_parity is not None else 0
        rows.extend(zip(energies, w, [sector.momentum_index] * len(w), [parity] * len(w)))
    rows.sort()
    config = {
        "command": "overlaps",
        "L": args.L,
        "delta": params.delta,
        "target": args.target,
        "completeness": total,
    }
    fh = open(args.out, "w") if args.out else sys.stdout
    write_metadata(fh, config)
    fh.write("energy,overlap,k_index,parity\n")
    for e, w, nk, par in rows:
        fh.write(f"{_fmt(float(e))},{_fmt(float(w))},{nk},{par}\n")
    if fh is not sys.stdout:
        fh.close()
        print(f"wrote {args.out}")
    return 0


def cmd_quench(args):
    bc = BoundaryCondition(args.bc)
    dim = dimension(args.L, bc) if args.model in ("pxp2", "deformed") else 1 << args.L
    _check_dim_guard("quench_dim", dim, KRYLOV_DIM_LIMIT)
    params = ModelParameters(L=args.L, delta=_single_delta(args), bc=bc, chi_drive=args.chi)
    times = np.geomspace(args.tmin, args.tmax, args.tpoints)
    spec = QuenchSpec(
        model=args.model,
        params=params,
        initial=args.initial,
        times=times,
        period=args.period,
    )
    series = run_quench(spec)
    config = {"command": "quench", **series.metadata, "tpoints": args.tpoints}
    fh = open(args.out, "w") if args.out else sys.stdout
    write_metadata(fh, config)
    names = list(series.columns)
    fh.write("t," + ",".join(names) + "\n")
    for m, t in enumerate(series.times):
        fh.write(
            _fmt(float(t))
            + ","
            + ",".join(_fmt(float(series.columns[n][m])) for n in names)
            + "\n"
        )
    if fh is not sys.stdout:
        fh.close()
        print(f"wrote {args.out}")
    return 0


def cmd_growth_scan(args):
    bc = BoundaryCondition(args.bc)
    dim = dimension(args.L, bc) if args.model in ("pxp2", "deformed") else 1 << args.L
    _check_dim_guard("growth_scan_dim", dim, KRYLOV_DIM_LIMIT)
    deltas = _delta_points(args)
    config = {
        "command": "growth-scan",
        "model": args.model,
        "L": args.L,
        "bc": bc.value,
        "chi_drive": args.chi,
        "initial": args.initial,
        "window_lo": args.window[0],
        "window_hi": args.window[1],
        "n_points": len(deltas),
    }
    fh, done = _open_scan_file(args.out, config, "delta,growth_rate")

    def worker(delta):
        rates, _ = growth_rate_scan(
            args.model,
            args.L,
            [delta],
            initial=args.initial,
            window=tuple(args.window),
            chi_drive=args.chi,
        )
        return rates[0]

    def writer(key, pair):
        fh.write(f"{_fmt(pair[0])},{_fmt(pair[1])}\n")
        fh.flush()

    points = [(_fmt(float(d)), float(d)) for d in deltas]
    completed, failures = run_sweep(points, worker, writer, args.threads, skip=done)
    if fh is not sys.stdout:
        fh.close()
    return finish_sweep(completed, failures, args.out)


def cmd_softspin(args):
    deltas = _delta_points(args)
    config = {
        "command": "softspin",
        "L": args.L,
        "J": args.J,
        "n_points": len(deltas),
    }
    fh, done = _open_scan_file(args.out, config, "delta,chi_constraint,lambda,k,omega")

    def worker(delta):
        sol = solve_constraints(delta, coupling=args.J, L=args.L)
        disp = dispersion(sol)
        return sol, disp

    def writer(key, result):
        sol, disp = result
        for k, w in zip(disp.momenta, disp.omega):
            fh.write(
                ",".join(
                    _fmt(v)
                    for v in (sol.delta, sol.chi_constraint, sol.lam, float(k), float(w))
                )
                + "\n"
            )
        fh.flush()

    points = [(_fmt(float(d)), float(d)) for d in deltas]
    completed, failures = run_sweep(points, worker, writer, args.threads, skip=done)
    if fh is not sys.stdout:
        fh.close()
    return finish_sweep(completed, failures, args.out)


def cmd_basis_info(args):
    bc = BoundaryCondition(args.bc)
    closed = dimension(args.L, bc)
    basis = ConstrainedBasis(args.L, bc)
    print(f"L={args.L} bc={bc.value} dim={basis.dim} closed_form={closed}")
    if basis.dim != closed:
        print("enumeration disagrees with the closed form", file=sys.stderr)
        return 1
    if args.dump:
        basis.dump(args.dump)
        print(f"wrote {args.dump}")
    if args.sectors:
        if bc != BoundaryCondition.PERIODIC:
            print("sector summary needs a periodic chain", file=sys.stderr)
            return 2
        rows = sector_summary(build_sectors(basis))
        with open(args.sectors, "w") as fh:
            write_metadata(fh, {"command": "basis-info", "L": args.L, "bc": bc.value})
            fh.write("k_index,parity,dim\n")
            for n_k, par, d in rows:
                fh.write(f"{n_k},{par if par is not None else 0},{d}\n")
        total = sum(r[2] for r in rows)
        print(f"wrote {args.sectors} (total sector dim {total})")
        if total != basis.dim:
            print("sector dimensions do not sum to the basis dimension", file=sys.stderr)
            return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pxp2",
        description="Constrained-chain spectra, scars, and quench dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, bc=True, delta=True, out=True):
        p.add_argument("--L", type=int, required=True)
        if bc:
            p.add_argument("--bc", choices=["open", "periodic"], default="periodic")
        if delta:
            p.add_argument("--delta", type=float, default=None)
            p.add_argument(
                "--delta-range",
                nargs=3,
                type=float,
                metavar=("START", "STOP", "STEPS"),
                default=None,
            )
        if out:
            p.add_argument("--out", default=None)
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("ground-scan", help="ground-state order parameters vs delta")
    common(p)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--broken", action="store_true")
    p.set_defaults(func=cmd_ground_scan)

    p = sub.add_parser("spectral-density", help="momentum-resolved excitation weight")
    common(p)
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--kpoints", nargs="*", type=int, default=None)
    p.add_argument(
        "--omega-range",
        nargs=3,
        type=float,
        default=(0.0, 3.0, 301),
        metavar=("LO", "HI", "N"),
    )
    p.set_defaults(func=cmd_spectral_density)

    p = sub.add_parser("level-stats", help="unfolded spacing statistics, k=0 even sector")
    common(p, bc=False)
    p.set_defaults(func=cmd_level_stats)

    p = sub.add_parser("overlaps", help="eigenstate overlaps with a named state")
    common(p, bc=False)
    p.add_argument("--target", default="Z2")
    p.set_defaults(func=cmd_overlaps)

    p = sub.add_parser("quench", help="time evolution from a named state")
    common(p)
    p.add_argument("--model", choices=["pxp2", "deformed", "lmg", "sublattice_lmg"], default="pxp2")
    p.add_argument("--chi", type=float, default=1.0)
    p.add_argument("--initial", default="Z2")
    p.add_argument("--period", type=int, default=2)
    p.add_argument("--tmin", type=float, default=0.1)
    p.add_argument("--tmax", type=float, default=100.0)
    p.add_argument("--tpoints", type=int, default=200)
    p.set_defaults(func=cmd_quench)

    p = sub.add_parser("growth-scan", help="entropy growth rate vs delta")
    common(p)
    p.add_argument("--model", choices=["pxp2", "deformed"], default="pxp2")
    p.add_argument("--chi", type=float, default=1.0)
    p.add_argument("--initial", default="Z2")
    p.add_argument("--window", nargs=2, type=float, default=(1.0, 10.0), metavar=("LO", "HI"))
    p.set_defaults(func=cmd_growth_scan)

    p = sub.add_parser("softspin", help="soft-spin dispersion and multipliers")
    common(p, bc=False)
    p.add_argument("--J", type=float, default=1.0)
    p.set_defaults(func=cmd_softspin)

    p = sub.add_parser("basis-info", help="dimensions, state dump, sector summary")
    common(p, delta=False, out=False)
    p.add_argument("--dump", default=None)
    p.add_argument("--sectors", default=None)
    p.set_defaults(func=cmd_basis_info)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ConvergenceError, SoftSpinDomainError, StiffnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
