"""Command-line front end: ``convexbp {phantom,simulate,reconstruct,kernel,roundtrip}``.

Exit codes: 0 success, 1 numeric failure (including a breached ``--check``
tolerance), 2 usage or configuration error, 3 I/O error.
"""
import argparse
import os
import sys

import numpy as np

from . import io as cio
from .errors import ConvexBPError, FormatError, SupportViolation
from .forward import (DEFAULT_ANGLES, DEFAULT_RADII, DEFAULT_TIMES, MeansData, TMAX_FACTOR,
                      WaveData, circular_means, wave_from_means)
from .geometry import DEFAULT_NODES, load_domain
from .inversion import FORMULAS, backproject, relative_difference, residual_vs_kernel
from .phantoms import error_metrics, lattice_for, load_phantom, random_phantom, rasterize

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DEFAULT_GRID = 128
DEFAULT_KERNEL_GRID = 64


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


def _count(text):
    v = int(text)
    if v < 8:
        raise argparse.ArgumentTypeError("counts must be >= 8")
    return v


def _tmax_factor(text):
    v = float(text)
    if not v >= 2.0:
        raise argparse.ArgumentTypeError("T_max factor must be >= 2")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="convexbp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", required=True, metavar="FILE", help="domain spec file")
    common.add_argument("--nb", type=_count, default=None,
                        help=f"boundary nodes (default {DEFAULT_NODES})")
    common.add_argument("--grid", type=_count, default=None, help="image size N (N x N)")
    common.add_argument("--out", default=".", metavar="DIR", help="output directory")
    common.add_argument("--threads", type=_positive_int, default=1)

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--phantom", metavar="FILE",
                        help="phantom spec file (default: random bumps from --seed)")
    source.add_argument("--seed", type=int, default=42)

    fwd = argparse.ArgumentParser(add_help=False)
    fwd.add_argument("--nr", type=_count, default=DEFAULT_RADII, help="radius samples")
    fwd.add_argument("--nt", type=_count, default=DEFAULT_TIMES, help="time samples")
    fwd.add_argument("--tmax-factor", type=_tmax_factor, default=TMAX_FACTOR,
                     help="T_max as a multiple of the domain diameter")
    fwd.add_argument("--sample", choices=("exact", "grid"), default="exact",
                     help="evaluate the phantom exactly or from its raster")
    fwd.add_argument("--angles", type=_count, default=DEFAULT_ANGLES,
                     help="angular nodes per circle")

    recon = argparse.ArgumentParser(add_help=False)
    recon.add_argument("--formula", choices=FORMULAS, default="wave-b")
    recon.add_argument("--compare", choices=FORMULAS, default=None,
                       help="also run this formula and report the cross-difference")
    check = argparse.ArgumentParser(add_help=False)
    check.add_argument("--check", type=float, default=None, metavar="TOL",
                       help="exit 1 if the error (or gap) exceeds TOL")

    ph = sub.add_parser("phantom", parents=[common], help="write a random bump phantom")
    ph.add_argument("--seed", type=int, default=42)
    ph.add_argument("--bumps", type=_positive_int, default=3)

    sub.add_parser("simulate", parents=[common, source, fwd], help="forward data to BSER files")

    rc = sub.add_parser("reconstruct", parents=[common, recon, check],
                        help="reconstruct from a BSER file")
    rc.add_argument("--data", required=True, metavar="FILE", help="means or wave BSER file")
    rc.add_argument("--phantom", metavar="FILE", help="reference phantom for metrics")

    kn = sub.add_parser("kernel", parents=[common, source, fwd, check],
                        help="compare f - BP f with K f")
    kn.add_argument("--directions", type=_count, default=1024,
                    help="kernel directions")
    kn.add_argument("--dump-profiles", metavar="DIR", default=None,
                    help="also write the per-direction kernel tables to DIR")

    sub.add_parser("roundtrip", parents=[common, source, fwd, recon, check],
                   help="simulate, reconstruct and score in one run")
    return p


def _domain(args, nb=None):
    try:
        return load_domain(args.domain, n_nodes=nb or args.nb or DEFAULT_NODES)
    except FormatError as exc:
        raise UsageError(f"{args.domain}: {exc}") from None


def _phantom(args, domain):
    if getattr(args, "phantom", None):
        try:
            ph = load_phantom(args.phantom)
        except FormatError as exc:
            raise UsageError(f"{args.phantom}: {exc}") from None
    else:
        ph = random_phantom(domain, seed=args.seed)
    ph.check_support(domain)
    return ph


def _path(args, name):
    return os.path.join(args.out, name)


def _forward(args, domain, phantom):
    n_grid = args.grid or DEFAULT_GRID
    source = phantom
    if args.sample == "grid":
        source = rasterize(phantom, lattice_for(domain, n_grid), domain)
    means = circular_means(source, domain, n_r=args.nr, n_ang=args.angles)
    t_max = args.tmax_factor * domain.diameter()
    wave = wave_from_means(means, n_t=args.nt, t_max=t_max)
    meta = {"domain": domain.spec_line(), "phantom": phantom.to_text(), "nb": len(domain.nodes),
            "nr": args.nr, "nt": args.nt, "r_max": means.extent, "dr": means.step,
            "t_max": wave.extent, "dt": wave.step, "tmax_factor": args.tmax_factor,
            "angles": args.angles, "sample": args.sample, "seed": args.seed}
    if args.sample == "grid":
        meta["sample_grid"] = n_grid
    return means, wave, meta


def _reconstruct(args, domain, data, phantom, lattice):
    rec = backproject(domain, data, args.formula, lattice, threads=args.threads)
    metrics = {"formula": args.formula}
    if phantom is not None:
        truth = rasterize(phantom, lattice, domain)
        metrics.update(error_metrics(rec.image, truth, rec.mask))
    if args.compare:
        if args.compare.startswith("wave") and isinstance(data, MeansData):
            raise UsageError("--compare with a wave formula needs wave data")
        if args.compare.startswith("means") and isinstance(data, WaveData):
            raise UsageError("--compare with a means formula needs means data")
        other = backproject(domain, data, args.compare, lattice, threads=args.threads)
        metrics["compare"] = args.compare
        metrics["cross_difference"] = relative_difference(other.image, rec.image, rec.mask)
    return rec, metrics


def _check(args, value, what):
    if args.check is not None and not value <= args.check:
        raise CheckFailed(f"{what} = {value:.6g} exceeds --check {args.check:g}")


def cmd_phantom(args):
    domain = _domain(args)
    ph = random_phantom(domain, n_bumps=args.bumps, seed=args.seed)
    lattice = lattice_for(domain, args.grid or DEFAULT_GRID)
    with open(_path(args, "phantom.txt"), "w", newline="\n") as fh:
        fh.write(ph.to_text())
    cio.write_grid2(_path(args, "phantom.grid2"), rasterize(ph, lattice, domain))


def cmd_simulate(args):
    domain = _domain(args)
    ph = _phantom(args, domain)
    means, wave, meta = _forward(args, domain, ph)
    cio.write_bser(_path(args, "means.bser"), means)
    cio.write_bser(_path(args, "wave.bser"), wave)
    _write_meta(args, "simulate.jsonl", [dict(meta, file="means.bser", kind="means"),
                                         dict(meta, file="wave.bser", kind="wave")])


def cmd_reconstruct(args):
    try:
        data = cio.read_bser(args.data)
    except FormatError as exc:
        raise OSError(f"{args.data}: {exc}") from None
    if args.nb is not None and args.nb != data.centers.shape[0]:
        raise UsageError(f"--nb {args.nb} but the data has {data.centers.shape[0]} centers")
    domain = _domain(args, nb=data.centers.shape[0])
    if not isinstance(data, (MeansData, WaveData)):
        raise UsageError(f"cannot reconstruct from {data.kind} data")
    if args.formula.startswith("wave") != isinstance(data, WaveData):
        raise UsageError(f"formula {args.formula} does not fit {data.kind} data")
    phantom = _phantom(args, domain) if args.phantom else None
    lattice = lattice_for(domain, args.grid or DEFAULT_GRID)
    rec, metrics = _reconstruct(args, domain, data, phantom, lattice)
    _finish_recon(args, domain, rec, metrics, {"data": data.kind, "n_samples": data.values.shape[1],
                                               "step": data.step, "extent": data.extent})


def _finish_recon(args, domain, rec, metrics, extra):
    cio.write_grid2(_path(args, "recon.grid2"), rec.image)
    cio.write_json(_path(args, "metrics.json"), metrics)
    mask_rows = ["".join("1" if v else "0" for v in row) for row in rec.mask]
    meta = dict(rec.meta, domain=domain.spec_line(), **extra)
    meta["mask"] = mask_rows
    meta.update({k: v for k, v in metrics.items() if k not in meta})
    _write_meta(args, "reconstruct.jsonl", [meta])
    if "rel_l2" in metrics:
        _check(args, metrics["rel_l2"], "rel_l2")
    if "cross_difference" in metrics:
        _check(args, metrics["cross_difference"], "cross_difference")


def cmd_roundtrip(args):
    domain = _domain(args)
    ph = _phantom(args, domain)
    means, wave, fmeta = _forward(args, domain, ph)
    data = wave if args.formula.startswith("wave") else means
    lattice = lattice_for(domain, args.grid or DEFAULT_GRID)
    rec = backproject(domain, data, args.formula, lattice, threads=args.threads)
    truth = rasterize(ph, lattice, domain)
    metrics = {"formula": args.formula, **error_metrics(rec.image, truth, rec.mask)}
    if args.compare:
        other_data = wave if args.compare.startswith("wave") else means
        other = backproject(domain, other_data, args.compare, lattice, threads=args.threads)
        metrics["compare"] = args.compare
        metrics["cross_difference"] = relative_difference(other.image, rec.image, rec.mask)
    _finish_recon(args, domain, rec, metrics, {k: fmeta[k] for k in
                                               ("phantom", "nr", "nt", "t_max", "r_max",
                                                "sample", "seed", "angles")})


def cmd_kernel(args):
    from .radon_hilbert import KernelCache

    domain = _domain(args)
    ph = _phantom(args, domain)
    grid = args.grid or DEFAULT_KERNEL_GRID
    t_max = args.tmax_factor * domain.diameter()
    cache = None
    if domain.kind not in ("disc", "ellipse"):
        cache = KernelCache(domain, n_dirs=args.directions)
    residual, kfield, gap, mask = residual_vs_kernel(domain, ph, grid=grid, n_r=args.nr,
                                                     n_t=args.nt, t_max=t_max, cache=cache,
                                                     threads=args.threads)
    f_norm = np.linalg.norm(rasterize(ph, lattice_for(domain, grid)).values[mask])
    record = {"domain": domain.spec_line(), "phantom": ph.to_text(), "grid": grid,
              "nb": len(domain.nodes), "nr": args.nr, "nt": args.nt, "t_max": t_max,
              "rel_gap": gap,
              "residual_rel": float(np.linalg.norm(residual.values[mask]) / f_norm),
              "kernel_rel": float(np.linalg.norm(kfield.values[mask]) / f_norm)}
    if cache is not None:
        record["kernel_cache"] = cache.metadata
    cio.write_grid2(_path(args, "kernel_field.grid2"), kfield)
    cio.write_grid2(_path(args, "residual.grid2"), residual)
    cio.write_json(_path(args, "gap.json"), record)
    if args.dump_profiles and cache is not None:
        os.makedirs(args.dump_profiles, exist_ok=True)
        cio.write_kernel_profiles(os.path.join(args.dump_profiles, "kernel_profiles.txt"), cache)
    _check(args, gap, "rel_gap")


def _write_meta(args, name, records):
    with open(_path(args, name), "w", newline="\n") as fh:
        for rec in records:
            fh.write(cio.metadata_line(rec))


COMMANDS = {"phantom": cmd_phantom, "simulate": cmd_simulate, "reconstruct": cmd_reconstruct,
            "kernel": cmd_kernel, "roundtrip": cmd_roundtrip}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if not os.path.isdir(args.out):
            raise OSError(f"output directory {args.out!r} does not exist")
        COMMANDS[args.command](args)
    except CheckFailed as exc:
        print(f"convexbp: check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, SupportViolation, TypeError) as exc:
        print(f"convexbp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"convexbp: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConvexBPError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"convexbp: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"convexbp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
