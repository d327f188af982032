"""Command-line interface: ``subpix {match,distance,gen,reduce,cover-stats,bench}``.

Every command prints JSON lines to standard output, one record per result,
each carrying ``schema_version``. Output is assembled in full before it is
written, so a failing command prints nothing on standard output.
Wall-clock fields appear only with ``--timing`` so that default output is a
pure function of the arguments and input files.

Exit codes: 0 success, 2 invalid arguments, 3 missing file, 4 malformed
image or descriptor, 5 cover capacity or work cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import _backend
from .adversarial import AdversarialParams, gen_d1, gen_d2
from .core import (BinaryImage2D, BinaryImage3D, CapacityError, DomainError, GrayImage2D,
                   ImageFormatError, MeteredImage)
from .cover import (DEFAULT_CAP, CoverParams, Cover2D, Cover3DFull, Cover3DRestricted,
                    Family2D, Family3D, IntensityFamily, certify)
from .formats import format_pbm, format_vox3, read_image
from .matcher import (exact_distance, exact_distance_under, match_general, match_smooth,
                      match_smooth_3d, work_cap)
from .reduction import match_grayscale, reduce_to_3d
from .shapes import disk, random_binary
from .transform import AffineMap2D, from_descriptor, to_descriptor, write_descriptor

SCHEMA_VERSION = 1
EXIT_USAGE, EXIT_NOT_FOUND, EXIT_FORMAT, EXIT_CAPACITY = 2, 3, 4, 5


class UsageError(Exception):
    """Invalid argument value; the message names the flag."""


def _record(command: str, **fields) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, **fields}


def _emit(records, stream) -> None:
    text = "".join(json.dumps(r) + "\n" for r in records)
    stream.write(text)
    stream.flush()


# ---------------------------------------------------------------- validation


def _check_epsilon(args):
    if not 0.0 < args.epsilon < 1.0:
        raise UsageError(f"--epsilon must lie in (0, 1), got {args.epsilon}")


def _check_delta(args):
    if not 0.0 < args.delta < math.sqrt(2.0):
        raise UsageError(f"--delta must lie in (0, sqrt(2)), got {args.delta}")


def _check_c(args):
    if args.c < 1.0:
        raise UsageError(f"--c must be >= 1, got {args.c}")


def _check_workers(args):
    if args.workers < 1:
        raise UsageError(f"--workers must be >= 1, got {args.workers}")


def _check_range(flag, value):
    if value is not None and value[1] < value[0]:
        raise UsageError(f"--{flag} needs LO <= HI, got {value[0]} {value[1]}")


def _cap(args):
    return None if args.cap == 0 else args.cap


def _families(args, dim: int = 2):
    """Family boxes from the range flags; ``None`` when no flag was given."""
    flags = ("rotation", "rotation1", "scale", "translation")
    for f in flags + ("con", "bri"):
        _check_range(f, getattr(args, f, None))
    if all(getattr(args, f, None) is None for f in flags):
        planar = None
    else:
        zero = (0.0, 0.0)
        r1 = tuple(args.rotation1) if args.rotation1 else zero
        r2 = tuple(args.rotation) if args.rotation else zero
        scale = tuple(args.scale) if args.scale else (1.0, 1.0)
        trans = tuple(args.translation) if args.translation else None
        if dim == 3:
            planar = Family3D((r1,) * 3, (r2,) * 3, scale, trans)
        else:
            planar = Family2D(r1, r2, scale, trans)
    inten = None
    if getattr(args, "con", None) is not None or getattr(args, "bri", None) is not None:
        inten = IntensityFamily(tuple(args.con) if args.con else None,
                                tuple(args.bri) if args.bri else None)
    return planar, inten


def _load(path, kinds, flag):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{flag}: no such file {path}")
    image = read_image(p)
    if not isinstance(image, kinds):
        names = " or ".join(k.__name__ for k in kinds)
        raise ImageFormatError(f"{flag}: expected {names}, got {type(image).__name__}")
    return image


# ------------------------------------------------------------------ commands


def _transform_record(T, L=None):
    return to_descriptor(T, L)


def cmd_match(args):
    _check_epsilon(args)
    _check_c(args)
    _check_workers(args)
    _check_delta(args)
    kinds = {"3d": (BinaryImage3D,), "gray": (GrayImage2D,)}.get(
        args.mode, (BinaryImage2D, GrayImage2D))
    M1 = MeteredImage(_load(args.m1, kinds, "--m1"))
    M2 = MeteredImage(_load(args.m2, kinds, "--m2"))
    if M1.n != M2.n:
        raise UsageError(f"--m1 and --m2 differ in size ({M1.n} vs {M2.n})")
    family, inten = _families(args, 3 if args.mode == "3d" else 2)
    cap = _cap(args)
    start = time.perf_counter()
    L = None
    if args.mode == "smooth":
        res = match_smooth(M1, M2, args.delta, args.epsilon, args.c, args.seed, family,
                           workers=args.workers, cap=cap)
        T, d, q, extra = res.transform, res.estimated_distance, res.queries_used, res.params
    elif args.mode == "general":
        cover = Cover2D(CoverParams(M1.n, args.delta, args.c), family, cap)
        res = match_general(M1, M2, args.epsilon, cover, args.seed, args.strict_paper,
                            args.workers)
        T, d, q, extra = res.transform, res.estimated_distance, res.queries_used, res.params
    elif args.mode == "exact":
        cover = Cover2D(CoverParams(M1.n, args.delta, args.c), family, cap)
        T, d, idx = exact_distance(M1, M2, args.delta, cover=cover, workers=args.workers,
                                   cap=work_cap())
        q = M1.n * M1.n * cover.size
        extra = dict(delta_prime=args.delta, c=args.c, cover_size=cover.size, index=idx)
    elif args.mode == "3d":
        res = match_smooth_3d(M1, M2, args.delta, args.epsilon, args.c, args.seed, family,
                              workers=args.workers, cap=cap)
        T, d, q, extra = res.transform, res.estimated_distance, res.queries_used, res.params
    else:
        res = match_grayscale(M1, M2, args.delta, args.epsilon, args.c, args.seed, family,
                              inten, workers=args.workers, cap=cap)
        T, L, d = res.transform, res.intensity, res.estimated_distance
        q, extra = res.queries_used, res.params
    rec = _record("match", mode=args.mode, distance=d, transform=_transform_record(T, L),
                  queries=q, seed=args.seed, params=extra)
    if args.timing:
        rec["wall_ms"] = (time.perf_counter() - start) * 1e3
    if args.out:
        write_descriptor(args.out, T, L)
    return [rec]


def cmd_distance(args):
    path = Path(args.t)
    if not path.is_file():
        raise FileNotFoundError(f"--t: no such file {args.t}")
    try:
        record = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ImageFormatError(f"--t: malformed descriptor ({exc})") from exc
    try:
        T, L = from_descriptor(record)
    except DomainError as exc:
        raise ImageFormatError(f"--t: {exc}") from exc
    kinds = (BinaryImage3D,) if not isinstance(T, AffineMap2D) else (BinaryImage2D, GrayImage2D)
    M1 = MeteredImage(_load(args.m1, kinds, "--m1"))
    M2 = MeteredImage(_load(args.m2, kinds, "--m2"))
    if M1.n != M2.n:
        raise UsageError(f"--m1 and --m2 differ in size ({M1.n} vs {M2.n})")
    d = exact_distance_under(M1, M2, T, L)
    return [_record("distance", distance=d, transform=to_descriptor(T, L),
                    queries=M1.reads + M2.reads)]


def cmd_gen(args):
    if args.n < 1:
        raise UsageError(f"--n must be positive, got {args.n}")
    if args.k < 1 or args.n % args.k:
        raise UsageError(f"--k must be a positive divisor of --n, got {args.k}")
    params = AdversarialParams(args.n, args.k, args.seed)
    prefix = args.out_prefix
    if args.family == "d1":
        M1, M2 = gen_d1(params)
        shift = None
    else:
        M1, M2, shift = gen_d2(params, tuple(args.shift) if args.shift else None)
    files = {f"{prefix}_m1.pbm": format_pbm(M1), f"{prefix}_m2.pbm": format_pbm(M2)}
    rec = _record("gen", family=args.family, n=args.n, k=args.k, seed=args.seed,
                  files=sorted(files))
    if shift is not None:
        side = f"{prefix}_shift.json"
        files[side] = (json.dumps({"s_h": shift[0], "s_v": shift[1]}) + "\n").encode()
        rec["shift"] = list(shift)
        rec["files"] = sorted(files)
    for name, data in files.items():
        Path(name).write_bytes(data)
    return [rec]


def cmd_reduce(args):
    M = _load(args.input, (GrayImage2D,), "--in")
    V = reduce_to_3d(M)
    Path(args.out).write_text(format_vox3(V))
    return [_record("reduce", n=M.n, ones=int(V.values.sum()), out=args.out)]


def cmd_cover_stats(args):
    _check_delta(args)
    _check_c(args)
    if args.n < 1:
        raise UsageError(f"--n must be positive, got {args.n}")
    if args.trials < 0:
        raise UsageError(f"--trials must be >= 0, got {args.trials}")
    params = CoverParams(args.n, args.delta, args.c)
    family, inten = _families(args, 3 if args.kind == "3d-full" else 2)
    cap = _cap(args)
    if args.kind == "2d":
        cover = Cover2D(params, family, cap)
    elif args.kind == "3d-restricted":
        cover = Cover3DRestricted(params, family, inten, cap)
    else:
        cover = Cover3DFull(params, family, cap)
    rec = _record("cover-stats", kind=args.kind, members=cover.size,
                  cardinalities=cover.cardinalities(), delta=params.delta,
                  delta_prime=params.delta_prime, c=params.c, n=params.n)
    if args.trials:
        cert = certify(cover, args.trials, args.seed)
        rec.update(trials=cert.trials, pass_rate=cert.pass_rate,
                   max_distance=cert.max_distance, radius=cert.radius)
    return [rec]


def cmd_bench(args):
    _check_epsilon(args)
    _check_delta(args)
    _check_workers(args)
    kernels = _backend.get_kernels(args.backend)
    rows = []
    for n in args.n:
        if n < 8:
            raise UsageError(f"--n values must be >= 8, got {n}")
        start = time.perf_counter()
        if args.mode == "smooth":
            M2 = disk(n, (0.45 * n, 0.55 * n), 0.2 * n)
            M1, M2 = MeteredImage(M2), MeteredImage(M2)
            fam = Family2D((0.0, 0.0), (-0.05, 0.05), (1.0, 1.0), (-0.1, 0.1))
            res = match_smooth(M1, M2, args.delta, args.epsilon, rng_seed=args.seed,
                               family=fam, workers=args.workers, kernels=kernels)
        else:
            rng = np.random.default_rng([args.seed, n])
            M1 = MeteredImage(random_binary(n, rng))
            M2 = MeteredImage(random_binary(n, rng))
            res = match_general(M1, M2, args.epsilon, [AffineMap2D.identity()], args.seed,
                                workers=args.workers, kernels=kernels)
        row = _record("bench", mode=args.mode, n=n, delta_prime=args.delta,
                      epsilon=args.epsilon, queries=res.queries_used,
                      distance=res.estimated_distance)
        if args.timing:
            row["wall_ms"] = (time.perf_counter() - start) * 1e3
            row["backend"] = kernels.NAME
        rows.append(row)
    return rows


# ------------------------------------------------------------------- parser


def _add_family_flags(p, intensity=False):
    g = p.add_argument_group("family (defaults to the full family when none is given)")
    g.add_argument("--rotation", nargs=2, type=float, metavar=("LO", "HI"),
                   help="range of the second rotation angle (radians)")
    g.add_argument("--rotation1", nargs=2, type=float, metavar=("LO", "HI"),
                   help="range of the first rotation angle (radians)")
    g.add_argument("--scale", nargs=2, type=float, metavar=("LO", "HI"))
    g.add_argument("--translation", nargs=2, type=float, metavar=("LO", "HI"),
                   help="translation range in units of n + 1")
    if intensity:
        g.add_argument("--con", nargs=2, type=float, metavar=("LO", "HI"))
        g.add_argument("--bri", nargs=2, type=float, metavar=("LO", "HI"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subpix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="find a transformation between two images")
    p.add_argument("--mode", choices=["smooth", "general", "exact", "3d", "gray"],
                   default="smooth")
    p.add_argument("--m1", required=True)
    p.add_argument("--m2", required=True)
    p.add_argument("--delta", type=float, default=0.5, help="cover radius as a fraction of n")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--c", type=float, default=2.0, help="scaling bound")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict-paper", action="store_true",
                   help="general mode: literal discard rule and objective")
    p.add_argument("--out", help="write the transform descriptor here")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="cover size cap (0: none)")
    p.add_argument("--timing", action="store_true")
    _add_family_flags(p, intensity=True)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("distance", help="exact distance under a given transformation")
    p.add_argument("--t", required=True, help="transform descriptor (JSON)")
    p.add_argument("--m1", required=True)
    p.add_argument("--m2", required=True)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("gen", help="generate an adversarial instance pair")
    p.add_argument("--family", choices=["d1", "d2"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shift", nargs=2, type=int, metavar=("S_H", "S_V"))
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("reduce", help="convert a PGM image to a VOX3 volume")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("cover-stats", help="size and certificate of a cover")
    p.add_argument("--kind", choices=["2d", "3d-restricted", "3d-full"], default="2d")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=0, help="cover size cap (0: none)")
    _add_family_flags(p, intensity=True)
    p.set_defaults(func=cmd_cover_stats)

    p = sub.add_parser("bench", help="query counts across image sizes")
    p.add_argument("--mode", choices=["smooth", "general"], default="smooth")
    p.add_argument("--n", type=int, nargs="+", default=[64, 128, 256])
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=_backend.available())
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        records = args.func(args)
    except UsageError as exc:
        print(f"subpix {args.command}: error: {exc}", file=stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"subpix {args.command}: error: {exc}", file=stderr)
        return EXIT_NOT_FOUND
    except ImageFormatError as exc:
        print(f"subpix {args.command}: error: {exc}", file=stderr)
        return EXIT_FORMAT
    except CapacityError as exc:
        print(f"subpix {args.command}: error: {exc}", file=stderr)
        return EXIT_CAPACITY
    except DomainError as exc:
        print(f"subpix {args.command}: error: {exc}", file=stderr)
        return EXIT_USAGE
    _emit(records, stdout)
    return 0


def main() -> None:
    sys.exit(run())
