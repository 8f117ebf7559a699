"""Command-line interface wiring the library into an experiment workflow.

Commands: ``simulate`` (measure a ground-truth cube), ``reconstruct``
(patch-based fusion of the measurements), ``eval`` (metrics CSV),
``sweep`` (simulate+reconstruct+eval over a varied parameter) and
``analyze`` (patch vs. global singular spectra).

Every command writes a manifest of its configuration; rerunning with
``--config <manifest>`` reproduces the outputs bit-exactly (explicit flags
win over config values). Exit codes: 0 success, 2 usage or constraint
error, 3 I/O or file-format error, 4 numerical failure.
"""

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, core, forward, fusion, metrics
from . import io as hio
from .numeric import RankDeficiencyError

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


def _bool_word(text):
    word = str(text).strip().lower()
    if word in _TRUE_WORDS:
        return True
    if word in _FALSE_WORDS:
        return False
    raise ValueError(f"expected a boolean word, got {text!r}")


def _build_simulate(sub):
    p = sub.add_parser("simulate", help="simulate coded + multiband measurements of a cube")
    p.add_argument("--in", dest="in_path", required=True, help="ground-truth cube (HSC1)")
    p.add_argument("--mask-seed", type=int, default=0, help="seed for the coded mask")
    p.add_argument("--density", type=float, default=0.5, help="mask ones density in (0, 1]")
    p.add_argument(
        "--response",
        default="average",
        help="spectral response: average[:C] | single:i,j,... | file:PATH",
    )
    p.add_argument("--noise-sigma", type=float, default=0.0, help="additive Gaussian noise std")
    p.add_argument("--noise-seed", type=int, default=1, help="seed for the noise stream")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--config", help="key = value file providing flag defaults")
    p.set_defaults(func=_run_simulate)
    return p


def _build_reconstruct(sub):
    p = sub.add_parser("reconstruct", help="reconstruct a cube from measurements")
    p.add_argument("--y", required=True, help="coded measurement (1-band HSC1)")
    p.add_argument("--z", required=True, help="multiband measurement (HSC1)")
    p.add_argument("--mask", required=True, help="mask cube (HSC1)")
    p.add_argument("--rank", type=int, default=3, help="spectral subspace rank")
    p.add_argument("--patch", default="100", help="patch size m or m,n")
    p.add_argument("--stride", type=int, default=None, help="patch stride (default m//2)")
    p.add_argument("--improved", action="store_true", help="joint coded+multiband basis solve")
    p.add_argument("--response", default=None, help="response file (required with --improved)")
    p.add_argument("--threads", type=int, default=None, help="patch workers (default: cpu count)")
    p.add_argument("--out", required=True, help="output cube path")
    p.add_argument("--config", help="key = value file providing flag defaults")
    p.set_defaults(func=_run_reconstruct)
    return p


def _build_eval(sub):
    p = sub.add_parser("eval", help="metrics of an estimate against a reference")
    p.add_argument("--ref", required=True, help="reference cube (HSC1)")
    p.add_argument("--est", required=True, help="estimated cube (HSC1)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--peak", default="1.0", help="PSNR/SSIM peak value, or 'refmax'")
    p.add_argument("--scene", default=None, help="scene label (default: reference stem)")
    p.add_argument("--method", default="eval", help="method label")
    p.add_argument("--rank", type=int, default=0, help="rank label for the CSV row")
    p.add_argument("--patch", default="0", help="patch label for the CSV row")
    p.add_argument("--stride", type=int, default=0, help="stride label for the CSV row")
    p.add_argument("--config", help="key = value file providing flag defaults")
    p.set_defaults(func=_run_eval)
    return p


def _build_sweep(sub):
    p = sub.add_parser("sweep", help="simulate+reconstruct+eval over a varied parameter")
    p.add_argument("--in", dest="in_path", required=True, help="ground-truth cube (HSC1)")
    p.add_argument("--vary", required=True, choices=("rank", "patch", "response"))
    p.add_argument(
        "--values",
        required=True,
        help="comma-separated values (';'-separated for --vary response)",
    )
    p.add_argument("--mask-seed", type=int, default=0)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--response", default="average")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--noise-seed", type=int, default=1)
    p.add_argument("--rank", type=int, default=3)
    p.add_argument("--patch", default="100")
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--improved", action="store_true")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--config", help="key = value file providing flag defaults")
    p.set_defaults(func=_run_sweep)
    return p


def _build_analyze(sub):
    p = sub.add_parser("analyze", help="patch vs. global singular spectra of a cube")
    p.add_argument("--in", dest="in_path", required=True, help="cube to analyse (HSC1)")
    p.add_argument("--patch", type=int, default=100, help="square patch size")
    p.add_argument("--samples", type=int, default=100, help="number of random patches")
    p.add_argument("--seed", type=int, default=0, help="seed for patch placement")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--config", help="key = value file providing flag defaults")
    p.set_defaults(func=_run_analyze)
    return p


# per-command coercers turning manifest/config strings back into flag values
_COERCERS = {
    "simulate": {
        "in_path": str, "mask_seed": int, "density": float, "response": str,
        "noise_sigma": float, "noise_seed": int, "out_dir": str,
    },
    "reconstruct": {
        "y": str, "z": str, "mask": str, "rank": int, "patch": str, "stride": int,
        "improved": _bool_word, "response": str, "threads": int, "out": str,
    },
    "eval": {
        "ref": str, "est": str, "out": str, "peak": str, "scene": str,
        "method": str, "rank": int, "patch": str, "stride": int,
    },
    "sweep": {
        "in_path": str, "vary": str, "values": str, "mask_seed": int, "density": float,
        "response": str, "noise_sigma": float, "noise_seed": int, "rank": int,
        "patch": str, "stride": int, "improved": _bool_word, "threads": int, "out": str,
    },
    "analyze": {"in_path": str, "patch": int, "samples": int, "seed": int, "out": str},
}

_IGNORED_CONFIG_KEYS = {"command", "version"}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="hsfuse",
        description="Dual-camera compressive hyperspectral simulation and fusion reconstruction.",
    )
    parser.add_argument("--version", action="version", version=f"hsfuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "simulate": _build_simulate(sub),
        "reconstruct": _build_reconstruct(sub),
        "eval": _build_eval(sub),
        "sweep": _build_sweep(sub),
        "analyze": _build_analyze(sub),
    }
    return parser, commands


def _config_defaults(config_path, command):
    entries = hio.read_manifest(config_path)
    coercers = _COERCERS[command]
    declared = entries.pop("command", None)
    if declared is not None and declared != command:
        raise UsageError(
            f"config {config_path} was written for '{declared}', not '{command}'"
        )
    defaults = {}
    for key, value in entries.items():
        if key in _IGNORED_CONFIG_KEYS:
            continue
        if key not in coercers:
            raise UsageError(f"config {config_path}: unknown key {key!r} for {command}")
        if value == "":
            continue
        try:
            defaults[key] = coercers[key](value)
        except ValueError as err:
            raise UsageError(f"config {config_path}: bad value for {key!r}: {err}") from err
    return defaults


def _parse_args(argv):
    # lenient pre-parse: find the command and --config before enforcing
    # required flags, so a config file can stand in for them
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    parser, commands = _build_parser()
    if known.config and known.command in commands:
        defaults = _config_defaults(known.config, known.command)
        subparser = commands[known.command]
        for action in subparser._actions:
            if action.dest in defaults:
                action.required = False
        subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


class UsageError(Exception):
    """Invalid flag combination or violated constraint (exit code 2)."""


def _parse_patch(text):
    parts = str(text).split(",")
    try:
        dims = [int(p) for p in parts]
    except ValueError as err:
        raise UsageError(f"bad --patch value {text!r}: {err}") from err
    if len(dims) == 1:
        return dims[0], dims[0]
    if len(dims) == 2:
        return dims[0], dims[1]
    raise UsageError(f"--patch takes m or m,n, got {text!r}")


def _threads(args):
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.threads
    return os.cpu_count() or 1


def _manifest_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    return value


def _write_manifest(path, command, pairs):
    entries = {"command": command, "version": __version__}
    entries.update({k: _manifest_value(v) for k, v in pairs.items()})
    hio.write_manifest(path, entries)


def _run_simulate(args):
    truth = hio.read_cube(args.in_path)
    rows, cols, bands = truth.shape
    response = forward.response_from_spec(args.response, bands)
    mask = forward.gen_mask(rows, cols, bands, args.mask_seed, args.density)
    y = forward.simulate_cassi(truth, mask)
    z = forward.simulate_multiband(truth, response)
    if args.noise_sigma > 0:
        y = forward.add_noise(y, args.noise_sigma, args.noise_seed)
        z = forward.add_noise(z, args.noise_sigma, args.noise_seed + 1)
    elif args.noise_sigma < 0:
        raise UsageError(f"--noise-sigma must be nonnegative, got {args.noise_sigma}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    hio.write_cube(y[:, :, None], out_dir / "y.hsc")
    hio.write_cube(z, out_dir / "z.hsc")
    hio.write_cube(mask, out_dir / "mask.hsc")
    hio.save_response(response, out_dir / "response.txt")
    _write_manifest(
        out_dir / "manifest.txt",
        "simulate",
        {
            "in_path": args.in_path,
            "mask_seed": args.mask_seed,
            "density": args.density,
            "response": args.response,
            "noise_sigma": args.noise_sigma,
            "noise_seed": args.noise_seed,
            "out_dir": args.out_dir,
        },
    )
    dead = forward.zero_spectrum_pixels(mask)
    if dead:
        plural = "pixel has" if dead == 1 else "pixels have"
        print(f"note: {dead} mask {plural} an all-zero spectrum (no coded signal there)")
    print(f"wrote y.hsc, z.hsc, mask.hsc, response.txt, manifest.txt to {out_dir}")


def _load_measurements(args):
    y3 = hio.read_cube(args.y)
    if y3.shape[2] != 1:
        raise UsageError(f"coded measurement must have 1 band, got {y3.shape[2]}")
    z = hio.read_cube(args.z)
    mask = hio.read_cube(args.mask)
    return y3[:, :, 0], z, mask


def _run_reconstruct(args):
    if args.improved and not args.response:
        raise UsageError("--improved requires --response (the base solve does not)")
    m, n = _parse_patch(args.patch)
    stride = args.stride if args.stride is not None else max(1, m // 2)
    threads = _threads(args)
    y, z, mask = _load_measurements(args)
    bands = mask.shape[2]
    if args.rank < 1 or args.rank > z.shape[2]:
        raise UsageError(f"--rank must be in [1, {z.shape[2]}] for {z.shape[2]} channels")
    if m * n <= args.rank * bands:
        raise UsageError(
            f"patch area m*n = {m * n} must exceed rank*bands = {args.rank * bands}"
        )
    response = hio.load_response(args.response) if args.response else None
    config = fusion.FusionConfig(
        rank=args.rank, patch_rows=m, patch_cols=n, stride=stride, improved=args.improved
    )
    start = time.perf_counter()
    xhat = fusion.pfuse(y, z, mask, config, workers=threads, response=response)
    wall = time.perf_counter() - start
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    hio.write_cube(xhat, out)
    _write_manifest(
        Path(str(out) + ".manifest.txt"),
        "reconstruct",
        {
            "y": args.y,
            "z": args.z,
            "mask": args.mask,
            "rank": args.rank,
            "patch": f"{m},{n}",
            "stride": stride,
            "improved": args.improved,
            "response": args.response,
            "threads": threads,
            "out": args.out,
        },
    )
    print(f"wrote {out} ({wall:.2f} s)")


def _peak_value(text):
    if str(text).strip().lower() == "refmax":
        return None
    try:
        return float(text)
    except ValueError as err:
        raise UsageError(f"bad --peak value {text!r}") from err


def _run_eval(args):
    ref = hio.read_cube(args.ref)
    est = hio.read_cube(args.est)
    peak = _peak_value(args.peak)
    start = time.perf_counter()
    report = metrics.evaluate(
        ref, est, peak=1.0 if peak is None else peak, per_band_peak=peak is None
    )
    wall = time.perf_counter() - start
    scene = args.scene if args.scene is not None else Path(args.ref).stem
    m_label, _ = _parse_patch(args.patch)
    row = hio.ReportRow(
        scene=scene,
        method=args.method,
        rank=args.rank,
        patch=m_label,
        stride=args.stride,
        m_psnr=report.m_psnr,
        m_ssim=report.m_ssim,
        msa=report.msa,
        wall_seconds=wall,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    hio.write_report([row], out)
    _write_manifest(
        Path(str(out) + ".manifest.txt"),
        "eval",
        {
            "ref": args.ref,
            "est": args.est,
            "out": args.out,
            "peak": args.peak,
            "scene": scene,
            "method": args.method,
            "rank": args.rank,
            "patch": args.patch,
            "stride": args.stride,
        },
    )
    print(
        f"m_psnr = {report.m_psnr:.6g} dB, m_ssim = {report.m_ssim:.6g}, "
        f"msa = {report.msa:.6g} deg"
    )


def _sweep_values(args):
    sep = ";" if args.vary == "response" else ","
    values = [v.strip() for v in args.values.split(sep) if v.strip()]
    if not values:
        raise UsageError("--values is empty")
    return values


def _run_sweep(args):
    truth = hio.read_cube(args.in_path)
    rows, cols, bands = truth.shape
    base_m, base_n = _parse_patch(args.patch)
    threads = _threads(args)
    scene = Path(args.in_path).stem
    report_rows = []
    for value in _sweep_values(args):
        rank, (m, n), resp_spec = args.rank, (base_m, base_n), args.response
        if args.vary == "rank":
            rank = int(value)
            if resp_spec.partition(":")[0] == "average":
                # the multiband channel count tracks the requested rank
                resp_spec = f"average:{rank}"
        elif args.vary == "patch":
            m = n = int(value)
        else:
            resp_spec = value
        stride = args.stride if args.stride is not None else max(1, m // 2)
        response = forward.response_from_spec(resp_spec, bands)
        if rank < 1 or rank > response.shape[1]:
            raise UsageError(
                f"rank {rank} is out of range for {response.shape[1]} channels ({resp_spec})"
            )
        if m * n <= rank * bands:
            raise UsageError(f"patch area m*n = {m * n} must exceed rank*bands = {rank * bands}")
        mask = forward.gen_mask(rows, cols, bands, args.mask_seed, args.density)
        y = forward.simulate_cassi(truth, mask)
        z = forward.simulate_multiband(truth, response)
        if args.noise_sigma > 0:
            y = forward.add_noise(y, args.noise_sigma, args.noise_seed)
            z = forward.add_noise(z, args.noise_sigma, args.noise_seed + 1)
        config = fusion.FusionConfig(
            rank=rank, patch_rows=m, patch_cols=n, stride=stride, improved=args.improved
        )
        start = time.perf_counter()
        xhat = fusion.pfuse(y, z, mask, config, workers=threads, response=response)
        wall = time.perf_counter() - start
        report = metrics.evaluate(truth, xhat)
        report_rows.append(
            hio.ReportRow(
                scene=scene,
                method="pfusion-improved" if args.improved else "pfusion",
                rank=rank,
                patch=m,
                stride=stride,
                m_psnr=report.m_psnr,
                m_ssim=report.m_ssim,
                msa=report.msa,
                wall_seconds=wall,
            )
        )
        print(f"{args.vary} = {value}: m_psnr = {report.m_psnr:.6g} dB")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    hio.write_report(report_rows, out)
    _write_manifest(
        Path(str(out) + ".manifest.txt"),
        "sweep",
        {
            "in_path": args.in_path,
            "vary": args.vary,
            "values": args.values,
            "mask_seed": args.mask_seed,
            "density": args.density,
            "response": args.response,
            "noise_sigma": args.noise_sigma,
            "noise_seed": args.noise_seed,
            "rank": args.rank,
            "patch": args.patch,
            "stride": args.stride if args.stride is not None else "",
            "improved": args.improved,
            "threads": threads,
            "out": args.out,
        },
    )


def _run_analyze(args):
    cube = hio.read_cube(args.in_path)
    rows, cols, _ = cube.shape
    m = args.patch
    if m < 1 or m > min(rows, cols):
        raise UsageError(f"--patch must be in [1, {min(rows, cols)}]")
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    rng = forward.Pcg32(args.seed)
    u = rng.uniform(2 * args.samples)
    patches = []
    for t in range(args.samples):
        i0 = int(u[2 * t] * (rows - m + 1))
        j0 = int(u[2 * t + 1] * (cols - m + 1))
        patches.append(core.extract_patch(cube, (i0, j0), m, m))
    patch_log = metrics.mean_log_singular_spectrum(patches)
    with np.errstate(divide="ignore"):
        global_log = np.log10(metrics.singular_spectrum(cube))
    length = min(patch_log.shape[0], global_log.shape[0])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    hio.write_table(
        out,
        ("index", "patch_mean_log10_sigma", "global_log10_sigma"),
        [(t + 1, float(patch_log[t]), float(global_log[t])) for t in range(length)],
    )
    _write_manifest(
        Path(str(out) + ".manifest.txt"),
        "analyze",
        {
            "in_path": args.in_path,
            "patch": args.patch,
            "samples": args.samples,
            "seed": args.seed,
            "out": args.out,
        },
    )
    print(f"wrote {length} singular-value rows to {out}")


def main(argv=None):
    """Entry point; returns the process exit code."""
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        args = _parse_args(argv)
        args.func(args)
        return 0
    except SystemExit as exc:  # argparse usage errors and --help/--version
        code = exc.code
        return code if isinstance(code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"hsfuse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RankDeficiencyError as exc:
        print(f"hsfuse: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (hio.FormatError, OSError) as exc:
        print(f"hsfuse: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"hsfuse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
