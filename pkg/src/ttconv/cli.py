"""Command-line surface: verification sweeps, potential/benchmark runs, HF demo.

Exit codes: 0 success, 1 usage or configuration, 2 numerical failure
(tolerance not reached, verification failure, divergence), 3 I/O failure.
Reports are CSV (fixed column order) or JSON (array of objects mirroring the
CSV rows); writes are atomic.  BLAS thread count follows the usual
OMP_NUM_THREADS / MKL_NUM_THREADS environment variables.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time

import numpy as np

from .conv import ConvOperands, cross_conv_with_stats
from .cross import CrossConfig, ToleranceNotReached
from .dense import KernelTable, dense_convolve_naive
from .hf import HFDivergenceError, HFOptions, NucleiSpec, hf_solve
from .kernels import (
    DensityFunction,
    GridSpec,
    gaussian_potential_exact,
    newton_potential,
)
from .tt import tt_elements, tt_random, tt_to_dense
from .tt_io import TTFormatError, tt_read, tt_write

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

HF_LIMIT_HELIUM = -2.861679  # complete-grid reference energy, Hartree


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _write_report(rows, columns, out, fmt):
    """Serialize rows (list of dicts) deterministically; atomic file replace."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row.get(c, "") for c in columns})
        payload = buf.getvalue()
    elif fmt == "json":
        payload = json.dumps(
            [{c: row.get(c) for c in columns} for row in rows], indent=2
        ) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if out is None:
        sys.stdout.write(payload)
        return
    directory = os.path.dirname(os.path.abspath(out)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".report-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.12e}"
    return x


def _ranks_str(ranks):
    return "x".join(str(r) for r in ranks[1:-1]) or "1"


def cmd_verify(args):
    """Cross-conv vs the dense naive oracle over a small parameter grid."""
    d_list = args.d_list or [1, 2, 3]
    n_list = args.n_list or [8, 16]
    eps_list = args.eps_list or [1e-4, 1e-8]
    cap_bytes = args.max_mem_gib * 2**30
    for d in d_list:
        for n in n_list:
            need_bytes = (2 * n - 1) ** d * 16 * 6
            if need_bytes > cap_bytes:
                print(
                    f"refusing: dense oracle for d={d}, n={n} needs about "
                    f"{need_bytes / 2**30:.2f} GiB (> cap {args.max_mem_gib} GiB)",
                    file=sys.stderr,
                )
                return EXIT_USAGE
    rng = np.random.default_rng(args.seed)
    rows = []
    all_ok = True
    for d in d_list:
        for n in n_list:
            shape = (n,) * d
            ext = (2 * n - 1,) * d
            rank = [min(3, n)] * (d - 1)
            f_tt = tt_random(shape, rank, rng)
            g_tt = tt_random(ext, rank, rng)
            f_dense = tt_to_dense(f_tt).real
            table = KernelTable(tt_to_dense(g_tt).real)
            w_exact = dense_convolve_naive(f_dense, table)
            for eps in eps_list:
                ops = ConvOperands(
                    f_tt,
                    g_tt,
                    eps,
                    cross=CrossConfig(delta=eps, seed=args.seed),
                    circulant_size=args.circulant_size,
                )
                skip_perm = args.inject_fault == "skip-circulant-permute"
                if args.inject_fault == "skip-real-part":
                    ops = ConvOperands(
                        f_tt, g_tt, eps,
                        cross=CrossConfig(delta=eps, seed=args.seed),
                        circulant_size=args.circulant_size, real_output=False,
                    )
                try:
                    w, _ = cross_conv_with_stats(ops, _skip_circulant_permute=skip_perm)
                    err = np.linalg.norm(tt_to_dense(w) - w_exact) / np.linalg.norm(w_exact)
                    ok = err <= 3.0 * eps
                except ToleranceNotReached as exc:
                    err = exc.achieved_error
                    ok = False
                all_ok = all_ok and ok
                rows.append(
                    {
                        "d": d,
                        "n": n,
                        "eps": _fmt(eps),
                        "rel_error": _fmt(float(err)),
                        "bound": _fmt(3.0 * eps),
                        "status": "pass" if ok else "FAIL",
                    }
                )
    _write_report(rows, ["d", "n", "eps", "rel_error", "bound", "status"],
                  args.out, args.format)
    return EXIT_OK if all_ok else EXIT_NUMERICAL


def _density_from_args(args):
    if args.density == "slater":
        return DensityFunction.slater(args.zeta)
    if args.density == "gaussian":
        return DensityFunction.gaussian(args.alpha)
    raise ValueError(f"unknown density {args.density!r}")


def cmd_newton(args):
    """Newton potential of a radial density; reports ranks, errors, timings."""
    grid = GridSpec(args.L, args.n)
    density = _density_from_args(args)
    cross = CrossConfig(delta=args.eps, seed=args.seed, max_rank=args.max_rank)
    t0 = time.perf_counter()
    w, stats, f_tt, g_tt = newton_potential(density, grid, args.eps, cross=cross,
                                            with_stats=True)
    elapsed = time.perf_counter() - t0
    row = {
        "density": args.density,
        "n": args.n,
        "L": _fmt(float(args.L)),
        "eps": _fmt(args.eps),
        "f_ranks": _ranks_str(f_tt.ranks),
        "kernel_ranks": _ranks_str(g_tt.ranks),
        "result_ranks": _ranks_str(w.ranks),
        "validation_error": _fmt(stats.validation_error),
        "evaluator_calls": stats.evaluator_calls,
        "seconds": _fmt(elapsed),
    }
    if args.density == "gaussian":
        targets = grid.target_points()
        probe = np.arange(args.n)
        mid = args.n // 2
        line = np.column_stack([probe, np.full(args.n, mid), np.full(args.n, mid)])
        vals = tt_elements(w, line).real
        radii = np.sqrt(targets[probe] ** 2 + 2 * targets[mid] ** 2)
        exact = gaussian_potential_exact(radii, args.alpha)
        row["max_axis_error"] = _fmt(float(np.max(np.abs(vals - exact))))
    if args.save_tt:
        tt_write(w, args.save_tt)
    _write_report([row], list(row.keys()), args.out, args.format)
    return EXIT_OK


def cmd_bench(args):
    """Timing/rank sweep over grid sizes and accuracies (Slater Newton potential)."""
    rows = []
    prev_time = {}
    for eps in args.eps_list or [1e-5]:
        for n in args.n_list or [128, 256, 512, 1024]:
            grid = GridSpec(args.L, n)
            density = _density_from_args(args)
            cross = CrossConfig(delta=eps, seed=args.seed, max_rank=args.max_rank)
            t0 = time.perf_counter()
            w, stats, f_tt, g_tt = newton_potential(density, grid, eps, cross=cross,
                                                    with_stats=True)
            elapsed = time.perf_counter() - t0
            ratio = elapsed / prev_time[eps] if eps in prev_time else ""
            prev_time[eps] = elapsed
            rows.append(
                {
                    "n": n,
                    "d": 3,
                    "eps": _fmt(eps),
                    "pad_s": _fmt(stats.stage_seconds.get("pad", 0.0)),
                    "fft_s": _fmt(stats.stage_seconds.get("fft", 0.0)),
                    "cross_s": _fmt(stats.stage_seconds.get("cross", 0.0)),
                    "inverse_s": _fmt(stats.stage_seconds.get("inverse", 0.0)),
                    "round_s": _fmt(stats.stage_seconds.get("round", 0.0)),
                    "total_s": _fmt(elapsed),
                    "time_ratio": _fmt(ratio) if ratio != "" else "",
                    "result_ranks": _ranks_str(w.ranks),
                    "validation_error": _fmt(stats.validation_error),
                    "evaluator_calls": stats.evaluator_calls,
                }
            )
    columns = [
        "n", "d", "eps", "pad_s", "fft_s", "cross_s", "inverse_s", "round_s",
        "total_s", "time_ratio", "result_ranks", "validation_error", "evaluator_calls",
    ]
    _write_report(rows, columns, args.out, args.format)
    return EXIT_OK


def cmd_hf(args):
    """Hartree-Fock integral-iteration demo; per-iteration log plus final row."""
    if args.system == "helium":
        nuclei = NucleiSpec.helium()
    elif args.system == "hydrogen":
        nuclei = NucleiSpec.hydrogen()
    elif args.system == "h2":
        nuclei = NucleiSpec.h2(args.bond_length)
    else:
        raise ValueError(f"unknown system {args.system!r}")
    grid = GridSpec(args.L, args.n)
    opts = HFOptions(
        eps=args.eps,
        max_iter=args.max_iter,
        energy_tol=args.energy_tol,
        hartree=not args.no_hartree,
    )
    initial_psi = tt_read(args.initial_psi) if args.initial_psi else None
    t0 = time.perf_counter()
    result = hf_solve(nuclei, grid, args.eps, opts, initial_psi=initial_psi)
    elapsed = time.perf_counter() - t0
    rows = []
    for rec in result.history:
        rows.append(
            {
                "row": "iteration",
                "iteration": rec.iteration,
                "E": _fmt(rec.energy),
                "E_total": _fmt(rec.total_energy),
                "dE": _fmt(rec.delta_energy),
                "psi_ranks": _ranks_str(rec.psi_ranks),
                "seconds": _fmt(rec.seconds),
            }
        )
    rel_vs_limit = abs(result.total_energy - HF_LIMIT_HELIUM) / abs(HF_LIMIT_HELIUM)
    rows.append(
        {
            "row": "final",
            "iteration": result.state.iteration,
            "n": args.n,
            "E": _fmt(result.state.energy),
            "E_total": _fmt(result.total_energy),
            "rel_error_vs_hf_limit": _fmt(rel_vs_limit),
            "converged": str(result.converged).lower(),
            "seconds": _fmt(elapsed),
        }
    )
    if args.save_psi:
        tt_write(result.state.psi, args.save_psi)
    columns = [
        "row", "iteration", "n", "E", "E_total", "dE", "rel_error_vs_hf_limit",
        "psi_ranks", "converged", "seconds",
    ]
    _write_report(rows, columns, args.out, args.format)
    return EXIT_OK


def _add_common(p):
    p.add_argument("--eps", type=float, default=1e-6, help="target relative accuracy")
    p.add_argument("--seed", type=int, default=CrossConfig().seed)
    p.add_argument("--out", default=None, help="report path (stdout if omitted)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--max-rank", type=int, default=64)
    p.add_argument("--config", default=None, help="JSON file with flag defaults")


def build_parser():
    parser = _Parser(prog="ttconv", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="dense-oracle acceptance sweep")
    _add_common(p)
    p.add_argument("--d-list", type=int, nargs="*", default=None)
    p.add_argument("--n-list", type=int, nargs="*", default=None)
    p.add_argument("--eps-list", type=float, nargs="*", default=None)
    p.add_argument("--circulant-size", choices=["2n-1", "2n"], default="2n-1")
    p.add_argument("--max-mem-gib", type=float, default=2.0)
    p.add_argument(
        "--inject-fault",
        choices=["skip-real-part", "skip-circulant-permute"],
        default=None,
        help="negative control: deliberately break one pipeline stage",
    )
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("newton", help="Newton potential of a radial density")
    _add_common(p)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--L", type=float, default=10.0)
    p.add_argument("--density", choices=["slater", "gaussian"], default="slater")
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--save-tt", default=None, help="write the result tensor (TTv1)")
    p.set_defaults(func=cmd_newton)

    p = sub.add_parser("bench", help="grid-size/accuracy timing sweep")
    _add_common(p)
    p.add_argument("--n-list", type=int, nargs="*", default=None)
    p.add_argument("--eps-list", type=float, nargs="*", default=None)
    p.add_argument("--L", type=float, default=10.0)
    p.add_argument("--density", choices=["slater", "gaussian"], default="slater")
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("hf", help="two-electron Hartree-Fock integral iteration")
    _add_common(p)
    p.add_argument("--system", choices=["helium", "hydrogen", "h2"], default="helium")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--L", type=float, default=10.0)
    p.add_argument("--bond-length", type=float, default=1.4)
    p.add_argument("--max-iter", type=int, default=60)
    p.add_argument("--energy-tol", type=float, default=1e-6)
    p.add_argument("--no-hartree", action="store_true",
                   help="drop the Hartree term (one-electron sanity runs)")
    p.add_argument("--save-psi", default=None, help="write the orbital (TTv1)")
    p.add_argument("--initial-psi", default=None,
                   help="read the initial orbital from a TTv1 file")
    p.set_defaults(func=cmd_hf)
    return parser


def _apply_config_file(parser, argv):
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv
    path = argv[i + 1]
    try:
        with open(path) as fh:
            defaults = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read config file: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)
    except json.JSONDecodeError as exc:
        print(f"error: bad config file: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    for action in parser._subparsers._group_actions[0].choices.values():
        known = {a.dest for a in action._actions}
        action.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    return argv


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ToleranceNotReached, HFDivergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TTFormatError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
