"""Command-line entry point: ``minplus-tsp {solve,gen,verify,bench}``.

Results go to stdout in a line grammar meant for scripts::

    cost <int>
    tour <v1> <v2> ...        (only when a tour was computed)

Everything meant for humans goes to stderr.  Exit codes: 0 success,
1 verification mismatch, 2 usage or input error, 3 memory budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

from . import io as tspio
from .kernels import BUILTIN_KERNELS, KernelError, KernelId, kernel_entry
from .solvers import (
    DEFAULT_MEM_BUDGET,
    InstanceError,
    MemoryBudgetError,
    brute_force,
    expected_kernel_calls,
    expected_scalar_ops,
    expected_update_writes,
    held_karp_pull,
    solve,
    solve_minplus,
    source_rows,
)

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

STATS_COLUMNS = ["layer", "batch_count", "scalar_ops", "update_writes", "layer_wall_ns"]
BENCH_COLUMNS = [
    "n", "layer", "kernel", "tile", "batch_count",
    "scalar_ops", "update_writes", "layer_wall_ns", "rep",
]
VERIFY_MAX_N = 9


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _name_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _kernel_id(name: str, tile: int | None) -> KernelId:
    kernel_entry(name)  # raises on unknown names
    if tile is not None and name != "tiled":
        raise UsageError("--tile only applies to the tiled kernel")
    return KernelId(name, tile)


# -- solve --------------------------------------------------------------------


def cmd_solve(args) -> int:
    if args.input is None and args.random is None:
        raise UsageError("give an input file or --random N")
    if args.input is not None and args.random is not None:
        raise UsageError("give either an input file or --random, not both")
    if args.reconstruct and args.algo == "brute":
        raise UsageError("--reconstruct applies to the DP algorithms only")
    if args.stats_out and args.algo != "minplus":
        raise UsageError("--stats-out requires --algo minplus")
    kid = _kernel_id(args.kernel, args.tile)

    if args.random is not None:
        doc = tspio.gen_random(
            tspio.GeneratorSpec(args.random, args.seed, args.max_weight, args.symmetric)
        )
    else:
        doc = tspio.load_instance(args.input, args.format)

    t0 = time.perf_counter()
    cost, tour, stats = solve(
        doc.instance, args.algo, kid,
        reconstruct=args.reconstruct,
        restrict_to_v1=not args.no_restrict,
        pad_last_batch=args.pad_last_batch,
        mem_budget=args.mem_budget,
    )
    elapsed = time.perf_counter() - t0

    print(f"cost {cost}")
    if tour is not None:
        print("tour " + " ".join(str(v) for v in tour.order))
    label = f"{args.algo}/{kid}" if args.algo == "minplus" else args.algo
    _err(f"{doc.name or '<unnamed>'}: n={doc.n} {label} cost={cost} in {elapsed:.3f}s")
    if stats is not None:
        _err(f"kernel calls {stats.total_kernel_calls}, scalar ops {stats.scalar_ops}, "
             f"update writes {stats.update_writes}")
    if args.stats_out:
        with open(args.stats_out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(STATS_COLUMNS)
            for ell in sorted(stats.kernel_calls_per_layer):
                w.writerow([
                    ell, stats.kernel_calls_per_layer[ell], stats.scalar_ops_per_layer[ell],
                    stats.update_writes_per_layer[ell], stats.wall_ns_per_layer[ell],
                ])
    return EXIT_OK


# -- gen ----------------------------------------------------------------------


def cmd_gen(args) -> int:
    spec = tspio.GeneratorSpec(args.n, args.seed, args.max_weight, args.symmetric)
    text = tspio.write_json(tspio.gen_random(spec))
    Path(args.out).write_text(text)
    print(args.out)
    return EXIT_OK


# -- verify -------------------------------------------------------------------


def _verify_one(doc, kernels: list[KernelId]) -> list[str]:
    """Run every engine on one instance; return a list of failure messages."""
    inst = doc.instance
    n = inst.n
    failures = []
    expected = brute_force(inst).cost
    hk = held_karp_pull(inst).cost
    if hk != expected:
        failures.append(f"held-karp {hk} != brute {expected}")
    for kid in kernels:
        for restricted in (True, False):
            for padded in (False, True):
                tag = f"{kid} restricted={restricted} padded={padded}"
                res = solve_minplus(inst, kid, restrict_to_v1=restricted, pad_last_batch=padded)
                st = res.stats
                if res.cost != expected:
                    failures.append(f"{tag}: cost {res.cost} != brute {expected}")
                for ell in range(2, n + 1):
                    want = -(-source_rows(n, ell, restricted) // n)
                    if st.kernel_calls_per_layer.get(ell) != want:
                        failures.append(f"{tag}: layer {ell} made "
                                        f"{st.kernel_calls_per_layer.get(ell)} kernel calls, expected {want}")
                if n >= 2 and st.total_kernel_calls != expected_kernel_calls(n, restricted):
                    failures.append(f"{tag}: {st.total_kernel_calls} kernel calls, "
                                    f"expected {expected_kernel_calls(n, restricted)}")
                if n >= 2 and st.update_writes != expected_update_writes(n, restricted):
                    failures.append(f"{tag}: {st.update_writes} update writes, "
                                    f"expected {expected_update_writes(n, restricted)}")
                if n >= 2 and st.scalar_ops != expected_scalar_ops(n, restricted, padded):
                    failures.append(f"{tag}: {st.scalar_ops} scalar ops, "
                                    f"expected {expected_scalar_ops(n, restricted, padded)}")
                if st.overwrites:
                    failures.append(f"{tag}: {st.overwrites} pushes hit an already-finite cell")
    return failures


def cmd_verify(args) -> int:
    if not 2 <= args.n_min <= args.n_max:
        raise UsageError("need 2 <= --n-min <= --n-max")
    if args.n_max > VERIFY_MAX_N:
        raise UsageError(f"--n-max is limited to {VERIFY_MAX_N} (brute-force oracle)")
    if args.instances < 1:
        raise UsageError("--instances must be positive")
    kernels = [_kernel_id(name, None) for name in args.kernels]

    t0 = time.perf_counter()
    instances = checks = bad = 0
    for n in range(args.n_min, args.n_max + 1):
        for idx in range(args.instances):
            spec = tspio.GeneratorSpec(
                n, seed=args.seed + 1000 * n + idx, max_weight=1000, symmetric=idx % 2 == 1
            )
            doc = tspio.gen_random(spec)
            failures = _verify_one(doc, kernels)
            instances += 1
            checks += 2 + 4 * len(kernels)
            if failures:
                bad += 1
                _err(f"MISMATCH on {doc.name}:")
                for msg in failures:
                    _err(f"  {msg}")
                _err(tspio.write_json(doc))
    elapsed = time.perf_counter() - t0
    print(f"instances {instances}")
    print(f"checks {checks}")
    print(f"mismatches {bad}")
    _err(f"verified {instances} instances ({checks} solver runs) in {elapsed:.1f}s")
    return EXIT_MISMATCH if bad else EXIT_OK


# -- bench --------------------------------------------------------------------


def cmd_bench(args) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be positive")
    if not args.n_list:
        raise UsageError("--n-list is empty")
    for n in args.n_list:
        if not 2 <= n <= 32:
            raise UsageError(f"bench sizes must lie in [2, 32], got {n}")
    for t in args.tiles:
        if t < 1:
            raise UsageError(f"tile sizes must be positive, got {t}")
    runs: list[KernelId] = []
    for name in args.kernels:
        kernel_entry(name)
        if name == "tiled":
            runs.extend(KernelId("tiled", t) for t in args.tiles)
        else:
            runs.append(KernelId(name))

    with open(args.csv, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BENCH_COLUMNS)
        for n in args.n_list:
            inst = tspio.gen_random(tspio.GeneratorSpec(n, args.seed, 1000, False)).instance
            for kid in runs:
                for rep in range(args.reps):
                    res = solve_minplus(
                        inst, kid, restrict_to_v1=not args.no_restrict, mem_budget=args.mem_budget
                    )
                    st = res.stats
                    for ell in sorted(st.kernel_calls_per_layer):
                        w.writerow([
                            n, ell, kid.name, kid.tile if kid.tile is not None else "",
                            st.kernel_calls_per_layer[ell], st.scalar_ops_per_layer[ell],
                            st.update_writes_per_layer[ell], st.wall_ns_per_layer[ell], rep,
                        ])
                    _err(f"n={n} {kid} rep {rep}: cost {res.cost}, {st.wall_ns / 1e6:.1f} ms")
    print(f"csv {args.csv}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _add_generator_flags(p, n_flag: bool) -> None:
    if n_flag:
        p.add_argument("--n", type=int, required=True, help="number of cities")
    p.add_argument("--seed", type=int, default=0, help="SplitMix64 seed")
    p.add_argument("--max-weight", type=int, default=1000, help="weights drawn from [1, max]")
    p.add_argument("--symmetric", action="store_true", help="mirror the upper triangle")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minplus-tsp", description="Exact TSP via batched min-plus products."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("input", nargs="?", help="TSPLIB (.tsp/.atsp) or JSON instance")
    p.add_argument("--format", choices=["tsplib", "json"], help="override format detection")
    p.add_argument("--random", type=int, metavar="N", help="solve a generated N-city instance instead")
    _add_generator_flags(p, n_flag=False)
    p.add_argument("--algo", choices=["brute", "held-karp", "minplus"], default="minplus")
    p.add_argument("--kernel", default="tiled", help="naive, transposed or tiled")
    p.add_argument("--tile", type=int, help="block size for the tiled kernel (default 32)")
    p.add_argument("--no-restrict", action="store_true",
                   help="enumerate subsets without vertex 1 too")
    p.add_argument("--pad-last-batch", action="store_true",
                   help="pad each layer's last batch to n rows with infinity")
    p.add_argument("--reconstruct", action="store_true", help="also print an optimal tour")
    p.add_argument("--stats-out", metavar="PATH", help="write per-layer stats as CSV")
    p.add_argument("--mem-budget", type=int, default=DEFAULT_MEM_BUDGET, metavar="BYTES")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="write a random instance as JSON")
    _add_generator_flags(p, n_flag=True)
    p.add_argument("--out", required=True, help="output path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="cross-check all engines on random instances")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=VERIFY_MAX_N)
    p.add_argument("--instances", type=int, default=25, help="instances per size")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--kernels", type=_name_list, default=list(BUILTIN_KERNELS))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="per-layer timing and accounting as CSV")
    p.add_argument("--n-list", type=_int_list, required=True, help="e.g. 12,14,16")
    p.add_argument("--kernels", type=_name_list, default=list(BUILTIN_KERNELS))
    p.add_argument("--tiles", type=_int_list, default=[32], help="tile sizes for the tiled kernel")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--csv", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, default=1, help="seed of the benchmark instances")
    p.add_argument("--no-restrict", action="store_true")
    p.add_argument("--mem-budget", type=int, default=DEFAULT_MEM_BUDGET, metavar="BYTES")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except MemoryBudgetError as exc:
        _err(f"error: {exc}")
        return EXIT_BUDGET
    except (UsageError, InstanceError, KernelError, tspio.FormatError, OSError) as exc:
        _err(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
