"""Command-line entry point.

One subcommand per study plus `dist` for single distance evaluations and
`selftest` for the built-in analytic checks.  All randomness flows from
--seed; identical argv + seed give byte-identical outputs.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import abc as abc_mod
from . import distances, experiments, flows
from .kernels import KernelError, KernelSpec
from .measures import DiscreteMeasure, make_rng, sample_gaussian, substream
from .spectral import NotPSDError, SpectralMismatchError, gram, signed_operator_spectrum
from .measures import merge_difference

log = logging.getLogger("ktdist")

DIST_METRICS = ("kt", "mmd", "mmd2", "mmdn", "mmde", "kbw", "w1")


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors exiting 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def fmt(value: float) -> str:
    """Scalar with 10 significant digits, '.' decimal."""
    return f"{value:.10g}"


def read_points(path: str) -> np.ndarray:
    """CSV point cloud: one row per point, no header."""
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_points(path, points: np.ndarray):
    np.savetxt(path, np.atleast_2d(points), delimiter=",", fmt="%.17g")


def write_csv(path, header: list[str], rows):
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _kernel_from_args(args) -> KernelSpec:
    family = args.kernel
    bandwidth = args.bandwidth if family in ("gaussian", "laplacian") else None
    return KernelSpec(family, bandwidth)


def _add_kernel_flags(p, default_family="gaussian", default_bandwidth=1.0):
    p.add_argument(
        "--kernel",
        choices=("gaussian", "laplacian", "energy"),
        default=default_family,
        help="kernel family",
    )
    p.add_argument(
        "--bandwidth",
        type=float,
        default=default_bandwidth,
        help="kernel bandwidth, in data units",
    )


def _csv_floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v]


def _csv_ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v]


def build_parser() -> _Parser:
    parser = _Parser(prog="ktdist", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--seed", type=int, default=0, help="base RNG seed (all randomness derives from it)")
        p.add_argument("--config", help="JSON config file; flags take precedence")
        p.add_argument("--threads", type=int, default=None, help="cap BLAS worker count")
        return p

    p = add("dist", help="distance between two CSV point clouds")
    p.add_argument("--metric", choices=DIST_METRICS, required=True)
    p.add_argument("--x", required=True, help="CSV file for the first cloud")
    p.add_argument("--y", required=True, help="CSV file for the second cloud")
    _add_kernel_flags(p)
    p.add_argument("--debug-dump", help="directory for Gram/eigenvalue CSV dumps")

    p = add("sweep-bandwidth", help="distances vs Gaussian kernel bandwidth")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--gap", type=float, default=5.0, help="mean gap between the two Gaussians")
    p.add_argument("--sigma-min", type=float, default=0.05)
    p.add_argument("--sigma-max", type=float, default=50.0)
    p.add_argument("--points", type=int, default=30, help="log-spaced grid size")
    p.add_argument("--metrics", default="kt,mmd2", help="comma list from kt,mmd,mmd2,kbw")
    p.add_argument("--out", required=True, help="output CSV")

    p = add("sweep-mean", help="distances vs mean gap theta")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--theta-max", type=float, default=10.0)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--metrics", default="kt,mmd2,kbw")
    p.add_argument("--out", required=True)

    p = add("sweep-std", help="distances vs standard deviation s")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--gap", type=float, default=100.0)
    p.add_argument("--s-grid", default="0.1,0.3,1,3,10,30,100")
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--metrics", default="kt,mmd2,kbw")
    p.add_argument("--out", required=True)

    p = add("mixture-check", help="mixture splitting identities")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--shift", type=float, default=0.3, help="per-coordinate component shift")
    p.add_argument("--delta", type=float, default=10.0, help="per-coordinate copy translation")
    p.add_argument("--out", help="optional output CSV")

    p = add("robustness-check", help="contamination deviation vs the 2*eps bound")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--eps-grid", default="0.05,0.1,0.2,0.5")
    p.add_argument("--contamination-location", type=float, default=50.0)
    _add_kernel_flags(p)
    p.add_argument("--out", help="optional output CSV")

    p = add("rate", help="empirical convergence rate study")
    p.add_argument("--n-grid", default="50,100,200,400")
    p.add_argument("--reps", type=int, default=8)
    p.add_argument("--ref-size", type=int, default=2000)
    p.add_argument("--metrics", default="kt,mmd2")
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--out", required=True, help="output CSV table")
    p.add_argument("--summary", help="optional JSON file with fitted slopes")

    p = add("flow", help="particle gradient descent toward a target cloud")
    p.add_argument("--init", help="CSV init cloud (default: seeded blob pair)")
    p.add_argument("--target", help="CSV target cloud")
    p.add_argument("--loss", choices=("kt", "mmd"), default="kt")
    p.add_argument("--lr", type=float, default=0.005)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--record-every", type=int, default=100)
    _add_kernel_flags(p, default_family="laplacian")
    p.add_argument("--out", required=True, help="output directory")

    p = add("abc", help="rejection ABC on a contaminated Gaussian")
    p.add_argument("--distance", choices=abc_mod.DISTANCES, default="kt")
    _add_kernel_flags(p)
    p.add_argument("--eps", type=float, default=0.5, help="tolerance, in distance units")
    p.add_argument("--T", type=int, default=10000, help="iterations")
    p.add_argument("--m", type=int, default=100, help="synthetic sample size")
    p.add_argument("--prior-std", type=float, default=5.0)
    p.add_argument("--observed", help="CSV with the observed 1-D sample; generated when omitted")
    p.add_argument("--n", type=int, default=100, help="observed sample size when generated")
    p.add_argument("--theta-star", type=float, default=1.0)
    p.add_argument("--contamination-mean", type=float, default=20.0)
    p.add_argument("--contamination-frac", type=float, default=0.1)
    p.add_argument("--out", required=True, help="result JSON")
    p.add_argument("--posterior-grid", help="optional CSV of the accepted-posterior density")

    add("selftest", help="analytic two-atom and inequality suites")

    return parser


def _apply_config_file(argv, args, parser):
    if args.config:
        with open(args.config) as f:
            cfg = json.load(f)
        explicit = {a.lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
        for key, value in cfg.items():
            attr = key.replace("-", "_")
            if attr not in explicit and hasattr(args, attr):
                setattr(args, attr, value)
    return args


def _limit_threads(n):
    if n is None:
        return
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=n)
    except ImportError:
        log.warning("threadpoolctl unavailable; --threads ignored")


def _metric_names(s: str) -> list[str]:
    alias = {"mmd2": "mmd_k2"}
    return [alias.get(m, m) for m in s.split(",") if m]


def _sweep_to_csv(result, param_name, out):
    names = sorted(result.values)
    rows = (
        [float(p)] + [float(result.values[m][j]) for m in names]
        for j, p in enumerate(result.parameter)
    )
    write_csv(out, [param_name] + names, rows)


def cmd_dist(args) -> int:
    spec = _kernel_from_args(args)
    mu = DiscreteMeasure.uniform(read_points(args.x))
    nu = DiscreteMeasure.uniform(read_points(args.y))
    metric = args.metric
    if metric == "kt":
        value = distances.kt_distance(spec, mu, nu)
    elif metric == "mmd":
        value = distances.mmd(spec, mu, nu)
    elif metric == "mmd2":
        value = distances.mmd_k2(spec, mu, nu)
    elif metric == "mmdn":
        value = distances.mmd_normalized(spec, mu, nu)
    elif metric == "mmde":
        from .kernels import energy

        value = distances.mmd(energy(), mu, nu)
    elif metric == "kbw":
        value = distances.kbw_distance(spec, mu, nu)
    else:
        value = distances.wasserstein1_1d(mu, nu)
    if args.debug_dump:
        outdir = Path(args.debug_dump)
        outdir.mkdir(parents=True, exist_ok=True)
        atoms = merge_difference(mu, nu)
        if atoms.size:
            G = gram(spec, atoms)
            spectrum = signed_operator_spectrum(spec, atoms)
            write_points(outdir / "gram.csv", G)
            write_points(outdir / "eigenvalues.csv", spectrum.eigenvalues.reshape(-1, 1))
    print(fmt(value))
    return 0


def cmd_sweep_bandwidth(args) -> int:
    grid = np.geomspace(args.sigma_min, args.sigma_max, args.points)
    result = experiments.bandwidth_sweep(
        args.n, args.gap, grid, _metric_names(args.metrics), seed=args.seed
    )
    _sweep_to_csv(result, "sigma", args.out)
    return 0


def cmd_sweep_mean(args) -> int:
    grid = np.arange(0.0, args.theta_max + args.step / 2, args.step)
    result = experiments.mean_sweep(
        grid, n=args.n, sigma=args.bandwidth, metrics=_metric_names(args.metrics), seed=args.seed
    )
    _sweep_to_csv(result, "theta", args.out)
    return 0


def cmd_sweep_std(args) -> int:
    result = experiments.std_sweep(
        _csv_floats(args.s_grid),
        gap=args.gap,
        n=args.n,
        sigma=args.bandwidth,
        metrics=_metric_names(args.metrics),
        seed=args.seed,
    )
    _sweep_to_csv(result, "s", args.out)
    return 0


def cmd_mixture_check(args) -> int:
    out = experiments.mixture_split_check(
        shift=(args.shift, args.shift),
        delta=(args.delta, args.delta),
        sigma=args.sigma,
        n=args.n,
        seed=args.seed,
    )
    for key in sorted(out):
        print(f"{key} {fmt(out[key])}")
    if args.out:
        write_csv(args.out, sorted(out), [[float(out[k]) for k in sorted(out)]])
    return 0


def cmd_robustness_check(args) -> int:
    spec = _kernel_from_args(args)
    rng = substream(args.seed, 0)
    P = DiscreteMeasure.uniform(sample_gaussian([0.0], 1.0, args.n, rng))
    Q = DiscreteMeasure.uniform(sample_gaussian([0.5], 1.0, args.n, rng))
    C = DiscreteMeasure.uniform([[args.contamination_location]])
    eps_grid = _csv_floats(args.eps_grid)
    result = experiments.robustness_check(spec, P, Q, C, eps_grid)
    rows = []
    ok = True
    for eps in eps_grid:
        dev = result[eps]
        rows.append([float(eps), dev["kt"], dev["mmd_k2"], 2.0 * eps])
        ok = ok and dev["kt"] <= 2 * eps + 1e-9 and dev["mmd_k2"] <= 2 * eps + 1e-9
        print(f"eps={fmt(eps)} kt_dev={fmt(dev['kt'])} mmd2_dev={fmt(dev['mmd_k2'])} bound={fmt(2 * eps)}")
    if args.out:
        write_csv(args.out, ["eps", "kt_deviation", "mmd2_deviation", "bound"], rows)
    return 0 if ok else 2


def cmd_rate(args) -> int:
    from .kernels import gaussian

    metrics = _metric_names(args.metrics)
    result = experiments.rate_study(
        lambda rng, n: sample_gaussian([0.0], 1.0, n, rng),
        _csv_ints(args.n_grid),
        args.reps,
        args.ref_size,
        metrics=metrics,
        spec=gaussian(args.bandwidth),
        seed=args.seed,
    )
    header = ["n"] + [f"{m}_{stat}" for m in metrics for stat in ("mean", "std")]
    rows = []
    for j, n in enumerate(_csv_ints(args.n_grid)):
        row = [n]
        for m in metrics:
            row += [float(result["table"][m]["mean"][j]), float(result["table"][m]["std"][j])]
        rows.append(row)
    write_csv(args.out, header, rows)
    for m in metrics:
        print(f"slope_{m} {fmt(result['slopes'][m])}")
    if args.summary:
        with open(args.summary, "w") as f:
            json.dump({"slopes": result["slopes"]}, f, sort_keys=True, indent=2)
            f.write("\n")
    return 0


def cmd_flow(args) -> int:
    spec = _kernel_from_args(args)
    if args.init and args.target:
        init, target_pts = read_points(args.init), read_points(args.target)
    elif args.init or args.target:
        raise ValueError("provide both --init and --target, or neither")
    else:
        init, target_pts = flows.default_clouds(seed=args.seed)
    config = flows.FlowConfig(
        kernel=spec,
        loss="kt" if args.loss == "kt" else "mmd_k2_squared",
        learning_rate=args.lr,
        steps=args.steps,
        record_every=args.record_every,
    )
    traj = flows.run_flow(config, init, DiscreteMeasure.uniform(target_pts))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for step, particles, _ in traj.snapshots:
        write_points(outdir / f"snapshot_{step}.csv", particles)
    write_csv(outdir / "loss.csv", ["step", "loss"], ((s, l) for s, _, l in traj.snapshots))
    print(fmt(traj.final_loss))
    return 0


def cmd_abc(args) -> int:
    kernel = _kernel_from_args(args) if args.kernel != "energy" else None
    config = abc_mod.AbcConfig(
        prior_std=args.prior_std,
        tolerance=args.eps,
        iterations=args.T,
        synthetic_size=args.m,
        distance=args.distance,
        kernel=kernel,
        seed=args.seed,
    )
    if args.observed:
        observed = read_points(args.observed)[:, 0]
    else:
        observed = abc_mod.generate_observed(
            args.n,
            args.theta_star,
            args.contamination_mean,
            args.contamination_frac,
            abc_mod.observed_stream(args.seed, 0),
        )
    result = abc_mod.rejection_abc(config, observed, theta_star=args.theta_star)
    payload = {
        "accept_count": result.accept_count,
        "mse": result.mse,
        "accepted": result.accepted,
    }
    with open(args.out, "w") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")
    print(f"accept_count {result.accept_count}")
    print(f"mse {'N/A' if result.mse is None else fmt(result.mse)}")
    if args.posterior_grid:
        if not result.accepted:
            log.warning("no acceptances; skipping posterior grid")
        else:
            grid = np.arange(-10.0, 15.0 + 1e-9, 0.01)
            dens = abc_mod.posterior_density_grid(result.accepted, grid)
            write_csv(args.posterior_grid, ["theta", "density"], zip(map(float, grid), map(float, dens)))
    return 0


def cmd_selftest(args) -> int:
    from .kernels import gaussian

    failures = []

    def check(name, ok):
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        if not ok:
            failures.append(name)

    rng = make_rng(args.seed)
    # analytic two-atom suite
    worst = 0.0
    for _ in range(50):
        sigma = float(rng.uniform(0.3, 3.0))
        x, y = rng.standard_normal(2), rng.standard_normal(2)
        spec = gaussian(sigma)
        mu, nu = DiscreteMeasure.uniform([x]), DiscreteMeasure.uniform([y])
        k = math.exp(-float(np.sum((x - y) ** 2)) / (2 * sigma**2))
        worst = max(
            worst,
            abs(distances.kt_distance(spec, mu, nu) - 2 * math.sqrt(1 - k**2)),
            abs(distances.mmd_k2(spec, mu, nu) - math.sqrt(2 - 2 * k**2)),
            abs(distances.kbw_distance(spec, mu, nu) - math.sqrt(2 - 2 * k)),
        )
    check("two-atom closed forms", worst < 1e-8)
    # inequality suite
    ok = True
    for _ in range(10):
        spec = gaussian(1.0)
        mu = DiscreteMeasure.uniform(rng.standard_normal((20, 2)))
        nu = DiscreteMeasure.uniform(1.0 + rng.standard_normal((25, 2)))
        kt = distances.kt_distance(spec, mu, nu)
        m2 = distances.mmd_k2(spec, mu, nu)
        kbw = distances.kbw_distance(spec, mu, nu)
        ok = ok and m2 <= kt + 1e-8 and kt <= 2 + 1e-8
        ok = ok and kbw**2 <= kt + 1e-8 and kt <= 2 * kbw + 1e-8
    check("inequality suite", ok)
    return 0 if not failures else 2


_COMMANDS = {
    "dist": cmd_dist,
    "sweep-bandwidth": cmd_sweep_bandwidth,
    "sweep-mean": cmd_sweep_mean,
    "sweep-std": cmd_sweep_std,
    "mixture-check": cmd_mixture_check,
    "robustness-check": cmd_robustness_check,
    "rate": cmd_rate,
    "flow": cmd_flow,
    "abc": cmd_abc,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config_file(argv, args, parser)
        _limit_threads(args.threads)
        resolved = {k: v for k, v in vars(args).items() if k != "command"}
        log.info("%s %s", args.command, json.dumps(resolved, default=str, sort_keys=True))
        return _COMMANDS[args.command](args)
    except (NotPSDError, SpectralMismatchError, ArithmeticError) as exc:
        print(f"ktdist: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (KernelError, ValueError, OSError) as exc:
        print(f"ktdist: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
