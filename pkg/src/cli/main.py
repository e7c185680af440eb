"""
Command-line interface for ProxRecon.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from rich.console import Console
from rich.markup import escape
from rich.table import Table

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src.config.settings import get_settings
from src.core.errors import DivergenceError, ReconError
from src.core.io import write_ivol, write_text
from src.core.reconstruction import ReconstructionWorkbench, stop_exit_code
from src.core.tensor import psnr
from src.core.verification import VerificationSuite
from src.models.config import RunConfig, Task

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MAX_ITERS = 2
EXIT_DIVERGED = 3

# argparse dest -> RunConfig field
OVERRIDE_FIELDS = (
    "modality", "shape", "kernel", "kernel_file", "factor", "density", "phantom",
    "noise_sigma", "seed", "solver", "prox", "denoiser", "tv_iters", "gamma", "tau",
    "iters", "tol", "alpha", "beta", "sigma_pd", "lam", "mu_step", "delta", "sigma",
    "accelerate", "input", "mask", "ground_truth", "output", "trace", "solvers",
    "instances", "workers", "scale",
)


def _add_problem_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("forward model")
    group.add_argument('--modality', choices=['identity', 'inpaint', 'deblur', 'superres', 'sci'],
                       help='Forward operator family (default: sci)')
    group.add_argument('--shape', help='Unknown extents, e.g. 16x16x4 (default: 16x16x4)')
    group.add_argument('--kernel', help='Blur kernel: delta, box:<n> or gaussian:<std>')
    group.add_argument('--kernel-file', type=Path, help='Kernel taps as IVOL or text')
    group.add_argument('--factor', type=int, help='Superresolution factor (default: 2)')
    group.add_argument('--density', type=float, help='Mask density in (0, 1] (default: 0.5)')
    group.add_argument('--seed', type=int, help='Seed for masks, noise and AMP draws')


def _add_solver_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver")
    group.add_argument('--solver', help='Solver name (see `info`)')
    group.add_argument('--prox', help='Proximal map: l1, l2sq, nonneg, l21, tv, tv_iso, tv_aniso, '
                                      'tv_st, tv_st_aniso')
    group.add_argument('--denoiser', help='Denoiser: gaussian, tv, median, linear_symmetric, identity')
    group.add_argument('--tv-iters', type=int, help='Inner iterations of the TV prox (default: 30)')
    group.add_argument('--gamma', type=float, help='Step size / penalty gamma')
    group.add_argument('--tau', type=float, help='Regularization weight tau')
    group.add_argument('--iters', type=int, help='Maximum iterations (default: 100)')
    group.add_argument('--tol', type=float, help='Relative-change stop threshold (default: 1e-6)')
    group.add_argument('--alpha', type=float, help='TwIST alpha')
    group.add_argument('--beta', type=float, help='TwIST beta / primal-dual relaxation')
    group.add_argument('--sigma-pd', type=float, help='Primal-dual dual step sigma')
    group.add_argument('--lambda', dest='lam', type=float, help='RED weight lambda')
    group.add_argument('--mu-step', type=float, help='RED steepest-descent step mu')
    group.add_argument('--delta', type=float, help='AMP undersampling ratio n/m')
    group.add_argument('--sigma', help='Denoiser strengths on the [0, 255] scale, comma separated')
    group.add_argument('--accelerate', action='store_true', default=None,
                       help='Momentum for FISTA / PnP-PGM, accelerated GAP')


def create_parser() -> argparse.ArgumentParser:
    """Create command-line argument parser."""
    parser = argparse.ArgumentParser(
        description="ProxRecon - proximal-splitting solvers for linear imaging inverse problems",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Simulate an SCI snapshot of a moving square
  proxrecon simulate --modality sci --shape 16x16x4 --seed 7 --output y.ivol --mask masks.ivol --ground-truth x.ivol

  # Reconstruct it with GAP-TV
  proxrecon reconstruct --modality sci --input y.ivol --mask masks.ivol --ground-truth x.ivol --solver gap --prox tv --tau 0.05 --iters 60 --output xhat.ivol --trace trace.csv

  # Compare ISTA and FISTA on the built-in deblurring instance
  proxrecon bench --solvers ista,fista --instances deblur-8

  # Run the oracle checks
  proxrecon verify --scale 3
        """
    )
    parser.add_argument('--config', type=Path, help='key=value config file (flags override it)')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    simulate_parser = subparsers.add_parser('simulate', help='Simulate a measurement y = Ax + e')
    _add_problem_arguments(simulate_parser)
    simulate_parser.add_argument('--phantom', help='moving_square or cartoon')
    simulate_parser.add_argument('--noise-sigma', type=float, help='AWGN standard deviation')
    simulate_parser.add_argument('--output', type=Path, help='Measurement IVOL path')
    simulate_parser.add_argument('--mask', type=Path, help='Mask IVOL path')
    simulate_parser.add_argument('--ground-truth', type=Path, help='Ground-truth IVOL path')

    reconstruct_parser = subparsers.add_parser('reconstruct', help='Reconstruct from a measurement')
    _add_problem_arguments(reconstruct_parser)
    _add_solver_arguments(reconstruct_parser)
    reconstruct_parser.add_argument('--input', type=Path, help='Measurement (IVOL or PGM)')
    reconstruct_parser.add_argument('--mask', type=Path, help='Mask IVOL for inpaint/sci')
    reconstruct_parser.add_argument('--ground-truth', type=Path, help='Ground truth for PSNR')
    reconstruct_parser.add_argument('--output', type=Path, help='Reconstruction IVOL path')
    reconstruct_parser.add_argument('--trace', type=Path, help='Trace CSV path')

    bench_parser = subparsers.add_parser('bench', help='Benchmark solvers on built-in instances')
    _add_solver_arguments(bench_parser)
    bench_parser.add_argument('--solvers', help='Comma-separated solver names')
    bench_parser.add_argument('--instances', help='Comma-separated instance names')
    bench_parser.add_argument('--workers', type=int, help='Concurrent runs')
    bench_parser.add_argument('--seed', type=int, help='Seed for AMP draws')
    bench_parser.add_argument('--output', type=Path, help='Report CSV path')

    verify_parser = subparsers.add_parser('verify', help='Run the dense-oracle checks')
    verify_parser.add_argument('--scale', type=int, help='Instance scale (default: 3)')
    verify_parser.add_argument('--seed', type=int, help='Seed for random instances')

    subparsers.add_parser('info', help='Application information')

    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """RunConfig from ``--config`` overlaid by the flags given."""
    overrides: Dict[str, Any] = {"task": Task(args.command)}
    for name in OVERRIDE_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return RunConfig.from_sources(args.config, overrides)


def simulate_command(cfg: RunConfig, workbench: ReconstructionWorkbench, console: Console) -> int:
    """Handle the simulate command."""
    console.print("🔬 ProxRecon - Simulating a measurement")
    sim = workbench.simulate(cfg)
    written = workbench.save_simulation(sim, cfg)

    table = Table(title=f"{cfg.modality.value} {sim.op.domain_shape} -> {sim.op.range_shape}")
    table.add_column("File")
    table.add_column("Path")
    for role, path in written.items():
        table.add_row(role, str(path))
    console.print(table)
    return EXIT_OK


def reconstruct_command(cfg: RunConfig, workbench: ReconstructionWorkbench, console: Console) -> int:
    """Handle the reconstruct command."""
    console.print(f"🧮 ProxRecon - Reconstructing with {cfg.solver}")
    (output,) = cfg.required_paths("output")
    problem = workbench.load_problem(cfg)

    try:
        x, trace = workbench.reconstruct(cfg, problem)
    except DivergenceError as exc:
        console.print(f"💥 {escape(str(exc))}")
        if cfg.trace is not None and exc.trace is not None:
            exc.trace.to_csv(cfg.trace)
        return EXIT_DIVERGED

    write_ivol(output, x)
    if cfg.trace is not None:
        trace.to_csv(cfg.trace)

    summary = trace.summary()
    console.print(f"✅ Stopped ({summary['stop_reason']}) after {summary['iterations']} iterations")
    for warning in trace.warnings:
        console.print(f"⚠️  {escape(warning)}")
    if problem.ground_truth is not None:
        baseline = workbench.baseline(problem.op, problem.measurement)
        console.print(f"📈 PSNR: {psnr(problem.ground_truth, x):.2f} dB "
                      f"(baseline {psnr(problem.ground_truth, baseline):.2f} dB)")
    console.print(f"💾 Reconstruction saved to {output}")
    return stop_exit_code(trace)


def bench_command(cfg: RunConfig, workbench: ReconstructionWorkbench, console: Console) -> int:
    """Handle the bench command."""
    console.print("🏁 ProxRecon - Benchmark")
    report = workbench.bench(cfg)

    table = Table()
    for column in ("instance", "solver", "psnr", "iterations", "wall_time", "stop_reason"):
        table.add_column(column)
    for row in report.sorted_rows():
        quality = f"{row.psnr:.2f}" if row.psnr is not None else "-"
        table.add_row(row.instance, row.solver, quality, str(row.iterations),
                      f"{row.wall_time:.3f}", escape(row.stop_reason or row.error or "-"))
    console.print(table)

    if cfg.output is not None:
        write_text(cfg.output, report.to_csv_text())
        console.print(f"💾 Report saved to {cfg.output}")
    return EXIT_OK


def verify_command(cfg: RunConfig, console: Console) -> int:
    """Handle the verify command."""
    console.print(f"🔍 ProxRecon - Oracle checks at scale {cfg.scale}")
    results = VerificationSuite(cfg.scale, cfg.seed).run()

    table = Table()
    for column in ("check", "value", "tolerance", "result"):
        table.add_column(column)
    for result in results:
        table.add_row(result.name, f"{result.value:.3e}", f"{result.tolerance:.0e}",
                      "✅ pass" if result.passed else escape(f"❌ fail {result.error or ''}".rstrip()))
    console.print(table)

    failed = [r for r in results if not r.passed]
    console.print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_USAGE


def info_command(workbench: ReconstructionWorkbench, console: Console) -> int:
    """Handle the info command."""
    info = workbench.get_application_info()
    console.print(f"🔬 {info['name']} v{info['version']}")
    console.print(info['description'])
    console.print(f"Environment: {info['environment']}")

    table = Table(title="Solvers")
    table.add_column("name")
    table.add_column("regularizer")
    table.add_column("description")
    for name, spec in sorted(info["solvers"].items()):
        table.add_row(name, spec["regularizer"], spec["description"])
    console.print(table)
    console.print(f"Prox maps: {', '.join(info['prox_maps'])}")
    console.print(f"Denoisers: {', '.join(info['denoisers'])}")
    console.print(f"Bench instances: {', '.join(info['bench_instances'])}")
    return EXIT_OK


def run(argv: Optional[List[str]] = None, console: Optional[Console] = None) -> int:
    """Parse ``argv``, run the command and return its exit code."""
    parser = create_parser()
    args = parser.parse_args(argv)
    console = console or Console()

    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    try:
        cfg = build_run_config(args)
        workbench = ReconstructionWorkbench(get_settings())

        if args.command == 'simulate':
            return simulate_command(cfg, workbench, console)
        if args.command == 'reconstruct':
            return reconstruct_command(cfg, workbench, console)
        if args.command == 'bench':
            return bench_command(cfg, workbench, console)
        if args.command == 'verify':
            return verify_command(cfg, console)
        if args.command == 'info':
            return info_command(workbench, console)
        console.print(f"❌ Unknown command: {args.command}")
        return EXIT_USAGE

    except (ReconError, OSError) as e:
        console.print(f"❌ {escape(str(e))}")
        return EXIT_USAGE


def main():
    """Main CLI entry point."""
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        print("\n\n👋 Goodbye!")
        sys.exit(0)


if __name__ == "__main__":
    main()
