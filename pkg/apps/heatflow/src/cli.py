"""Command line interface: heatflow {state,heat,scaling,verify} --config FILE."""

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from .config import apply_overrides, load_config
from .errors import ErrorCode, HeatflowError
from .experiments import run_heat, run_scaling, run_state, run_verify
from .export import export_result
from .logs import configure_logging
from .settings import Settings

logger = logging.getLogger(__name__)

RUNNERS = {
    "state": run_state,
    "heat": run_heat,
    "scaling": run_scaling,
    "verify": run_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatflow",
        description="Stationary state and heat currents of harmonic networks coupled to Ohmic reservoirs",
    )
    subparsers = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in (
        ("state", "covariance matrix and local temperatures"),
        ("heat", "heat current matrix (and optional transmission spectrum)"),
        ("scaling", "disorder-ensemble scaling study with power-law fits"),
        ("verify", "compare pole sums with frequency quadrature"),
    ):
        sub = subparsers.add_parser(verb, help=help_text)
        sub.add_argument("--config", "-c", required=True, help="JSON experiment config")
        sub.add_argument("--out", "-o", help="output directory (overrides output.path)")
        sub.add_argument("--threads", type=int, help="worker threads for ensembles")
        sub.add_argument("--deterministic", action="store_true", help="fixed-order reductions")
        sub.add_argument("--seed", type=int, help="master seed (overrides ensemble.master_seed)")
        sub.add_argument("--verbose", "-v", action="store_true", help="debug logging")
        sub.add_argument("--log-file", help="also write the log to this file")
    return parser


def _print_summary(verb: str, result) -> None:
    if verb == "state":
        cov = result.covariance
        print(f"✅ Covariance ({cov.regime.value}), K={cov.K}")
        print(f"📊 Local temperatures: {', '.join(f'{t:.6g}' for t in result.temperatures.values)}")
        if result.temperatures.high_t_only:
            print("⚠️  σ_pp is valid in the high-temperature regime only")
    elif verb == "heat":
        currents = result.currents
        print(f"✅ Heat currents ({currents.regime.value})")
        for l, total in enumerate(currents.totals):
            print(f"  📈 reservoir {l} (T={result.temperatures[l]:g}): Q = {total:.10g}")
        if result.symmetric is not None:
            print(f"  🔁 symmetric estimate: q = {result.symmetric.current:.10g}")
    elif verb == "scaling":
        print(f"✅ Scaling study: {len(result.records)} realizations, {result.failures} failed")
        print("📊 Cells:")
        print(result.cells.to_string(index=False))
        for gamma0, fit in result.fits.items():
            if fit is None:
                print(f"  γ0={gamma0:g}: no fit")
            else:
                print(f"  γ0={gamma0:g}: slope {fit.slope:.4f}, mu_fit {fit.mu_fit:.4f} ± {fit.std_error:.4f}")
    elif verb == "verify":
        print(result.to_text())


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = Settings.from_env()
        configure_logging("DEBUG" if args.verbose else settings.log_level, args.log_file)
        config = apply_overrides(
            load_config(args.config),
            mode=args.verb,
            out=args.out,
            threads=args.threads,
            deterministic=args.deterministic,
            seed=args.seed,
        )
        result = RUNNERS[args.verb](config, settings)
        _print_summary(args.verb, result)

        out_dir = config.output.path
        if out_dir is None and args.verb == "scaling":
            out_dir = settings.output_dir
        if out_dir is not None:
            for path in export_result(config.mode, result, out_dir, config.output.format):
                print(f"📁 {path}")
    except HeatflowError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 2 if e.code is ErrorCode.VERIFICATION_FAILED else 1
    except np.linalg.LinAlgError as e:
        print(f"❌ [{ErrorCode.NUMERICAL_DEGENERACY.value}] linear algebra failure: {e}", file=sys.stderr)
        return 1

    if args.verb == "verify" and not result.passed:
        print(f"❌ [{ErrorCode.VERIFICATION_FAILED.value}] pole sums disagree with quadrature", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
