"""Harmonic heat-transport MCP server - stationary states and heat currents as tools"""

from typing import Any, Dict

from mcp.server.fastmcp import FastMCP

from .logs import configure_logging
from .settings import Settings
from .tools.heat import handle_compute_heat
from .tools.scaling import handle_run_scaling_study
from .tools.state import handle_compute_state
from .tools.verify import handle_verify_against_oracle

# Create FastMCP instance
mcp = FastMCP("Harmonic Heat Transport")


@mcp.tool()
async def compute_state(config: Dict[str, Any]) -> str:
    """
    📐 STATE - Stationary covariance matrix of a harmonic network

    CONFIG FORMAT (same as the CLI JSON file, mode is filled in):
    {
        "network": {"lattice": {"dim": 1, "N": 8, "k0": 10}},
        "reservoirs": {"temperatures": [2.0, 1.0], "gamma0": 0.1, "cutoff": "inf"},
        "regime": "INFINITE_CUTOFF"
    }

    NETWORK SOURCES (exactly one):
    - lattice: pinned hypercubic lattice, contacts default to the two end slabs
    - matrices: {"mass_path": ..., "potential_path": ...} dense matrix files
    - random: {"K": 4} random stable network seeded by ensemble.master_seed

    REGIMES:
    - FINITE_CUTOFF: Lorentz-Drude cutoff, needs a numeric cutoff
    - INFINITE_CUTOFF: memoryless damping, σ_pp keeps the high-T term only
    - WEAK: leading order in gamma0 from the closed-network normal modes

    RETURNS: per-site <x^2>, <p^2> and local temperatures
    """
    return await handle_compute_state({"config": config})


@mcp.tool()
async def compute_heat(config: Dict[str, Any]) -> str:
    """
    🔥 HEAT - Stationary heat currents between reservoirs

    Q_l > 0 means energy flows from reservoir l into the network.
    Set options.transmission = {"omega_min", "omega_max", "points"} to also
    evaluate the frequency-resolved transfer matrix.

    NEXT STEPS:
    - Check against quadrature → Use `verify_against_oracle`
    - Size dependence → Use `run_scaling_study`
    """
    return await handle_compute_heat({"config": config})


@mcp.tool()
async def run_scaling_study(config: Dict[str, Any]) -> str:
    """
    📈 SCALING - J/ΔT against lattice size over disorder ensembles

    REQUIRES: lattice network, two temperatures, sweep.sizes (>= 3 sizes for a fit)
    OPTIONAL: sweep.gamma0s, sweep.fit_min_N, ensemble.realizations, ensemble.master_seed

    Reports mean and dispersion per (gamma0, N) and the fitted exponent
    mu_fit = -slope of log J against log N.
    """
    return await handle_run_scaling_study({"config": config})


@mcp.tool()
async def verify_against_oracle(config: Dict[str, Any]) -> str:
    """
    🔍 VERIFY - Pole sums against brute-force frequency quadrature

    Compares every covariance entry and every pairwise current; the default
    tolerance is options.verify_tolerance = 1e-6 relative.
    """
    return await handle_verify_against_oracle({"config": config})


def main():
    """Main entry point for the MCP server"""
    settings = Settings.from_env()
    configure_logging(settings.log_level)
    mcp.run()


if __name__ == "__main__":
    main()
