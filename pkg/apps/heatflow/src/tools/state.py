from ..experiments import StateResult, run_state
from .common import markdown_table, run_tool


def render_state(result: StateResult) -> str:
    cov = result.covariance
    response = f"## ✅ Stationary state ({cov.regime.value})\n\n"
    response += f"**Sites**: {cov.K}\n"
    response += f"**Uncertainty check** (min eigenvalue of Σ + iJ/2): {cov.uncertainty_min_eigenvalue():.4g}\n\n"
    rows = [
        [i, cov.sigma_xx[i, i], cov.sigma_pp[i, i], t]
        for i, t in enumerate(result.temperatures.values)
    ]
    response += markdown_table(["site", "<x^2>", "<p^2>", "T_local"], rows)
    if result.temperatures.high_t_only:
        response += "\n⚠️ Local temperatures are valid in the high-temperature regime only\n"
    for warning in result.validation.warnings:
        response += f"\n⚠️ {warning}"
    return response


async def handle_compute_state(arguments: dict) -> str:
    """Handle compute_state tool execution"""
    return await run_tool("STATE", arguments, run_state, render_state)
