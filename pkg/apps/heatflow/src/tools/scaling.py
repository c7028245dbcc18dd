from ..experiments import ScalingResult, run_scaling
from .common import markdown_table, run_tool


def render_scaling(result: ScalingResult) -> str:
    response = "## ✅ Scaling study\n\n"
    rows = result.cells.values.tolist()
    response += markdown_table(list(result.cells.columns), rows)
    response += "\n### Power-law fits\n\n"
    fit_rows = []
    for gamma0, fit in result.fits.items():
        if fit is None:
            fit_rows.append([gamma0, None, None, None])
        else:
            fit_rows.append([gamma0, fit.slope, fit.mu_fit, fit.std_error])
    response += markdown_table(["gamma0", "slope", "mu_fit", "std_error"], fit_rows)
    if result.failures:
        response += f"\n⚠️ {result.failures} realizations failed and were excluded\n"
    return response


async def handle_run_scaling_study(arguments: dict) -> str:
    """Handle run_scaling_study tool execution"""
    return await run_tool("SCALING", arguments, run_scaling, render_scaling)
