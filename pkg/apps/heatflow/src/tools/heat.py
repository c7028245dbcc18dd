from ..experiments import HeatResult, run_heat
from .common import markdown_table, run_tool


def render_heat(result: HeatResult) -> str:
    currents = result.currents
    response = f"## ✅ Heat currents ({currents.regime.value})\n\n"
    rows = [[l, result.temperatures[l], total] for l, total in enumerate(currents.totals)]
    response += markdown_table(["reservoir", "T", "Q (into network)"], rows)
    response += f"\n**Conservation residual**: {currents.conservation_residual():.3g}\n"
    if result.symmetric is not None:
        response += f"**Symmetric-network estimate**: {result.symmetric.current:.8g}\n"
    if result.transmission is not None:
        response += f"**Transmission spectrum**: {len(result.transmission.frequencies)} frequencies\n"
    return response


async def handle_compute_heat(arguments: dict) -> str:
    """Handle compute_heat tool execution"""
    return await run_tool("HEAT", arguments, run_heat, render_heat)
