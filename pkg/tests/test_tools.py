"""Tests for the MCP tool handlers"""

import asyncio

from apps.heatflow.src.server import mcp
from apps.heatflow.src.tools.common import markdown_table
from apps.heatflow.src.tools.heat import handle_compute_heat
from apps.heatflow.src.tools.scaling import handle_run_scaling_study
from apps.heatflow.src.tools.state import handle_compute_state
from apps.heatflow.src.tools.verify import handle_verify_against_oracle

CHAIN = {"lattice": {"dim": 1, "N": 4}}


def test_markdown_table():
    table = markdown_table(["a", "b"], [[1, 0.5], [None, "x"]])
    assert table.splitlines() == ["| a | b |", "| --- | --- |", "| 1 | 0.5 |", "|  | x |"]


def test_server_registers_the_four_tools():
    tools = {tool.name: tool for tool in asyncio.run(mcp.list_tools())}
    assert sorted(tools) == ["compute_heat", "compute_state", "run_scaling_study", "verify_against_oracle"]
    assert tools["compute_heat"].inputSchema["required"] == ["config"]


def test_compute_state():
    response = asyncio.run(handle_compute_state({"config": {"network": CHAIN, "regime": "WEAK"}}))
    assert response.startswith("## ✅ Stationary state (WEAK)")
    assert "T_local" in response


def test_compute_heat_exports(tmp_path):
    config = {
        "network": CHAIN,
        "reservoirs": {"temperatures": [2.0, 1.0]},
        "output": {"path": str(tmp_path), "format": "csv"},
    }
    response = asyncio.run(handle_compute_heat({"config": config}))
    assert "## ✅ Heat currents" in response
    assert "Symmetric-network estimate" in response
    assert (tmp_path / "heat.csv").exists()
    assert f"📁 {tmp_path / 'heat.csv'}" in response


def test_run_scaling_study():
    config = {"network": CHAIN, "regime": "WEAK", "sweep": {"sizes": [3, 4, 5]}}
    response = asyncio.run(handle_run_scaling_study({"config": config}))
    assert "## ✅ Scaling study" in response
    assert "Power-law fits" in response


def test_verify_tool():
    config = {"network": CHAIN, "reservoirs": {"temperatures": [1.5, 1.0], "cutoff": 30.0}, "regime": "FINITE_CUTOFF"}
    response = asyncio.run(handle_verify_against_oracle({"config": config}))
    assert response.startswith("## ✅ Verification passed")


def test_errors_are_reported_not_raised():
    assert asyncio.run(handle_compute_heat({})).startswith("❌ Missing required argument")
    response = asyncio.run(handle_compute_heat({"config": {"network": {}}}))
    assert response.startswith("❌ [CONFIG_ERROR]")
