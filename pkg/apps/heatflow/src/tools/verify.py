from ..experiments import VerifyResult, run_verify
from .common import run_tool


def render_verify(result: VerifyResult) -> str:
    status = "✅ Verification passed" if result.passed else "❌ Verification failed"
    response = f"## {status}\n\n"
    response += f"**Covariance** max rel_err: {result.covariance.max_rel_error:.3e}\n"
    response += f"**Heat** max rel_err: {result.heat.max_rel_error:.3e}\n"
    failures = result.covariance.failures + result.heat.failures
    if failures:
        response += "\n```\n" + "\n".join(
            f"{r.block} [{r.i},{r.j}] spectral={r.spectral:.10e} oracle={r.oracle:.10e} rel_err={r.rel_error:.2e}"
            for r in failures[:20]
        ) + "\n```\n"
    return response


async def handle_verify_against_oracle(arguments: dict) -> str:
    """Handle verify_against_oracle tool execution"""
    return await run_tool("VERIFY", arguments, run_verify, render_verify)
