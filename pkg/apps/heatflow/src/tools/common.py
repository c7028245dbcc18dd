import asyncio
import logging
from typing import Any, Callable, Dict, List

from ..config import ExperimentConfig, config_from_dict
from ..errors import HeatflowError
from ..export import export_result
from ..settings import Settings

logger = logging.getLogger(__name__)


def markdown_table(headers: List[str], rows: List[List[Any]]) -> str:
    response = "| " + " | ".join(headers) + " |\n"
    response += "|" + "|".join([" --- "] * len(headers)) + "|\n"
    for row in rows:
        response += "| " + " | ".join(_cell(v) for v in row) + " |\n"
    return response


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.8g}"
    return "" if value is None else str(value)


async def run_tool(
    mode: str,
    arguments: Dict[str, Any],
    runner: Callable[[ExperimentConfig, Settings], Any],
    render: Callable[[Any], str],
) -> str:
    """Validate the config dict, run the driver off the event loop and render markdown."""
    try:
        raw = arguments.get("config")
        if not isinstance(raw, dict):
            return "❌ Missing required argument: config (an experiment config object)"
        config = config_from_dict({**raw, "mode": mode})
        settings = Settings.from_env()
        result = await asyncio.to_thread(runner, config, settings)
        response = render(result)
        if config.output.path:
            written: List = export_result(mode, result, config.output.path, config.output.format)
            response += "\n" + "\n".join(f"📁 {path}" for path in written)
        return response
    except HeatflowError as e:
        logger.info("tool %s failed: %s", mode, e)
        return f"❌ [{e.code.value}] {e.message}"
    except Exception as e:
        logger.exception("tool %s crashed", mode)
        return f"❌ Error running {mode.lower()}: {str(e)}"
