"""Writers for result tables (CSV), summaries (JSON) and matrices (text).

All CSV files use a header row, ``\\n`` line endings and ``%.12e`` floats so
that identical runs produce byte-identical files.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from .experiments import HeatResult, ScalingResult, StateResult, VerifyResult
from .heat import HeatCurrentMatrix, TransmissionSpectrum
from .network import save_matrix

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="nan")
    return path


def _clean(value: Any) -> Any:
    """Replace non-finite floats, which JSON cannot hold, by strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(document: Dict[str, Any], path: Path) -> Path:
    path.write_text(json.dumps(_clean(document), indent=2, sort_keys=True) + "\n")
    return path


def heat_frame(currents: HeatCurrentMatrix) -> pd.DataFrame:
    """Columns l, l_prime, value; diagonal entries are omitted."""
    rows = [
        {"l": l, "l_prime": lp, "value": currents.pairwise[l, lp]}
        for l in range(currents.L)
        for lp in range(currents.L)
        if l != lp
    ]
    return pd.DataFrame(rows, columns=["l", "l_prime", "value"])


def transmission_frame(spectrum: TransmissionSpectrum) -> pd.DataFrame:
    """Columns omega, l, l_prime, value, one row per frequency and ordered pair."""
    L = spectrum.values.shape[0]
    l_idx, lp_idx, k_idx = np.meshgrid(np.arange(L), np.arange(L), np.arange(len(spectrum.frequencies)), indexing="ij")
    frame = pd.DataFrame(
        {
            "omega": spectrum.frequencies[k_idx.ravel()],
            "l": l_idx.ravel(),
            "l_prime": lp_idx.ravel(),
            "value": spectrum.values.ravel(),
        }
    )
    return frame.sort_values(["omega", "l", "l_prime"], kind="mergesort").reset_index(drop=True)


def _prepare(out_dir: str) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def export_state(result: StateResult, out_dir: str, fmt: str = "both") -> List[Path]:
    path = _prepare(out_dir)
    written = []
    if fmt in ("csv", "both"):
        cov = result.covariance
        for name in ("sigma_xx", "sigma_xp", "sigma_pp"):
            target = path / f"{name}.txt"
            save_matrix(str(target), getattr(cov, name))
            written.append(target)
        temperatures = pd.DataFrame(
            {"site": np.arange(cov.K), "local_temperature": result.temperatures.values}
        )
        written.append(write_csv(temperatures, path / "local_temperatures.csv"))
    if fmt in ("json", "both"):
        written.append(write_json(result.to_document(), path / "state.json"))
    return written


def export_heat(result: HeatResult, out_dir: str, fmt: str = "both") -> List[Path]:
    path = _prepare(out_dir)
    written = []
    if fmt in ("csv", "both"):
        written.append(write_csv(heat_frame(result.currents), path / "heat.csv"))
        if result.transmission is not None:
            written.append(write_csv(transmission_frame(result.transmission), path / "transmission.csv"))
    if fmt in ("json", "both"):
        written.append(write_json(result.to_document(), path / "heat.json"))
    return written


def export_scaling(result: ScalingResult, out_dir: str, fmt: str = "both") -> List[Path]:
    path = _prepare(out_dir)
    written = []
    if fmt in ("csv", "both"):
        written.append(write_csv(result.records, path / "scaling.csv"))
        written.append(write_csv(result.cells, path / "scaling_cells.csv"))
        written.append(write_csv(result.fit_lines(), path / "scaling_fit.csv"))
    if fmt in ("json", "both"):
        written.append(write_json(result.to_document(), path / "scaling.json"))
    return written


def export_verify(result: VerifyResult, out_dir: str, fmt: str = "both") -> List[Path]:
    path = _prepare(out_dir)
    written = []
    if fmt in ("csv", "both"):
        report = pd.concat([result.covariance.to_frame(), result.heat.to_frame()], ignore_index=True)
        written.append(write_csv(report, path / "verify.csv"))
        target = path / "verify.txt"
        target.write_text(result.to_text() + "\n")
        written.append(target)
    if fmt in ("json", "both"):
        written.append(write_json(result.to_document(), path / "verify.json"))
    return written


EXPORTERS = {
    "STATE": export_state,
    "HEAT": export_heat,
    "SCALING": export_scaling,
    "VERIFY": export_verify,
}


def export_result(mode: str, result: Any, out_dir: str, fmt: str = "both") -> List[Path]:
    written = EXPORTERS[mode](result, out_dir, fmt)
    logger.info("wrote %d file(s) to %s", len(written), out_dir)
    return written
