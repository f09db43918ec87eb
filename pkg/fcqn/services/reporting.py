# fcqn/services/reporting.py
import hashlib
import json
import logging
from importlib import metadata
from pathlib import Path

import pandas as pd

from fcqn import __version__
from fcqn.schemas import ExperimentConfig, Report

logger = logging.getLogger(__name__)

DISPLAY_DECIMALS = 3
_LIBRARIES = ("numpy", "scipy", "cvxpy", "pandas", "pydantic")


def canonical_config(config: ExperimentConfig) -> dict:
    return config.model_dump(mode="json")


def config_hash(config: ExperimentConfig) -> str:
    payload = json.dumps(canonical_config(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def versions() -> dict[str, str]:
    out = {"fcqn": __version__}
    for name in _LIBRARIES:
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = "unknown"
    return out


def with_display_columns(frame: pd.DataFrame) -> pd.DataFrame:
    """Full-precision columns followed by 3-decimal ``*_display`` copies of every float column."""
    out = frame.copy()
    for col in frame.columns:
        if pd.api.types.is_float_dtype(frame[col]):
            out[f"{col}_display"] = frame[col].map(lambda v: f"{v:.{DISPLAY_DECIMALS}f}")
    return out


def write_report(report: Report, output_dir: str | Path, fmt: str = "csv") -> list[Path]:
    """Write report.json plus one table file per result table; returns the paths written."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    report_path = out / "report.json"
    report_path.write_text(json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
    written.append(report_path)

    for name, rows in report.tables.items():
        frame = with_display_columns(pd.DataFrame(rows))
        if fmt == "json":
            path = out / f"{name}.json"
            path.write_text(frame.to_json(orient="records", indent=2, double_precision=15) + "\n")
        else:
            path = out / f"{name}.csv"
            frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        written.append(path)
    logger.info("wrote %d files to %s", len(written), out)
    return written
