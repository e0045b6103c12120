"""Report persistence: JSON reports, the retained covariance sidecar and summary tables."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..errors import ReportError
from .schemas import NoiseReport

logger = logging.getLogger(__name__)


def covariance_sidecar_path(report_path: Path) -> Path:
    return Path(report_path).with_suffix(".cov.npy")


def save_report(report: NoiseReport, path: Path, retain_covariance: bool = False) -> Path:
    """Write ``report`` as JSON; with ``retain_covariance`` the full matrix goes to a .npy sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if retain_covariance:
        if report.sigma_matrix is None or report.covariance is None:
            raise ReportError("report carries no covariance matrix to retain (needs n_trials >= 2)")
        sidecar = covariance_sidecar_path(path)
        np.save(sidecar, report.sigma_matrix)
        report.covariance.matrix_path = sidecar.name
        logger.info("Saved covariance matrix to %s", sidecar)
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    logger.info("Saved report to %s", path)
    return path


def load_report(path: Path) -> NoiseReport:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        return NoiseReport.model_validate_json(text)
    except ValidationError as e:
        raise ReportError(f"{path} is not a valid noise report: {e}") from e


def load_covariance_matrix(report: NoiseReport, report_path: Path) -> np.ndarray:
    if report.covariance is None or report.covariance.matrix_path is None:
        raise ReportError(
            f"{report_path} has no retained covariance; re-run with --retain-covariance"
        )
    sidecar = Path(report_path).parent / report.covariance.matrix_path
    if not sidecar.exists():
        raise ReportError(f"covariance sidecar {sidecar} is missing; re-run with --retain-covariance")
    return np.load(sidecar)


def write_covariance_csv(matrix: np.ndarray, path: Path, n_samples: int, off_diagonal_ratio: float) -> Path:
    """Sigma as (i, j, value) rows under a one-line '# K=..., N=..., R_off=...' header."""
    matrix = np.asarray(matrix, dtype=np.float64)
    k = matrix.shape[0]
    i, j = np.indices(matrix.shape)
    df = pd.DataFrame({"i": i.ravel(), "j": j.ravel(), "value": matrix.ravel()})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# K={k}, N={n_samples}, R_off={off_diagonal_ratio!r}\n")
        df.to_csv(f, index=False, float_format="%.17g")
    return path


def read_covariance_csv(path: Path) -> np.ndarray:
    df = pd.read_csv(path, comment="#")
    k = int(df["i"].max()) + 1
    matrix = np.zeros((k, k), dtype=np.float64)
    matrix[df["i"].to_numpy(), df["j"].to_numpy()] = df["value"].to_numpy()
    return matrix


def _pct(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{100.0 * value:.2f}"


def _sci(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.3e}"


def _status(report: NoiseReport) -> str:
    if report.degenerate:
        return "DEGENERATE"
    if report.calibration == "calibration_failure":
        return "CALIBRATION FAILURE"
    if report.structured_noise is None:
        return "ok"
    return "structured" if report.structured_noise else "not above null"


def summary_table(reports: Iterable[NoiseReport]) -> pd.DataFrame:
    """One row per report: noise level, flip rates, divergence and off-diagonal ratios against the null."""
    rows = []
    for r in reports:
        rows.append({
            "Precision": str(r.config.precision),
            "Accumulator": str(r.accumulator),
            "Sigma": _sci(r.sigma),
            "Empirical Flip (%)": _pct(r.flip_stats.empirical_rate),
            "Predicted Flip (%)": _pct(r.flip_stats.predicted_rate),
            "E[D_JS]": _sci(r.expected_js),
            "R_off (%)": _pct(r.covariance.off_diagonal_ratio if r.covariance else None),
            "Null R_off (%)": _pct(r.null_baseline.off_diagonal_ratio if r.null_baseline else None),
            "Status": _status(r),
        })
    return pd.DataFrame(rows)


def format_table(reports: Iterable[NoiseReport]) -> str:
    return summary_table(reports).to_string(index=False)
