"""Command-line surface: run experiments, check the i.i.d. null, inspect and export reports.

Exit codes: 0 success, 2 configuration error, 3 I/O or report error, 4 validation failure.
"""

from __future__ import annotations

import argparse
import functools
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..config import configure_logging, settings
from ..errors import ConfigError, ReportError
from ..experiments import (
    PROFILE_SIZES,
    ExperimentConfig,
    NoiseReport,
    format_table,
    load_covariance_matrix,
    load_report,
    run_experiment,
    save_report,
    write_covariance_csv,
)
from ..stats import binomial_standard_error, simulate_iid_null

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VALIDATION = 4


class Verb(str, Enum):
    RUN = "run"
    VALIDATE_NULL = "validate-null"
    SHOW = "show"
    DUMP_COVARIANCE = "dump-cov"


class NullCheckConfig(BaseModel):
    """Inputs of ``validate-null``: one noise level and exactly one source of margins."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    sigma: float = Field(..., gt=0)
    margin: Optional[float] = Field(None, ge=0)
    # Delta / (sigma * sqrt(2))
    margin_ratio: Optional[float] = Field(None, ge=0)
    margins_file: Optional[Path] = None
    n_draws: int = Field(1_000_000, ge=2)
    seed: int = Field(..., ge=-(1 << 63), lt=1 << 64)

    @model_validator(mode="after")
    def _one_margin_source(self):
        given = [n for n in ("margin", "margin_ratio", "margins_file") if getattr(self, n) is not None]
        if len(given) != 1:
            raise ValueError("exactly one of margin, margin_ratio, margins_file is required")
        return self

    def margins(self) -> np.ndarray:
        if self.margin is not None:
            return np.array([self.margin], dtype=np.float64)
        if self.margin_ratio is not None:
            return np.array([self.margin_ratio * self.sigma * math.sqrt(2.0)], dtype=np.float64)
        try:
            df = pd.read_csv(self.margins_file, header=None, comment="#")
            values = pd.to_numeric(df.iloc[:, 0], errors="raise").to_numpy(dtype=np.float64)
        except pd.errors.EmptyDataError:
            values = np.empty(0)
        except (ValueError, TypeError) as e:
            raise ConfigError("margins_file", f"{self.margins_file} holds non-numeric margins") from e
        if values.size == 0 or np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ConfigError("margins_file", "margins must be a non-empty list of finite values >= 0")
        return values


_VERB_MODELS: Dict[Verb, Type[BaseModel]] = {
    Verb.RUN: ExperimentConfig,
    Verb.VALIDATE_NULL: NullCheckConfig,
}


@dataclass
class CliCommand:
    """A parsed invocation. ``overrides`` only ever holds keys the verb's config model defines."""

    verb: Verb
    config_path: Optional[Path] = None
    overrides: Dict[str, Any] = field(default_factory=dict)
    output_path: Optional[Path] = None
    report_path: Optional[Path] = None
    profile: Optional[str] = None
    n_jobs: int = 1
    retain_covariance: bool = False
    covariance_csv: bool = False

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "CliCommand":
        verb = Verb(ns.verb)
        overrides: Dict[str, Any] = {}
        model = _VERB_MODELS.get(verb)
        if model is not None:
            # Typed flags first, then --set assignments
            for name in model.model_fields:
                value = getattr(ns, name, None)
                if value is not None:
                    overrides[name] = value
            for key, value in getattr(ns, "assignments", None) or []:
                overrides[_field_name(key, model)] = value
        return cls(
            verb=verb,
            config_path=getattr(ns, "config", None),
            overrides=overrides,
            output_path=getattr(ns, "output", None),
            report_path=getattr(ns, "report", None),
            profile=getattr(ns, "profile", None),
            n_jobs=getattr(ns, "n_jobs", 1) or 1,
            retain_covariance=bool(getattr(ns, "retain_covariance", False)),
            covariance_csv=bool(getattr(ns, "covariance_csv", False)),
        )


def _field_name(key: str, model: Type[BaseModel]) -> str:
    name = key.strip().replace("-", "_")
    if name not in model.model_fields:
        known = ", ".join(sorted(model.model_fields))
        raise ConfigError(key, f"unknown configuration field (known: {known})")
    return name


def _assignment(text: str) -> Tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key.strip(), value.strip()


def _read_config_file(path: Path) -> Dict[str, Any]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} must hold a JSON object")
    return data


def resolve_config(cmd: CliCommand, model: Optional[Type[BaseModel]] = None):
    """Layer profile, config file and command-line overrides, then validate.

    Later layers win. Unknown keys and missing seeds are configuration errors.
    """
    model = model or _VERB_MODELS[cmd.verb]
    values: Dict[str, Any] = {}
    if cmd.profile:
        values.update(PROFILE_SIZES[cmd.profile])
    if cmd.config_path is not None:
        for key, value in _read_config_file(cmd.config_path).items():
            values[_field_name(key, model)] = value
    for key, value in cmd.overrides.items():
        values[_field_name(key, model)] = value

    if values.get("seed") is None:
        raise ConfigError("seed", "an explicit seed is required (--seed, --set seed=N or the config file)")
    try:
        resolved = model.model_validate(values)
    except ValidationError as e:
        err = e.errors()[0]
        name = ".".join(str(p) for p in err["loc"]) or "config"
        raise ConfigError(name, err["msg"]) from e
    if isinstance(resolved, ExperimentConfig) and resolved.n_trials < 2:
        if cmd.retain_covariance or cmd.covariance_csv:
            raise ConfigError("n_trials", "covariance output needs at least 2 trials")
    return resolved


def _exit_codes(func: Callable[[CliCommand], int]) -> Callable[[CliCommand], int]:
    @functools.wraps(func)
    def wrapper(cmd: CliCommand) -> int:
        try:
            return func(cmd)
        except ConfigError as e:
            logger.error("Invalid configuration: %s", e)
            print(f"error: invalid configuration: {e}", file=sys.stderr)
            return EXIT_CONFIG
        except (OSError, ReportError) as e:
            logger.error("I/O failure: %s", e)
            print(f"error: {e}", file=sys.stderr)
            return EXIT_IO
    return wrapper


def _default_output(cfg: ExperimentConfig) -> Path:
    return settings.setup().output_dir / f"noise_{cfg.precision}_{cfg.accumulator_precision}_seed{cfg.seed}.json"


@_exit_codes
def cmd_run(cmd: CliCommand) -> int:
    cfg = resolve_config(cmd, ExperimentConfig)
    out = Path(cmd.output_path) if cmd.output_path else _default_output(cfg)
    logger.info("Running %d trials: %s", cfg.n_trials, cfg.model_dump_json())

    report = run_experiment(cfg, n_jobs=cmd.n_jobs)
    save_report(report, out, retain_covariance=cmd.retain_covariance)
    if cmd.covariance_csv:
        csv_path = write_covariance_csv(
            report.sigma_matrix, out.with_suffix(".cov.csv"),
            report.covariance.n_samples, report.covariance.off_diagonal_ratio,
        )
        print('Saved covariance to', csv_path)

    print(format_table([report]))
    print(f"Finished {cfg.n_trials} trials in {report.wall_time_seconds:.1f}s")
    print('Saved report to', out)
    return EXIT_OK


def _describe(report: NoiseReport) -> List[str]:
    flips = report.flip_stats
    lines = [
        f"config:       {report.config.model_dump_json()}",
        f"accumulator:  {report.accumulator}",
        f"sigma:        {report.sigma:.6e}"
        + (f" +/- {report.sigma_stderr:.2e}" if report.sigma_stderr is not None else ""),
        f"flips:        {flips.n_flips}/{flips.n_samples}",
        f"E[D_JS]:      {report.expected_js:.6e}",
        f"calibration:  {report.calibration}",
    ]
    if report.covariance is not None:
        c = report.covariance
        lines.append(
            f"covariance:   K={c.k}, N={c.n_samples}, trace={c.trace:.6e}, "
            f"min eig={c.min_eigenvalue:.3e}, psd={c.psd}, R_off={c.off_diagonal_ratio:.6f}"
        )
    if report.null_baseline is not None:
        nb = report.null_baseline
        lines.append(
            f"i.i.d. null:  {nb.n_draws} draws, flips={nb.n_flips} "
            f"(predicted {100 * nb.predicted_flip_rate:.4f}%), R_off={nb.off_diagonal_ratio}"
        )
    return lines


@_exit_codes
def cmd_show(cmd: CliCommand) -> int:
    report = load_report(cmd.report_path)
    print(format_table([report]))
    print()
    print("\n".join(_describe(report)))
    return EXIT_OK


@_exit_codes
def cmd_dump_covariance(cmd: CliCommand) -> int:
    report_path = Path(cmd.report_path)
    report = load_report(report_path)
    matrix = load_covariance_matrix(report, report_path)
    out = Path(cmd.output_path) if cmd.output_path else report_path.with_suffix(".cov.csv")
    write_covariance_csv(matrix, out, report.covariance.n_samples, report.covariance.off_diagonal_ratio)
    print('Saved covariance to', out)
    return EXIT_OK


@_exit_codes
def cmd_validate_null(cmd: CliCommand) -> int:
    """Check the closed-form flip prediction against i.i.d. Gaussian draws.

    Outputs are y = (margin, 0); passes when the empirical flip rate lies within
    three binomial standard errors of the prediction.
    """
    ncfg = resolve_config(cmd, NullCheckConfig)
    margins = ncfg.margins()
    y_list = np.column_stack([margins, np.zeros_like(margins)])
    baseline = simulate_iid_null(y_list, ncfg.sigma, ncfg.seed, ncfg.n_draws)

    predicted = baseline.flip_stats.predicted_rate
    empirical = baseline.flip_stats.empirical_rate
    se = binomial_standard_error(predicted, ncfg.n_draws)
    gap = abs(empirical - predicted)
    if se > 0:
        z = gap / se
    else:
        z = 0.0 if gap == 0.0 else math.inf
    passed = z <= 3.0

    table = pd.DataFrame([{
        "Sigma": f"{ncfg.sigma:.3e}",
        "Margins": len(margins),
        "Draws": ncfg.n_draws,
        "Predicted Flip (%)": f"{100 * predicted:.4f}",
        "Empirical Flip (%)": f"{100 * empirical:.4f}",
        "Std. Error (%)": f"{100 * se:.4f}",
        "|z|": f"{z:.2f}",
        "Verdict": "PASS" if passed else "FAIL",
    }])
    print(table.to_string(index=False))
    if not passed:
        logger.error("Empirical flip rate %.6f is %.2f standard errors from %.6f", empirical, z, predicted)
        return EXIT_VALIDATION
    return EXIT_OK


_HANDLERS: Dict[Verb, Callable[[CliCommand], int]] = {
    Verb.RUN: cmd_run,
    Verb.VALIDATE_NULL: cmd_validate_null,
    Verb.SHOW: cmd_show,
    Verb.DUMP_COVARIANCE: cmd_dump_covariance,
}


def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with experiment configuration fields")
    p.add_argument("--profile", choices=sorted(PROFILE_SIZES), help="preset dimensions and trial count")
    p.add_argument("--set", dest="assignments", action="append", type=_assignment, metavar="KEY=VALUE",
                   help="override any configuration field; may be repeated")
    p.add_argument("--d-in", type=int)
    p.add_argument("--d-out", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--n-trials", type=int)
    p.add_argument("--precision", help="f16, bf16 or f32")
    p.add_argument("--schedule-single", help="e.g. sequential, pairwise, blocked:32, permuted:7")
    p.add_argument("--schedule-batched")
    p.add_argument("--seed", type=int)
    p.add_argument("--widened", dest="widened_accumulator", action="store_true", default=None)
    p.add_argument("--accumulator", choices=["native", "f32", "f64"])
    p.add_argument("--fixed-weights", action="store_true", default=None)
    p.add_argument("--flush-to-zero", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noise-audit",
        description="Measure batch-size-dependent rounding noise in reduced-precision matmuls.",
        allow_abbrev=False,
    )
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser(Verb.RUN.value, help="run an experiment and write a report", allow_abbrev=False)
    _add_experiment_args(run)
    run.add_argument("--output", "-o", type=Path, help="report path (default: <output_dir>/noise_*.json)")
    run.add_argument("--n-jobs", type=int, default=1, help="joblib workers; results do not depend on it")
    run.add_argument("--retain-covariance", action="store_true", help="write the full matrix to a .cov.npy sidecar")
    run.add_argument("--covariance-csv", action="store_true", help="also write the matrix as .cov.csv")

    null = sub.add_parser(Verb.VALIDATE_NULL.value, help="check predicted flip rates on i.i.d. draws",
                          allow_abbrev=False)
    null.add_argument("--config", type=Path)
    null.add_argument("--set", dest="assignments", action="append", type=_assignment, metavar="KEY=VALUE")
    null.add_argument("--sigma", type=float)
    group = null.add_mutually_exclusive_group()
    group.add_argument("--margin", type=float)
    group.add_argument("--margin-ratio", type=float, help="margin / (sigma * sqrt(2))")
    group.add_argument("--margins-file", type=Path, help="one margin per line")
    null.add_argument("--n-draws", type=int)
    null.add_argument("--seed", type=int)

    show = sub.add_parser(Verb.SHOW.value, help="print a saved report", allow_abbrev=False)
    show.add_argument("report", type=Path)

    dump = sub.add_parser(Verb.DUMP_COVARIANCE.value, help="export a retained covariance as CSV",
                          allow_abbrev=False)
    dump.add_argument("report", type=Path)
    dump.add_argument("--output", "-o", type=Path)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (None, 0) else EXIT_CONFIG
    configure_logging(args.log_level)
    try:
        cmd = CliCommand.from_args(args)
    except ConfigError as e:
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return _HANDLERS[cmd.verb](cmd)
