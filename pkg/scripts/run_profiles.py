import argparse
import json
from pathlib import Path

from src.config import configure_logging, settings
from src.experiments import PROFILE_SIZES, ExperimentConfig, format_table, run_experiment, save_report, summary_table
from src.precision import PrecisionFormat


def main():
    parser = argparse.ArgumentParser(description="Run float16 and bfloat16 noise audits for one profile.")
    parser.add_argument("--profile", choices=sorted(PROFILE_SIZES), default="desk")
    parser.add_argument("--seed", type=int, default=20240601)
    parser.add_argument("--n-jobs", type=int, default=-1)
    args = parser.parse_args()
    configure_logging()

    out_dir = settings.setup().output_dir / args.profile
    reports = []
    for precision in (PrecisionFormat.FLOAT16, PrecisionFormat.BFLOAT16):
        cfg = ExperimentConfig(**PROFILE_SIZES[args.profile], precision=precision, seed=args.seed)
        report = run_experiment(cfg, n_jobs=args.n_jobs)
        save_report(report, out_dir / f'noise_{precision}.json', retain_covariance=True)
        reports.append(report)

    comparison_path = out_dir / 'comparison.json'
    with open(comparison_path, 'w', encoding='utf-8') as f:
        json.dump(summary_table(reports).to_dict(orient='records'), f, indent=2)
    print(format_table(reports))
    print('Saved comparison to', comparison_path)


if __name__ == '__main__':
    main()
