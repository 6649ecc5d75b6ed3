#!/usr/bin/env python3
"""
Run one study per grading parameter and tabulate the rates side by side:
one row per level, one column per kappa, separately for H1 and L2.

    kappa_sweep.py configs/lshape_uniform.yaml --kappa 0.1 0.2 0.3 0.4 0.5 --workers 4
"""

import os
import sys

# Add project root to Python path for imports
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

import argparse
import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from controllers.study_config import StudyConfig, load_study_config
from controllers.study_controller import run_study
from core.errors import ExportError, FemError
from solvers.norms import StudyReport

logger = logging.getLogger(__name__)

RATE_COLUMNS = {"H1": "h1_rate", "L2": "l2_rate"}


def _run_one(config: StudyConfig, kappa: float) -> StudyReport:
    return run_study(config.with_kappa(kappa), write_artifacts=False)


def _run_from_file(config_path: str, kappa: float) -> StudyReport:
    # worker processes rebuild the config; parsed expressions stay in the worker
    return _run_one(load_study_config(config_path), kappa)


class KappaSweep:
    """A set of studies that differ only in kappa"""

    def __init__(self, config: StudyConfig, kappas: Sequence[float], config_path: Optional[str] = None):
        if not kappas:
            raise ValueError("no kappa values given")
        self.config = config
        self.kappas = sorted(set(float(k) for k in kappas))
        self.config_path = config_path
        self.reports: Dict[float, StudyReport] = {}

    def run(self, workers: int = 1) -> Dict[float, StudyReport]:
        if workers > 1 and self.config_path:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {k: pool.submit(_run_from_file, self.config_path, k) for k in self.kappas}
                self.reports = {k: futures[k].result() for k in self.kappas}
        else:
            self.reports = {k: _run_one(self.config, k) for k in self.kappas}
        return self.reports

    def rate_table(self, norm: str) -> List[List[str]]:
        """Rows [j, rate(kappa_1), rate(kappa_2), ...] for levels with a defined rate"""
        attribute = RATE_COLUMNS[norm]
        levels = max(len(report.rows) for report in self.reports.values())
        table = [["j"] + [f"kappa={k:g}" for k in self.kappas]]
        for j in range(levels):
            values = []
            for k in self.kappas:
                rows = self.reports[k].rows
                rate = getattr(rows[j], attribute) if j < len(rows) else None
                values.append("-" if rate is None else f"{rate:.4f}")
            if any(v != "-" for v in values):
                table.append([str(j)] + values)
        return table

    def to_csv(self, norm: str) -> str:
        buffer = io.StringIO()
        csv.writer(buffer, lineterminator="\n").writerows(self.rate_table(norm))
        return buffer.getvalue()

    def write(self, directory: str, stem: str) -> List[Path]:
        paths = []
        for norm in RATE_COLUMNS:
            path = Path(directory) / f"{stem}_{norm}_rates.csv"
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(self.to_csv(norm))
            except OSError as e:
                raise ExportError(f"cannot write {path}: {e}")
            paths.append(path)
        return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Rate tables over a range of grading parameters")
    parser.add_argument("config", help="Base study config (its grading is replaced)")
    parser.add_argument("--kappa", type=float, nargs="+", default=[0.1, 0.2, 0.3, 0.4, 0.5],
                        help="Grading parameters to sweep")
    parser.add_argument("--workers", type=int, default=1, help="Parallel worker processes")
    parser.add_argument("--output-dir", default=".", help="Directory for the rate tables")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        config = load_study_config(args.config)
        sweep = KappaSweep(config, args.kappa, config_path=args.config)
        print(f"🔺 Sweeping kappa over {sweep.kappas} for '{config.name}' ({config.levels} levels)")
        sweep.run(workers=args.workers)
        for norm in RATE_COLUMNS:
            print(f"\n📈 {norm} rates")
            for row in sweep.rate_table(norm):
                print("   " + "  ".join(f"{cell:>11}" for cell in row))
        for path in sweep.write(args.output_dir, config.name):
            print(f"📄 {path}")
    except FemError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 1
    print("✅ Sweep finished")
    return 0


if __name__ == "__main__":
    sys.exit(main())
