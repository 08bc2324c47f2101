import json
import logging
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from core.data_manager import order_with_censoring, two_sample_to_frame
from core.km import km_survival
from core.models import TestResult, TwoSampleData
from core.simulator import StudyResult, family_power

logger = logging.getLogger(__name__)

CSV_OPTIONS = {"index": False, "lineterminator": "\n", "float_format": "%.10g"}


def _ensure_parent(path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# --- Single test ---

def result_frame(result: TestResult) -> pd.DataFrame:
    return pd.DataFrame([result.to_dict()])


def write_result_json(result: TestResult, path: Union[str, Path]) -> Path:
    path = _ensure_parent(path)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(result.to_dict(), f, indent=2)
        f.write("\n")
    return path


def write_result_csv(result: TestResult, path: Union[str, Path]) -> Path:
    path = _ensure_parent(path)
    result_frame(result).to_csv(path, **CSV_OPTIONS)
    return path


def format_result(result: TestResult) -> str:
    lines = [
        f"method       {result.method}",
        f"statistic    {result.statistic:.10g}",
        f"p_value      {result.p_value:.6g}",
        f"R            {result.replications}{' (exhaustive)' if result.exhaustive else ''}",
        f"seed         {result.seed}",
    ]
    if result.asymptotic_p_value is not None:
        lines.append(f"chi2(1) p    {result.asymptotic_p_value:.6g}")
    if result.n_degenerate:
        lines.append(f"degenerate   {result.n_degenerate} permuted splits")
    return "\n".join(lines)


# --- Studies ---

def format_summary(result: StudyResult) -> str:
    frame = result.summary_frame()
    header = f"# {result.scenario}: {result.replications} replications, alpha={result.alpha_level:g}"
    return header + "\n" + frame.to_string(index=False, float_format=lambda v: f"{v:.3f}")


def format_family_power(result: StudyResult) -> str:
    families = family_power(result)
    return "  ".join(f"{name}={value:.3f}" for name, value in families.items())


def write_study_outputs(result: StudyResult, out_dir: Union[str, Path], stem: Optional[str] = None) -> Dict[str, Path]:
    """Writes <stem>-summary.csv and <stem>-pvalues.csv into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or result.scenario

    summary_path = out_dir / f"{stem}-summary.csv"
    pvalues_path = out_dir / f"{stem}-pvalues.csv"
    result.summary_frame().to_csv(summary_path, **CSV_OPTIONS)
    result.pvalue_frame().to_csv(pvalues_path, **CSV_OPTIONS)
    logger.info(f"Wrote {summary_path.name} and {pvalues_path.name} to {out_dir}")
    return {"summary": summary_path, "pvalues": pvalues_path}


# --- Curves ---

def survival_curve_frame(data: TwoSampleData) -> pd.DataFrame:
    """KM curve of each group as (group, t, survival) rows, starting at t=0 with S=1."""
    frames = []
    for g, sample in enumerate((data.group0, data.group1)):
        curve = km_survival(order_with_censoring(sample))
        rows = np.array(curve.to_rows(), dtype=np.float64).reshape(-1, 2)
        # extend to the last observation so censored tails show
        last = float(sample.times.max())
        if last > rows[-1, 0]:
            rows = np.vstack([rows, [last, rows[-1, 1]]])
        frames.append(pd.DataFrame({"group": g, "t": rows[:, 0], "survival": rows[:, 1]}))
    return pd.concat(frames, ignore_index=True)


def write_curves_csv(curves: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = _ensure_parent(path)
    curves.to_csv(path, columns=["group", "t", "survival"], **CSV_OPTIONS)
    return path



def write_dataset_csv(data: TwoSampleData, path: Union[str, Path]) -> Path:
    """A `time,event,group` CSV that `load_two_sample_csv` reads back."""
    path = _ensure_parent(path)
    two_sample_to_frame(data).to_csv(path, **CSV_OPTIONS)
    logger.info(f"Wrote {data.n0} + {data.n1} subjects to {path.name}")
    return path
