import logging
from pathlib import Path
from typing import Optional, Union

import matplotlib
matplotlib.use('Agg')
from matplotlib.figure import Figure
import pandas as pd

from core.methods import method_family

logger = logging.getLogger(__name__)

# Fixed salt and no date stamp keep SVG output byte-identical between runs
matplotlib.rcParams['svg.hashsalt'] = 'survdiff'
SVG_METADATA = {'Date': None}

GROUP_COLORS = {0: '#2980b9', 1: '#c0392b'}
FAMILY_STYLES = {
    'energy': ('-', 'o'),
    'kernel': ('--', 's'),
    'logrank': (':', '^'),
    'schumacher': ('-.', 'd'),
}


def _style_axes(ax, title: str, xlabel: str, ylabel: str) -> None:
    ax.grid(True, which='major', linestyle='--', linewidth=0.7, alpha=0.7)
    ax.grid(True, which='minor', linestyle=':', linewidth=0.5, alpha=0.4)
    ax.minorticks_on()
    ax.set_title(title, fontsize=12, fontweight='bold', pad=15)
    ax.set_xlabel(xlabel, fontsize=10, fontweight='bold')
    ax.set_ylabel(ylabel, fontsize=10, fontweight='bold')


def _show_empty_message(ax, message: str) -> None:
    ax.text(0.5, 0.5, message,
            horizontalalignment='center',
            verticalalignment='center',
            transform=ax.transAxes,
            fontsize=14, color='gray')
    ax.axis('off')


def _save(figure: Figure, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.tight_layout()
    figure.savefig(path, format='svg', metadata=SVG_METADATA)
    logger.info(f"Wrote chart {path}")
    return path


def plot_survival_curves(curves: pd.DataFrame, path: Union[str, Path], title: str = "Kaplan-Meier estimate",
                         truth: Optional[pd.DataFrame] = None) -> Path:
    """
    Step chart of survival curves. `curves` has columns group, t, survival with
    each group's rows in time order (right-continuous steps). `truth`, in the
    same layout, is drawn as thin dashed lines.
    """
    figure = Figure(figsize=(8, 5), dpi=100)
    ax = figure.add_subplot(111)

    if curves.empty:
        _show_empty_message(ax, 'No Survival Data Available')
        return _save(figure, path)

    for group, rows in curves.groupby('group', sort=True):
        ax.step(rows['t'].to_numpy(), rows['survival'].to_numpy(), where='post',
                linewidth=2, color=GROUP_COLORS.get(int(group), None), label=f"group {group}")

    if truth is not None:
        for group, rows in truth.groupby('group', sort=True):
            ax.plot(rows['t'].to_numpy(), rows['survival'].to_numpy(), linestyle='--', linewidth=1,
                    color=GROUP_COLORS.get(int(group), None), label=f"group {group} (true)")

    _style_axes(ax, title, "Time", "Survival probability")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlim(left=0)
    ax.legend(loc='upper right')
    return _save(figure, path)


def plot_power_curves(power: pd.DataFrame, path: Union[str, Path], title: Optional[str] = None) -> Path:
    """Power against effect size, one line per method; `power` has columns theta, method, power."""
    figure = Figure(figsize=(9, 6), dpi=100)
    ax = figure.add_subplot(111)

    if power.empty:
        _show_empty_message(ax, 'No Power Results Available')
        return _save(figure, path)

    for method, rows in power.groupby('method', sort=False):
        linestyle, marker = FAMILY_STYLES.get(method_family(method), ('-', 'o'))
        ax.plot(rows['theta'].to_numpy(), rows['power'].to_numpy(), linestyle=linestyle,
                marker=marker, markersize=4, linewidth=1.5, label=method)

    _style_axes(ax, title or "Power by effect size", "theta", "Rejection rate")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc='lower right', fontsize=7, ncol=2)
    return _save(figure, path)
