"""
graperun.plot.steps
###################

Functions to plot how scores develop over edit steps.

.. autosummary::
    :toctree: generated/

    draw_score_by_step
    draw_edit_steps
"""

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import pandas as pd  # noqa: E402
from matplotlib import pyplot as plt  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from ..core import ReportError  # noqa: E402
from ..log import logger  # noqa: E402

SCORE_LABELS = {"dsg": "DSG", "dsg_no_dep": "DSG (w/o dependency)", "qa": "QA score"}


def draw_score_by_step(table: pd.DataFrame, save_path: str, metrics: Sequence[str] = ("dsg", "qa")) -> Figure:
    """
    Draw mean scores against the number of executed edit steps, one line per mode and metric.

    :param table: Table from :func:`score_by_step_table <graperun.eval.report.score_by_step_table>`.
    :type table: pd.DataFrame
    :param save_path: Image path.
    :type save_path: str
    :param metrics: Columns to draw.
    :type metrics: Sequence[str]
    :return: Figure.
    :rtype: Figure
    """
    if len(table) == 0:
        logger.error("No scored steps to plot.")
        raise ReportError("No scored steps to plot.")

    fig, ax = plt.subplots(figsize=(6, 4))

    for _mode, _rows in table.groupby("mode", sort=True):
        for _metric in metrics:
            ax.plot(_rows["step"], _rows[_metric], marker="o", label=f"{_mode} {SCORE_LABELS.get(_metric, _metric)}")

    ax.set_xlabel("Edit step")
    ax.set_ylabel("Mean score")
    ax.set_ylim(0, 1.05)
    ax.xaxis.get_major_locator().set_params(integer=True)
    ax.grid(alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()

    fig.savefig(save_path, dpi=150)
    plt.close(fig)
    logger.info(f"Saved figure to '{save_path}'")
    return fig


def draw_edit_steps(table: pd.DataFrame, save_path: str) -> Figure:
    """
    Bar chart of the average plan length per benchmark and K.

    :param table: Table from :func:`edit_steps_table <graperun.eval.report.edit_steps_table>`.
    :type table: pd.DataFrame
    :param save_path: Image path.
    :type save_path: str
    :return: Figure.
    :rtype: Figure
    """
    if len(table) == 0:
        logger.error("No plans to plot.")
        raise ReportError("No plans to plot.")

    labels = [f"{_b}\nK={_k}" if _k != "-" else str(_b) for _b, _k in zip(table["benchmark"], table["k"])]

    fig, ax = plt.subplots(figsize=(max(4, len(labels) * 0.9), 4))
    ax.bar(range(len(labels)), table["avg_edit_steps"], color="tab:blue")
    ax.set_xticks(range(len(labels)), labels, fontsize="small")
    ax.set_ylabel("Average edit steps per plan")
    fig.tight_layout()

    fig.savefig(save_path, dpi=150)
    plt.close(fig)
    logger.info(f"Saved figure to '{save_path}'")
    return fig


__all__ = ["draw_score_by_step", "draw_edit_steps"]
