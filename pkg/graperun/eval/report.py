"""
graperun.eval.report
####################

.. autosummary::
    :toctree: generated/

    load_run_manifests
    trace_table
    step_table
    summary_table
    comparison_table
    edit_steps_table
    score_by_step_table
    write_report
    print_comparison

Tables built from trace manifests (the dicts written by :meth:`PipelineTrace.to_manifest`).
They work on plain dicts so reports can be made from run directories alone.

=========================== ==============================================================================
File                        Content
=========================== ==============================================================================
``comparison.csv``          Mean and deviation across seeds of the final scores, per benchmark, K and mode.
``edit_steps.csv``          Average plan length per benchmark, K and mode.
``score_by_step.csv``       Mean scores of the images after each edit step, per mode.
=========================== ==============================================================================
"""

from json import JSONDecodeError, loads
from os.path import exists
from typing import Iterable, Sequence

import pandas as pd
from rich.table import Table

from ..core import ReportError, ScoreInputError
from ..log import get_graperun_rich_console, logger
from ..utils import check_path
from .scores import aggregate

GROUP_KEYS = ["benchmark", "k", "mode"]
SCORE_COLUMNS = ["dsg", "dsg_no_dep", "qa"]
TRACE_COLUMNS = [
    "prompt_id",
    *GROUP_KEYS,
    "seed",
    "status",
    "plan_length",
    "executed_steps",
    *SCORE_COLUMNS,
    "unanswered",
    "planner_prompt_tokens",
    "planner_completion_tokens",
    "cost",
]
MANIFEST_KEYS = ("prompt", "mode", "seed", "status", "plan", "executed_steps", "scores", "accounting")


def load_run_manifests(run_dir: str) -> list[dict]:
    """
    Read ``manifest.jsonl`` of a run directory.

    :param run_dir: Run directory.
    :type run_dir: str
    :return: Trace manifests.
    :rtype: list
    """
    path = f"{run_dir}/manifest.jsonl"
    if not exists(path):
        logger.error(f"'{run_dir}' has no manifest.jsonl, is it a run directory?")
        raise ReportError(f"'{run_dir}' has no manifest.jsonl, is it a run directory?")

    manifests = []
    with open(path, "r") as f:
        for line_no, line in enumerate(f, start=1):
            if line.strip() == "":
                continue
            try:
                manifest = loads(line)
            except JSONDecodeError as e:
                logger.error(f"Can't parse line {line_no} of '{path}': {e}")
                raise ReportError(f"Can't parse line {line_no} of '{path}': {e}")

            missing = [_key for _key in MANIFEST_KEYS if _key not in manifest]
            if len(missing) > 0:
                logger.error(f"Line {line_no} of '{path}' isn't a trace manifest, missing keys: {missing}")
                raise ReportError(f"Line {line_no} of '{path}' isn't a trace manifest, missing keys: {missing}")

            manifests.append(manifest)

    return manifests


def _k_label(k) -> str:
    return "-" if k is None else str(k)


def trace_table(manifests: Iterable[dict]) -> pd.DataFrame:
    """
    One row per trace, with the scores of its final image.

    :param manifests: Trace manifests.
    :type manifests: Iterable[dict]
    :return: Table.
    :rtype: pd.DataFrame
    """
    rows = []
    for _manifest in manifests:
        prompt = _manifest["prompt"]
        scores = _manifest["scores"]
        final = scores[-1] if scores else {}
        rows.append(
            {
                "prompt_id": prompt["id"],
                "benchmark": prompt.get("benchmark", "custom"),
                "k": _k_label(prompt.get("k")),
                "mode": _manifest["mode"],
                "seed": _manifest["seed"],
                "status": _manifest["status"],
                "plan_length": len(_manifest["plan"]["steps"]),
                "executed_steps": _manifest["executed_steps"],
                "dsg": final.get("dsg"),
                "dsg_no_dep": final.get("dsg_no_dep"),
                "qa": final.get("qa"),
                "unanswered": sum(_score["unanswered_count"] for _score in scores) if scores else 0,
                "planner_prompt_tokens": _manifest["accounting"]["planner_prompt_tokens"],
                "planner_completion_tokens": _manifest["accounting"]["planner_completion_tokens"],
                "cost": _manifest["accounting"]["estimated_planning_cost"],
            }
        )

    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def step_table(manifests: Iterable[dict]) -> pd.DataFrame:
    """
    One row per scored image: the content of ``scores.csv``.

    :param manifests: Trace manifests.
    :type manifests: Iterable[dict]
    :return: Table.
    :rtype: pd.DataFrame
    """
    rows = []
    for _manifest in manifests:
        prompt = _manifest["prompt"]
        for _score in _manifest["scores"] or []:
            rows.append(
                {
                    "prompt_id": prompt["id"],
                    "benchmark": prompt.get("benchmark", "custom"),
                    "k": _k_label(prompt.get("k")),
                    "mode": _manifest["mode"],
                    "seed": _manifest["seed"],
                    "step": _score["step_index"],
                    "dsg": _score["dsg"],
                    "dsg_no_dep": _score["dsg_no_dep"],
                    "qa": _score["qa"],
                    "unanswered": _score["unanswered_count"],
                }
            )

    return pd.DataFrame(rows, columns=["prompt_id", *GROUP_KEYS, "seed", "step", *SCORE_COLUMNS, "unanswered"])


def _aggregate_group(group: pd.DataFrame) -> dict:
    result = {"prompts": group["prompt_id"].nunique(), "traces": len(group)}
    scored = group.dropna(subset=["dsg"])
    for _column in SCORE_COLUMNS:
        if len(scored) == 0:
            result[f"{_column}_mean"], result[f"{_column}_std"] = float("nan"), float("nan")
            continue
        per_seed = [_rows[_column].tolist() for _, _rows in scored.groupby("seed", sort=True)]
        result[f"{_column}_mean"], result[f"{_column}_std"] = aggregate(per_seed)
    return result


def summary_table(traces: pd.DataFrame) -> pd.DataFrame:
    """
    Aggregate a :func:`trace_table` per benchmark, K and mode: the content of ``summary.csv``.

    Means and deviations are taken across seeds, see :func:`aggregate <graperun.eval.scores.aggregate>`.

    :param traces: Trace table.
    :type traces: pd.DataFrame
    :return: Table.
    :rtype: pd.DataFrame
    """
    if len(traces) == 0:
        logger.error("No traces to summarize.")
        raise ReportError("No traces to summarize.")

    rows = []
    for _key, _group in traces.groupby(GROUP_KEYS, sort=True):
        row = dict(zip(GROUP_KEYS, _key))
        row.update(_aggregate_group(_group))
        row["avg_edit_steps"] = float(_group["plan_length"].mean())
        row["failed"] = int((_group["status"] != "complete").sum())
        row["mean_cost"] = float(_group["cost"].mean())
        rows.append(row)

    return pd.DataFrame(rows)


def _check_prompt_overlap(run_traces: Sequence[pd.DataFrame]):
    prompt_sets = [set(_traces["prompt_id"]) for _traces in run_traces]
    shared = set.intersection(*prompt_sets)
    if len(run_traces) > 1 and len(shared) == 0:
        logger.error("The runs share no prompt ids, their scores can't be compared.")
        raise ReportError("The runs share no prompt ids, their scores can't be compared.")

    union = set.union(*prompt_sets)
    if len(shared) < len(union):
        logger.warning(f"{len(union) - len(shared)} prompts are not in every run.")


def comparison_table(run_traces: Sequence[pd.DataFrame]) -> pd.DataFrame:
    """
    Mean and deviation of the final scores per benchmark, K and mode, over one or more runs.

    :param run_traces: One trace table per run directory.
    :type run_traces: Sequence[pd.DataFrame]
    :return: Table.
    :rtype: pd.DataFrame
    """
    if len(run_traces) == 0:
        logger.error("Report needs at least one run.")
        raise ReportError("Report needs at least one run.")

    _check_prompt_overlap(run_traces)
    traces = pd.concat(run_traces, ignore_index=True)

    try:
        summary = summary_table(traces)
    except ScoreInputError as e:
        logger.error(f"Can't aggregate scores: {e}")
        raise ReportError(f"Can't aggregate scores: {e}")

    return summary[GROUP_KEYS + ["prompts"] + [f"{_c}_{_s}" for _c in SCORE_COLUMNS for _s in ("mean", "std")]]


def edit_steps_table(traces: pd.DataFrame) -> pd.DataFrame:
    """
    Average plan length per benchmark, K and mode. Base traces have no plan and are left out.

    :param traces: Trace table.
    :type traces: pd.DataFrame
    :return: Table.
    :rtype: pd.DataFrame
    """
    planned = traces[traces["mode"] != "base"]
    table = planned.groupby(GROUP_KEYS, sort=True).agg(
        traces=("plan_length", "size"), avg_edit_steps=("plan_length", "mean"), avg_executed_steps=("executed_steps", "mean")
    )
    return table.reset_index()


def score_by_step_table(steps: pd.DataFrame) -> pd.DataFrame:
    """
    Mean scores of the images after each edit step, per mode.
    A trace only contributes to the steps it reached.

    :param steps: Step table, see :func:`step_table`.
    :type steps: pd.DataFrame
    :return: Table.
    :rtype: pd.DataFrame
    """
    table = steps.groupby(["mode", "step"], sort=True).agg(
        images=("dsg", "size"), dsg=("dsg", "mean"), dsg_no_dep=("dsg_no_dep", "mean"), qa=("qa", "mean")
    )
    return table.reset_index()


def write_report(run_dirs: Sequence[str], output_dir: str) -> dict[str, pd.DataFrame]:
    """
    Write the report tables of some run directories.

    :param run_dirs: Run directories.
    :type run_dirs: Sequence[str]
    :param output_dir: Directory of the CSV files.
    :type output_dir: str
    :return: Tables keyed by file stem: ``comparison``, ``edit_steps`` and ``score_by_step``.
    :rtype: dict
    """
    manifests = [load_run_manifests(_run_dir) for _run_dir in run_dirs]
    run_traces = [trace_table(_manifests) for _manifests in manifests]

    traces = pd.concat(run_traces, ignore_index=True)
    steps = pd.concat([step_table(_manifests) for _manifests in manifests], ignore_index=True)

    tables = {
        "comparison": comparison_table(run_traces),
        "edit_steps": edit_steps_table(traces),
        "score_by_step": score_by_step_table(steps),
    }

    check_path(output_dir)
    for _name, _table in tables.items():
        _table.to_csv(f"{output_dir}/{_name}.csv", index=False, float_format="%.6f")
        logger.info(f"Wrote '{output_dir}/{_name}.csv'")

    return tables


def print_comparison(comparison: pd.DataFrame):
    """
    Print a comparison table with one column per mode.

    :param comparison: Table from :func:`comparison_table`.
    :type comparison: pd.DataFrame
    """
    modes = sorted(comparison["mode"].unique())

    table = Table(title="DSG (QA) per benchmark and K, mean ± std across seeds")
    table.add_column("benchmark")
    table.add_column("K", justify="right")
    for _mode in modes:
        table.add_column(_mode, justify="right")

    for (_benchmark, _k), _group in comparison.groupby(["benchmark", "k"], sort=True):
        cells = []
        for _mode in modes:
            rows = _group[_group["mode"] == _mode]
            if len(rows) == 0:
                cells.append("")
                continue
            row = rows.iloc[0]
            cells.append(f"{row['dsg_mean']:.3f} ± {row['dsg_std']:.3f} ({row['qa_mean']:.3f})")
        table.add_row(str(_benchmark), str(_k), *cells)

    get_graperun_rich_console().print(table)


__all__ = [
    "GROUP_KEYS",
    "SCORE_COLUMNS",
    "TRACE_COLUMNS",
    "MANIFEST_KEYS",
    "load_run_manifests",
    "trace_table",
    "step_table",
    "summary_table",
    "comparison_table",
    "edit_steps_table",
    "score_by_step_table",
    "write_report",
    "print_comparison",
]
