"""
graperun
########
"""

from . import backends, core, eval, log, model, pipeline, planner, plot, res, run, simworld, utils, workspace

__all__ = ["backends", "core", "eval", "log", "model", "pipeline", "planner", "plot", "res", "run", "simworld", "utils", "workspace"]
