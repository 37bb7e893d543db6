"""
graperun.cli
############

.. autosummary::
    :toctree: generated/

    main_entry

``graperun`` command line interface (CLI).

After installing ``graperun``, you can use command ``graperun`` to create a project, run prompt sets,
build reports and inspect the simulated world. Get more information by running ``graperun --help``.

Exit codes
**********

=====   ==========================================================
Code    Meaning
=====   ==========================================================
0       Success.
1       Some prompts failed, or a simulate command got bad input.
2       Configuration or startup error.
=====   ==========================================================
"""

import argparse
import sys
from os import listdir
from os.path import exists
from shutil import copyfile, copytree
from typing import Optional

import tomli
import tomli_w

from .core import ConfigError, GrapeRunBasicError, GrapeRunConfig, PreconditionError, ReportError, SceneGrammarError
from .eval import load_question_graph, print_comparison, validated_answers, write_report
from .log import logger, unify_logger_format
from .model import Benchmark, dump_prompt_set, load_prompt_set
from .res import CONFIG_MAIN_TOML_TEMPLATE, GITIGNORE_RULES, PROMPTS_DIR, _register_res_uri
from .simworld import (
    apply_edit,
    degrade_with_faults,
    evaluate_predicate,
    generate_prompt_set,
    oracle_plan,
    parse_edit_instruction,
    parse_target_scene,
    questions_for_scene,
    render_target_prompt,
    serialize_scene,
)

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_STARTUP = 2

# need some manual calls to make cli work without a config file.
graperun_config = GrapeRunConfig("./.graperun")
_register_res_uri(graperun_config)


def _grammar_error(text: str, error: SceneGrammarError) -> int:
    logger.error(f"[CLI] {error}")
    if error.span is not None:
        start, end = error.span
        logger.error(f"[CLI]   {text}")
        logger.error(f"[CLI]   {' ' * start}{'^' * max(1, end - start)}")
    return EXIT_FAILURES


def _entry_init(args: argparse.Namespace) -> int:
    """
    Initialize a graperun project.

    :param args: Arguments namespace.
    :type args: argparse.Namespace
    """
    project_name = "." if args.name is None else args.name

    if exists(project_name):
        files = [_file for _file in listdir(project_name) if _file not in (".venv", ".git", "pyproject.toml", "uv.lock")]
        if len(files) != 0:
            logger.error(f"[CLI] {project_name} isn't empty, choose an empty directory, or backup and delete your files first.")
            return EXIT_STARTUP

    copytree(graperun_config.parse_resource_uri(PROMPTS_DIR), f"{project_name}/prompts", dirs_exist_ok=True)
    copyfile(graperun_config.parse_resource_uri(GITIGNORE_RULES), f"{project_name}/.gitignore")

    with open(graperun_config.parse_resource_uri(CONFIG_MAIN_TOML_TEMPLATE), "rb") as f:
        main_config = tomli.load(f)
    main_config["prompts_dir"] = "./prompts"

    with open(f"{project_name}/config.toml", "wb") as f:
        tomli_w.dump(main_config, f)

    logger.info(f"Created project {project_name}.")
    logger.info(f"Planner prompts and few-shot examples are in '{project_name}/prompts', edit them as you like.")
    logger.info("Every backend uses the simulated world. Set `[magenta]kind = \"http\"[/]` in 'config.toml' to use servers.")
    logger.info("Use command `[magenta]graperun simulate prompts -o prompts.jsonl[/]` to get a prompt set to start with.")
    return EXIT_OK


def _entry_run(args: argparse.Namespace) -> int:
    """
    Run a prompt set.

    :param args: Arguments namespace.
    :type args: argparse.Namespace
    """
    from .run import GrapeRun

    overrides = {
        "mode": args.mode,
        "planner_mode": args.planner,
        "jobs": args.jobs,
        "max_edit_steps": args.max_edit_steps,
        "seeds": args.seeds,
        "score": args.score,
        "label": args.label,
    }

    try:
        prompts = load_prompt_set(args.prompts, strict_k=not args.loose_k)
        grape_run = GrapeRun(
            args.config, run_overrides=overrides, resume_dir=args.resume, record_dir=args.record, replay_dir=args.replay
        )
    except FileNotFoundError as e:
        logger.error(f"[CLI] File not found: {e}")
        return EXIT_STARTUP
    except (ConfigError, PreconditionError, KeyError) as e:
        logger.error(f"[CLI] Can't start the run: {e}")
        return EXIT_STARTUP

    try:
        with grape_run:
            result = grape_run.run(prompts)
    except GrapeRunBasicError as e:
        logger.error(f"[CLI] Run aborted: {e}")
        return EXIT_STARTUP

    if result.ok:
        logger.info(f"All prompts done, results in '{result.run_dir}'")
        return EXIT_OK

    for _label, _failure in result.failures.items():
        logger.error(f"[CLI] {_label}: {_failure}")
    logger.warning(f"{len(result.failures)} tasks failed, {result.plan_failed} plans failed. Results in '{result.run_dir}'")
    return EXIT_FAILURES


def _entry_report(args: argparse.Namespace) -> int:
    """
    Build comparison tables from run directories.

    :param args: Arguments namespace.
    :type args: argparse.Namespace
    """
    try:
        tables = write_report(args.run_dirs, args.output)
    except ReportError as e:
        logger.error(f"[CLI] {e}")
        return EXIT_FAILURES

    print_comparison(tables["comparison"])

    if args.plot:
        from .plot import draw_edit_steps, draw_score_by_step

        try:
            draw_score_by_step(tables["score_by_step"], f"{args.output}/score_by_step.png")
            draw_edit_steps(tables["edit_steps"], f"{args.output}/edit_steps.png")
        except ReportError as e:
            logger.warning(f"[CLI] Figure skipped: {e}")

    return EXIT_OK


def _simulate_parse(args: argparse.Namespace) -> int:
    scene = parse_target_scene(args.text)
    print(serialize_scene(scene).decode("utf-8"), end="")
    return EXIT_OK


def _simulate_degrade(args: argparse.Namespace) -> int:
    scene, faults = degrade_with_faults(parse_target_scene(args.text), args.rate, args.seed)
    print(render_target_prompt(scene))
    for _fault in faults:
        logger.info(f"Fault: {_fault.kind} {_fault.object_id} {_fault.detail}".rstrip())
    return EXIT_OK


def _simulate_plan(args: argparse.Namespace) -> int:
    plan = oracle_plan(parse_target_scene(args.target), parse_target_scene(args.current))
    if len(plan) == 0:
        print("No changes needed.")
    for _step in plan.steps:
        print(f"{_step.ordinal}. {_step.text}")
    return EXIT_OK


def _simulate_apply(args: argparse.Namespace) -> int:
    scene = apply_edit(parse_target_scene(args.scene), parse_edit_instruction(args.instruction))
    print(render_target_prompt(scene))
    return EXIT_OK


def _simulate_ask(args: argparse.Namespace) -> int:
    if (args.prompt is None) == (args.questions is None):
        logger.error("[CLI] Give either --prompt or --questions.")
        return EXIT_FAILURES

    scene = parse_target_scene(args.scene)
    graph = load_question_graph(args.questions) if args.prompt is None else questions_for_scene(parse_target_scene(args.prompt))

    raw = {_question.id: evaluate_predicate(scene, _question) for _question in graph}
    validated = validated_answers(raw, graph)
    for _question in graph:
        print(f"{_question.id}\t{raw[_question.id].value}\t{validated[_question.id].value}\t{_question.text}")
    return EXIT_OK


def _simulate_prompts(args: argparse.Namespace) -> int:
    records = []
    for _k in args.k:
        records.extend(generate_prompt_set(args.count, _k, args.seed, Benchmark(args.benchmark)))

    dump_prompt_set(records, args.output)
    logger.info(f"Wrote {len(records)} prompts to '{args.output}'")
    return EXIT_OK


def _entry_simulate(args: argparse.Namespace) -> int:
    """
    Inspect simworld operations on explicit inputs.

    :param args: Arguments namespace.
    :type args: argparse.Namespace
    """
    try:
        return args.simulate_func(args)
    except SceneGrammarError as e:
        return _grammar_error(getattr(args, "text", None) or getattr(args, "scene", None) or "", e)
    except (GrapeRunBasicError, FileNotFoundError) as e:
        logger.error(f"[CLI] {e}")
        return EXIT_FAILURES


def _build_parser() -> argparse.ArgumentParser:
    args_parser = argparse.ArgumentParser(prog="graperun")
    subparsers = args_parser.add_subparsers(title="Subcommands", description="Valid Subcommands", help="Subcommands")

    init_parser = subparsers.add_parser("init", help="Initialize a graperun project.", add_help=True)
    init_parser.add_argument("-n", "--name", type=str, help="Name of the graperun project.")
    init_parser.set_defaults(func=_entry_init)

    run_parser = subparsers.add_parser("run", help="Run a prompt set through the pipelines.", add_help=True)
    run_parser.add_argument("-c", "--config", type=str, default="config.toml", help="Path of the config file.")
    run_parser.add_argument("-p", "--prompts", type=str, required=True, help="Prompt set, JSONL.")
    run_parser.add_argument("--mode", type=str, choices=["base", "grape", "both"], help="Pipelines to run.")
    run_parser.add_argument("--planner", type=str, choices=["structured", "naive"], help="Planner prompt variant.")
    run_parser.add_argument("--jobs", type=int, help="Prompts processed concurrently.")
    run_parser.add_argument("--max-edit-steps", type=int, help="Maximum executed edit steps.")
    run_parser.add_argument("--seeds", "--seed", type=int, nargs="+", help="One run per seed.")
    run_parser.add_argument("--score", action=argparse.BooleanOptionalAction, default=None, help="Score every image.")
    run_parser.add_argument("--resume", type=str, help="Run directory to resume.")
    run_parser.add_argument("--label", type=str, help="Appended to the run directory name.")
    run_parser.add_argument("--loose-k", action="store_true", help="Accept ConceptMix prompts with any K.")
    exchange_group = run_parser.add_mutually_exclusive_group()
    exchange_group.add_argument("--record", type=str, help="Save HTTP exchanges to fixtures in this directory.")
    exchange_group.add_argument("--replay", type=str, help="Serve HTTP exchanges from fixtures in this directory.")
    run_parser.set_defaults(func=_entry_run)

    report_parser = subparsers.add_parser("report", help="Compare run directories.", add_help=True)
    report_parser.add_argument("run_dirs", nargs="+", type=str, help="Run directories.")
    report_parser.add_argument("-o", "--output", type=str, default="report", help="Directory of the report files.")
    report_parser.add_argument("--plot", action="store_true", help="Draw the score-vs-step and edit-step figures.")
    report_parser.set_defaults(func=_entry_report)

    simulate_parser = subparsers.add_parser("simulate", help="Inspect the simulated world.", add_help=True)
    simulate_parser.set_defaults(func=_entry_simulate)
    simulate_subparsers = simulate_parser.add_subparsers(title="Simulate commands", required=True)

    parse_parser = simulate_subparsers.add_parser("parse", help="Parse a prompt into its scene.")
    parse_parser.add_argument("text", type=str, help="Prompt in the scene grammar.")
    parse_parser.set_defaults(simulate_func=_simulate_parse)

    degrade_parser = simulate_subparsers.add_parser("degrade", help="Inject generation faults into a scene.")
    degrade_parser.add_argument("text", type=str, help="Prompt in the scene grammar.")
    degrade_parser.add_argument("--rate", type=float, default=0.3, help="Fault probability per object.")
    degrade_parser.add_argument("--seed", type=int, default=0, help="Random seed.")
    degrade_parser.set_defaults(simulate_func=_simulate_degrade)

    plan_parser = simulate_subparsers.add_parser("plan", help="Print the oracle edit plan between two scenes.")
    plan_parser.add_argument("--target", type=str, required=True, help="Target scene prompt.")
    plan_parser.add_argument("--current", type=str, required=True, help="Current scene prompt.")
    plan_parser.set_defaults(simulate_func=_simulate_plan)

    apply_parser = simulate_subparsers.add_parser("apply", help="Apply one edit instruction to a scene.")
    apply_parser.add_argument("--scene", type=str, required=True, help="Scene prompt.")
    apply_parser.add_argument("--instruction", type=str, required=True, help="Edit instruction.")
    apply_parser.set_defaults(simulate_func=_simulate_apply)

    ask_parser = simulate_subparsers.add_parser("ask", help="Answer the questions of a prompt on a scene.")
    ask_parser.add_argument("--scene", type=str, required=True, help="Scene prompt.")
    ask_parser.add_argument("--prompt", type=str, help="Prompt whose generated questions are asked.")
    ask_parser.add_argument("--questions", type=str, help="Question file, JSONL.")
    ask_parser.set_defaults(simulate_func=_simulate_ask)

    prompts_parser = simulate_subparsers.add_parser("prompts", help="Generate a prompt set with questions.")
    prompts_parser.add_argument("-o", "--output", type=str, required=True, help="Output JSONL file.")
    prompts_parser.add_argument("--count", type=int, default=100, help="Prompts per K.")
    prompts_parser.add_argument("--k", type=int, nargs="+", default=[1, 3, 5, 7], help="Concepts per prompt.")
    prompts_parser.add_argument("--seed", type=int, default=0, help="Random seed.")
    prompts_parser.add_argument(
        "--benchmark", type=str, default="custom", choices=[_b.value for _b in Benchmark], help="Benchmark recorded on prompts."
    )
    prompts_parser.set_defaults(simulate_func=_simulate_prompts)

    return args_parser


def main_entry(argv: Optional[list[str]] = None) -> int:
    """
    CLI entry point.

    :param argv: Arguments, defaults to ``sys.argv[1:]``.
    :type argv: list | None
    :return: Exit code.
    :rtype: int
    """
    unify_logger_format()
    argv = sys.argv[1:] if argv is None else argv
    args = _build_parser().parse_args(args=argv if argv else ["--help"])
    return args.func(args)


def main():
    sys.exit(main_entry())


__all__ = ["EXIT_OK", "EXIT_FAILURES", "EXIT_STARTUP", "main_entry", "main"]
