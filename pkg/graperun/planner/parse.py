"""
graperun.planner.parse
######################

.. autosummary::
    :toctree: generated/

    parse_planner_output
    render_planner_report

Planner output has four sections. Headers may carry markdown marks and numbering,
``### 2. **Analyzing Image Elements**:`` is read like ``Analyzing Image Elements``.

.. code-block:: text

    **Analyzing Textual Elements**
    - bench | attributes: green
    - duck | attributes: metallic texture | relations: next to the bench

    **Analyzing Image Elements**
    - bench | attributes: green

    **Error Identification**
    The duck is missing.

    **Feedback**
    1. Add a duck with metallic texture next to the bench

Element lines start with ``-``, ``*`` or a number. Instructions are the enumerated lines under ``Feedback``;
a line which isn't enumerated continues the previous instruction.
"""

import re
from typing import Optional

from ..core import PlannerParseError
from ..log import logger
from ..model import EditPlan, Element, PlannerReport, PlanSource

SECTION_TEXTUAL = "analyzing textual elements"
SECTION_IMAGE = "analyzing image elements"
SECTION_ERRORS = "error identification"
SECTION_FEEDBACK = "feedback"

SECTION_TITLES = {
    SECTION_TEXTUAL: "Analyzing Textual Elements",
    SECTION_IMAGE: "Analyzing Image Elements",
    SECTION_ERRORS: "Error Identification",
    SECTION_FEEDBACK: "Feedback",
}

_MARK = r"(?:[*_]{1,2})?"
_HEADER_RE = re.compile(
    rf"^\s*(?:#{{1,6}}\s*)?{_MARK}\s*(?:(?:step\s*)?\d+\s*[.):]\s*)?{_MARK}\s*"
    r"(?P<name>analy[sz]ing textual elements|analy[sz]ing image elements|error identification|feedback)"
    rf"\s*{_MARK}\s*(?::\s*{_MARK}\s*(?P<rest>.*))?$",
    re.IGNORECASE,
)
_ENUMERATED_RE = re.compile(r"^\s*(?:\d+\s*[.)]|[-*•])\s+(?P<text>\S.*)$")
_NO_CHANGES_RE = re.compile(r"\bno (?:changes?|edits?)\b|\bnothing to (?:change|edit|fix)\b|\bmatches the prompt\b", re.IGNORECASE)


def _section_name(header: str) -> str:
    return header.lower().replace("analysing", "analyzing")


def _split_sections(raw: str) -> dict[str, list[str]]:
    sections: dict[str, list[str]] = {}
    current: Optional[str] = None

    for _line in raw.splitlines():
        header = _HEADER_RE.match(_line)
        if header is not None:
            current = _section_name(header.group("name"))
            sections.setdefault(current, [])
            rest = header.group("rest")
            if rest is not None and rest.strip() != "":
                sections[current].append(rest)
            continue

        if current is not None:
            sections[current].append(_line)

    return sections


def _parse_elements(lines: list[str]) -> tuple[Element, ...]:
    elements = []
    for _line in lines:
        found = _ENUMERATED_RE.match(_line)
        if found is None:
            continue

        fields = [_part.strip() for _part in found.group("text").split("|")]
        attributes: tuple[str, ...] = ()
        relations: tuple[str, ...] = ()
        for _field in fields[1:]:
            label, _, value = _field.partition(":")
            items = value.split(";") if label.strip().lower() == "relations" else value.split(",")
            items = tuple(_item.strip() for _item in items if _item.strip() != "")
            if label.strip().lower() == "attributes":
                attributes = items
            elif label.strip().lower() == "relations":
                relations = items

        elements.append(Element(fields[0], attributes, relations))

    return tuple(elements)


def _parse_instructions(lines: list[str]) -> list[str]:
    instructions: list[str] = []
    for _line in lines:
        if _line.strip() == "":
            continue

        found = _ENUMERATED_RE.match(_line)
        if found is not None:
            instructions.append(found.group("text").strip())
        elif len(instructions) > 0:
            instructions[-1] = f"{instructions[-1]} {_line.strip()}"

    return instructions


def _trailing_instructions(raw: str) -> list[str]:
    lines = raw.splitlines()
    while len(lines) > 0 and lines[-1].strip() == "":
        lines.pop()

    block: list[str] = []
    while len(lines) > 0 and _ENUMERATED_RE.match(lines[-1]) is not None:
        block.insert(0, lines.pop())

    return _parse_instructions(block)


def parse_planner_output(raw: str, mode: str = "structured") -> PlannerReport:
    """
    Parse planner output into a report.

    :param raw: Output text.
    :type raw: str
    :param mode: ``"structured"`` requires a ``Feedback`` header. ``"naive"`` also accepts an enumerated
                 list at the end of the output as the plan, or an empty plan if the output says so,
                 like ``"No changes needed."``.
    :type mode: str
    :return: Report whose plan has ordinals in line order.
    :rtype: PlannerReport
    """
    if raw.strip() == "":
        logger.error("Planner output is empty.")
        raise PlannerParseError("Planner output is empty.")

    sections = _split_sections(raw)
    source = PlanSource.MLLM if mode == "structured" else PlanSource.NAIVE_MLLM

    if SECTION_FEEDBACK in sections:
        instructions = _parse_instructions(sections[SECTION_FEEDBACK])
    elif mode == "naive":
        instructions = _trailing_instructions(raw)
        if len(instructions) == 0 and _NO_CHANGES_RE.search(raw) is None:
            logger.error("Naive planner output has no enumerated plan and doesn't say that nothing needs changing.")
            raise PlannerParseError("Naive planner output has no enumerated plan and doesn't say that nothing needs changing.")
    else:
        logger.error(f"Planner output has no Feedback section, found sections: {sorted(sections)}")
        raise PlannerParseError(f"Planner output has no Feedback section, found sections: {sorted(sections)}")

    return PlannerReport(
        textual_elements=_parse_elements(sections.get(SECTION_TEXTUAL, [])),
        image_elements=_parse_elements(sections.get(SECTION_IMAGE, [])),
        error_summary="\n".join(sections.get(SECTION_ERRORS, [])),
        plan=EditPlan.from_texts(instructions, source),
        raw_text=raw,
    )


def _render_element(element: Element) -> str:
    line = f"- {element.entity}"
    if len(element.attributes) > 0:
        line += f" | attributes: {', '.join(element.attributes)}"
    if len(element.relations) > 0:
        line += f" | relations: {'; '.join(element.relations)}"
    return line


def render_planner_report(report: PlannerReport, naive: bool = False) -> str:
    """
    Render a report in the format :func:`parse_planner_output` reads.

    :param report: Report.
    :type report: PlannerReport
    :param naive: Only render the plan, as an enumerated list without sections.
    :type naive: bool
    :return: Text.
    :rtype: str
    """
    steps = [f"{_step.ordinal}. {_step.text}" for _step in report.plan.steps]
    if naive:
        return "\n".join(steps) if len(steps) > 0 else "The image matches the prompt. No changes needed."

    blocks = [
        f"**{SECTION_TITLES[SECTION_TEXTUAL]}**\n" + "\n".join(_render_element(_e) for _e in report.textual_elements),
        f"**{SECTION_TITLES[SECTION_IMAGE]}**\n" + "\n".join(_render_element(_e) for _e in report.image_elements),
        f"**{SECTION_TITLES[SECTION_ERRORS]}**\n{report.error_summary}",
        f"**{SECTION_TITLES[SECTION_FEEDBACK]}**\n" + ("\n".join(steps) if len(steps) > 0 else "No changes needed."),
    ]
    return "\n\n".join(_block.rstrip("\n") for _block in blocks) + "\n"


def render_element_sections(report: PlannerReport) -> str:
    """
    Render only the two analysis sections of a report, the part the alignment scorer reads.

    :param report: Report.
    :type report: PlannerReport
    :return: Text.
    :rtype: str
    """
    return "\n\n".join(
        f"**{SECTION_TITLES[_name]}**\n" + "\n".join(_render_element(_e) for _e in _elements)
        for _name, _elements in ((SECTION_TEXTUAL, report.textual_elements), (SECTION_IMAGE, report.image_elements))
    )


def parse_element_sections(text: str) -> tuple[tuple[Element, ...], tuple[Element, ...]]:
    """
    Read the two analysis sections written by :func:`render_element_sections`.

    :param text: Text.
    :type text: str
    :return: ``(textual elements, image elements)``.
    :rtype: tuple
    """
    sections = _split_sections(text)
    return _parse_elements(sections.get(SECTION_TEXTUAL, [])), _parse_elements(sections.get(SECTION_IMAGE, []))


__all__ = [
    "SECTION_TITLES",
    "parse_planner_output",
    "render_planner_report",
    "render_element_sections",
    "parse_element_sections",
]
