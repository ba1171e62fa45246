"""Structured code review over raw source files.

One prompt carries the review rules, every source file, and a JSON-only
response instruction; the reply must validate as a ReviewReport. A single
retry with an error-correction follow-up covers sloppy model output.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

from kennel.chatter import Chatter
from kennel.errors import InvalidInputError
from kennel.types import PromptParameters

SOURCE_DELIMITER = "\n\n---\n\n"

RESPONSE_INSTRUCTION = (
    "Respond ONLY with JSON matching the given schema: "
    '{"scores": {"<metric>": <number between 0 and 10>}, '
    '"findings": [{"rule": "<rule name>", "location": "<file:line, optional>", '
    '"comment": "<specific feedback>"}], '
    '"summary": "<overall assessment>"}'
)

# Optional first line of a rules file: "# metrics: readability, design"
_METRICS_HEADER = re.compile(r"^#\s*metrics\s*:\s*(.+)$", re.IGNORECASE)


@dataclass(frozen=True)
class Finding:
    rule: str
    comment: str
    location: str | None = None

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"rule": self.rule, "comment": self.comment}
        if self.location is not None:
            doc["location"] = self.location
        return doc


@dataclass(frozen=True)
class ReviewReport:
    scores: dict[str, float]
    findings: list[Finding] = field(default_factory=list)
    summary: str = ""

    def __post_init__(self):
        if not self.scores:
            raise InvalidInputError("report must contain at least one score")
        for name, value in self.scores.items():
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise InvalidInputError(f"score {name!r} is not a number")
            if not 0 <= value <= 10:
                raise InvalidInputError(f"score {name!r} out of range [0, 10]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "scores": dict(self.scores),
            "findings": [f.to_dict() for f in self.findings],
            "summary": self.summary,
        }


def metrics_from_rules(rules_text: str) -> list[str]:
    """Metric names from the rules file header line, [] when absent."""
    for line in rules_text.splitlines():
        if not line.strip():
            continue
        match = _METRICS_HEADER.match(line.strip())
        if match:
            return [name.strip() for name in match.group(1).split(",") if name.strip()]
        break
    return []


def build_review_prompt(rules_text: str, sources: list[tuple[str, str]]) -> str:
    if not sources:
        raise InvalidInputError("review needs at least one source file")
    blocks = [f"FILE: {path}\n{text}" for path, text in sources]
    prompt = rules_text.rstrip() + SOURCE_DELIMITER + "\n\n".join(blocks)
    metrics = metrics_from_rules(rules_text)
    instruction = RESPONSE_INSTRUCTION
    if metrics:
        instruction += " Score exactly these metrics: " + ", ".join(metrics) + "."
    return prompt + "\n\n" + instruction


def extract_json_object(text: str) -> Any:
    """The first parseable JSON object in text, or None.

    Models wrap JSON in prose or code fences; scan for balanced braces,
    skipping brace characters inside string literals.
    """
    try:
        return json.loads(text)
    except ValueError:
        pass
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        return json.loads(text[start : i + 1])
                    except ValueError:
                        break
        start = text.find("{", start + 1)
    return None


def parse_review_report(text: str, required_metrics: list[str] | None = None) -> ReviewReport:
    doc = extract_json_object(text)
    if not isinstance(doc, dict):
        raise InvalidInputError("reply contains no JSON object")
    for key in ("scores", "findings", "summary"):
        if key not in doc:
            raise InvalidInputError(f"reply is missing {key!r}")
    scores = doc["scores"]
    if not isinstance(scores, dict):
        raise InvalidInputError("scores must be an object")
    for metric in required_metrics or []:
        if metric not in scores:
            raise InvalidInputError(f"missing required metric {metric!r}")
    findings_doc = doc["findings"]
    if not isinstance(findings_doc, list):
        raise InvalidInputError("findings must be a list")
    findings = []
    for i, entry in enumerate(findings_doc):
        if not isinstance(entry, dict):
            raise InvalidInputError(f"finding {i} must be an object")
        rule = entry.get("rule")
        comment = entry.get("comment")
        location = entry.get("location")
        if not isinstance(rule, str) or not isinstance(comment, str):
            raise InvalidInputError(f"finding {i} needs text rule and comment")
        if location is not None and not isinstance(location, str):
            raise InvalidInputError(f"finding {i} location must be text")
        findings.append(Finding(rule=rule, comment=comment, location=location))
    summary = doc["summary"]
    if not isinstance(summary, str):
        raise InvalidInputError("summary must be text")
    return ReviewReport(scores=dict(scores), findings=findings, summary=summary)


def run_review(
    chatter: Chatter,
    rules_text: str,
    sources: list[tuple[str, str]],
    session: str = "review",
    params: PromptParameters | None = None,
) -> ReviewReport:
    """Send the review prompt; retry once if the reply fails validation.

    Raises InvalidInput when both attempts fail; the retry rides the same
    session so the model sees its rejected reply.
    """
    prompt = build_review_prompt(rules_text, sources)
    required = metrics_from_rules(rules_text) or None
    reply = chatter.bark(session, prompt, params)
    try:
        return parse_review_report(reply.text, required)
    except InvalidInputError as first:
        correction = (
            f"Your previous reply was rejected: {first.message}. "
            + RESPONSE_INSTRUCTION
        )
        retry = chatter.bark(session, correction, params)
        try:
            return parse_review_report(retry.text, required)
        except InvalidInputError as second:
            raise InvalidInputError(
                f"review reply failed validation twice: {second.message}"
            ) from second
