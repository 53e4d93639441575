"""Structured classification-prompt templates and deterministic rendering.

A template captures the reviewer framing, the research topic, the aspects
that make a paper relevant, and hard exclusion/inclusion overrides. Glue
text between the slots is fixed so renders are reproducible and can be
golden-tested. Templates are immutable once saved; edits create a new
version.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from litscreen.errors import InvalidTemplateError
from litscreen.records import PaperRecord

TASK_STATEMENT = (
    "Please decide and classify if the following paper belongs to a specific "
    "research direction or not. For this, you are provided with the title and "
    "the abstract, which should give you sufficient information for an "
    "informed and accurate decision."
)

DEFAULT_ROLE_PREAMBLE = "You are a professor in computer science conducting a literature review."

DEFAULT_OUTPUT_INSTRUCTION = (
    "Below is the title and abstract. You must only answer with INCLUDE or "
    "DISCARD and a 2-sentence reason of why."
)

DEFAULT_ABSTRACT_BUDGET = 8000


@dataclass
class Aspect:
    """One relevant facet of the research direction plus example terms."""

    name: str
    example_terms: list[str] = field(default_factory=list)


@dataclass
class PromptTemplate:
    id: str
    topic_title: str
    role_preamble: str = DEFAULT_ROLE_PREAMBLE
    aspects: list[Aspect] = field(default_factory=list)
    exclusion_rules: list[str] = field(default_factory=list)
    inclusion_rules: list[str] = field(default_factory=list)
    output_instruction: str = DEFAULT_OUTPUT_INSTRUCTION
    version: int = 1

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "topic_title": self.topic_title,
            "role_preamble": self.role_preamble,
            "aspects": [{"name": a.name, "example_terms": list(a.example_terms)} for a in self.aspects],
            "exclusion_rules": list(self.exclusion_rules),
            "inclusion_rules": list(self.inclusion_rules),
            "output_instruction": self.output_instruction,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PromptTemplate":
        return cls(
            id=data["id"],
            topic_title=data.get("topic_title", ""),
            role_preamble=data.get("role_preamble", DEFAULT_ROLE_PREAMBLE),
            aspects=[
                Aspect(name=a["name"], example_terms=list(a.get("example_terms", [])))
                for a in data.get("aspects", [])
            ],
            exclusion_rules=list(data.get("exclusion_rules", [])),
            inclusion_rules=list(data.get("inclusion_rules", [])),
            output_instruction=data.get("output_instruction", DEFAULT_OUTPUT_INSTRUCTION),
            version=int(data.get("version", 1)),
        )


def validate_template(template: PromptTemplate) -> list[str]:
    """Return all invariant violations, each naming the offending field."""
    violations = []
    if not template.topic_title.strip():
        violations.append("topic_title: must be non-empty")
    if "INCLUDE" not in template.output_instruction:
        violations.append('output_instruction: missing literal token "INCLUDE"')
    if "DISCARD" not in template.output_instruction:
        violations.append('output_instruction: missing literal token "DISCARD"')
    if template.version < 1:
        violations.append("version: must be a positive integer")
    for i, aspect in enumerate(template.aspects):
        if not aspect.name.strip():
            violations.append(f"aspects[{i}].name: must be non-empty")
    return violations


def _sentence(text: str) -> str:
    text = text.strip()
    if text and text[-1] not in ".!?:":
        text += "."
    return text


def render_prompt(
    template: PromptTemplate,
    paper: PaperRecord,
    abstract_budget: int = DEFAULT_ABSTRACT_BUDGET,
) -> str:
    """Render the classification prompt for one paper.

    Output is a deterministic sequence of paragraphs: framing, topic,
    one aspect sentence per aspect, one hard rule per line, the output
    instruction, then the paper's title and abstract.
    """
    violations = validate_template(template)
    if violations:
        raise InvalidTemplateError(violations)

    blocks: list[str] = []
    framing = " ".join(part for part in (template.role_preamble.strip(), TASK_STATEMENT) if part)
    blocks.append(framing)
    blocks.append(f'The research direction is the topic of "{template.topic_title}".')

    aspect_lines = []
    for aspect in template.aspects:
        line = f"Therefore include papers that deal with {aspect.name}."
        if aspect.example_terms:
            line += f" Examples of {aspect.name} are: {', '.join(aspect.example_terms)}."
        aspect_lines.append(line)
    if aspect_lines:
        blocks.append("\n".join(aspect_lines))

    if template.exclusion_rules:
        blocks.append("\n".join(_sentence(f"You MUST discard papers that {r}") for r in template.exclusion_rules))
    if template.inclusion_rules:
        blocks.append("\n".join(_sentence(f"You MUST include papers that {r}") for r in template.inclusion_rules))

    blocks.append(template.output_instruction)

    abstract = paper.abstract
    if len(abstract) > abstract_budget:
        abstract = abstract[:abstract_budget] + "…"
    blocks.append(f"Title: {paper.title}\nAbstract: {abstract}")

    return "\n\n".join(blocks)
