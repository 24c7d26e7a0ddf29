"""
Prompt engine: template files, rendering and the shipped template set
"""

import re
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Union

import structlog

from app.core.errors import EmptyInput, TemplateNotFound, UnboundPlaceholder
from app.models.prompt import OutputContract, PromptTemplate, RenderedPrompt

logger = structlog.get_logger(__name__)

BUILTIN_TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"
BUILTIN_TEMPLATE_NAMES = ("structural_extraction", "relation_extraction", "process_summary", "summary_to_kg")
TEMPLATE_SUFFIX = ".prompt"

CHAIN_OF_THOUGHT_SUFFIX = "Work through the text step by step before writing the final answer."

PLACEHOLDER = re.compile(r"\{\{|\}\}|\{(?P<name>[A-Za-z_][A-Za-z0-9_]*)\}")
SECTION_HEADER = re.compile(r"^\[(instruction|context|input)\]\s*$")


def load_template(text: str, source: str = "<string>") -> PromptTemplate:
    """Parse the plain key/section template format

        name: <name>
        contract: <markdown_tables|plain_summary|kg_json>

        [instruction]
        ...
        [context]
        ...
        [input]
        ...
    """
    header: Dict[str, str] = {}
    sections: Dict[str, List[str]] = {}
    current: Optional[str] = None
    for line in text.splitlines():
        match = SECTION_HEADER.match(line)
        if match:
            current = match.group(1)
            sections[current] = []
        elif current is not None:
            sections[current].append(line)
        elif line.strip():
            key, sep, value = line.partition(":")
            if not sep:
                raise ValueError(f"{source}: expected 'key: value', got {line!r}")
            header[key.strip().lower()] = value.strip()

    try:
        return PromptTemplate(
            name=header["name"],
            output_contract=OutputContract(header["contract"]),
            instruction="\n".join(sections.get("instruction", [])).strip("\n"),
            context="\n".join(sections.get("context", [])).strip("\n"),
            input="\n".join(sections["input"]).strip("\n") if "input" in sections else "{input_text}",
        )
    except KeyError as e:
        raise ValueError(f"{source}: missing template field {e}") from e


def dump_template(template: PromptTemplate) -> str:
    """Inverse of load_template"""
    return (
        f"name: {template.name}\n"
        f"contract: {template.output_contract.value}\n"
        f"\n[instruction]\n{template.instruction}\n"
        f"\n[context]\n{template.context}\n"
        f"\n[input]\n{template.input}\n"
    )


def load_template_file(path: Union[str, Path]) -> PromptTemplate:
    path = Path(path)
    if not path.is_file():
        raise TemplateNotFound(str(path))
    return load_template(path.read_text(encoding="utf-8"), source=str(path))


def load_templates_dir(directory: Union[str, Path]) -> Dict[str, PromptTemplate]:
    templates = {}
    for path in sorted(Path(directory).glob(f"*{TEMPLATE_SUFFIX}")):
        template = load_template_file(path)
        templates[template.name] = template
    return templates


def builtin_templates() -> List[PromptTemplate]:
    """The four shipped templates, in pipeline order"""
    available = load_templates_dir(BUILTIN_TEMPLATES_DIR)
    return [available[name] for name in BUILTIN_TEMPLATE_NAMES]


def get_template(name_or_path: str, templates_dir: Optional[Union[str, Path]] = None) -> PromptTemplate:
    """Look a template up by name (user dir first, then shipped) or by file path"""
    candidate = Path(name_or_path)
    if candidate.suffix == TEMPLATE_SUFFIX or candidate.is_file():
        return load_template_file(candidate)
    for directory in (templates_dir, BUILTIN_TEMPLATES_DIR):
        if directory is None:
            continue
        templates = load_templates_dir(directory)
        if name_or_path in templates:
            return templates[name_or_path]
    raise TemplateNotFound(name_or_path)


def _substitute(text: str, bindings: Mapping[str, str]) -> str:
    def replace(match: re.Match) -> str:
        token = match.group(0)
        if token == "{{":
            return "{"
        if token == "}}":
            return "}"
        name = match.group("name")
        if name not in bindings:
            raise UnboundPlaceholder(name)
        return bindings[name]

    # bound values are inserted verbatim and never rescanned
    return PLACEHOLDER.sub(replace, text)


def render(
    template: PromptTemplate,
    input_text: str,
    extra_vars: Optional[Mapping[str, object]] = None,
    chain_of_thought: bool = False,
) -> RenderedPrompt:
    """Assemble instruction, context and input, in that order"""
    if not input_text or not input_text.strip():
        raise EmptyInput("prompt input text")
    bindings = {key: str(value) for key, value in (extra_vars or {}).items()}
    bindings["input_text"] = input_text

    instruction = template.instruction
    if chain_of_thought:
        instruction = f"{instruction}\n{CHAIN_OF_THOUGHT_SUFFIX}"
    parts = [instruction, template.context, template.input]
    text = "\n\n".join(_substitute(part, bindings) for part in parts if part.strip())

    logger.debug("Rendered prompt", template=template.name, characters=len(text))
    return RenderedPrompt(
        template_name=template.name,
        text=text,
        output_contract=template.output_contract,
        variable_bindings={k: v for k, v in bindings.items() if k != "input_text"},
    )
