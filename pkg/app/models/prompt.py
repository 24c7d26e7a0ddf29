"""
Prompt template models
"""

from enum import Enum
from typing import Dict

from pydantic import BaseModel, ConfigDict, Field, model_validator

INPUT_SLOT = "{input_text}"


class OutputContract(str, Enum):
    """Format the model is asked to answer in"""
    MARKDOWN_TABLES = "markdown_tables"
    PLAIN_SUMMARY = "plain_summary"
    KG_JSON = "kg_json"


class PromptTemplate(BaseModel):
    """Three-part prompt: instruction, context, input"""
    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    instruction: str = Field(min_length=1)
    context: str = ""
    # Body of the input part; holds the input slot exactly once
    input: str = INPUT_SLOT
    output_contract: OutputContract

    @model_validator(mode="after")
    def slot_appears_once(self) -> "PromptTemplate":
        count = sum(part.count(INPUT_SLOT) for part in (self.instruction, self.context, self.input))
        if count != 1 or INPUT_SLOT not in self.input:
            raise ValueError(f"{INPUT_SLOT} must appear exactly once, in the input part")
        return self


class RenderedPrompt(BaseModel):
    """Fully bound prompt text"""
    template_name: str
    text: str
    output_contract: OutputContract
    variable_bindings: Dict[str, str] = Field(default_factory=dict)
