"""
Exception hierarchy for the matkg toolkit

Each family carries the process exit code the CLI reports for it.
"""

from typing import Optional

EXIT_INPUT_ERROR = 2
EXIT_PROVIDER_ERROR = 3
EXIT_PARSE_ERROR = 4


class MatKGError(Exception):
    """Base error"""

    exit_code: int = 1


# Input errors


class InputError(MatKGError):
    exit_code = EXIT_INPUT_ERROR


class EmptyInput(InputError):
    def __init__(self, what: str = "input text"):
        super().__init__(f"{what} is empty")
        self.what = what


class FileUnreadable(InputError):
    def __init__(self, path: str, reason: str = ""):
        super().__init__(f"cannot read {path}" + (f": {reason}" if reason else ""))
        self.path = path


class TemplateNotFound(InputError):
    def __init__(self, name: str):
        super().__init__(f"prompt template not found: {name}")
        self.name = name


class UnboundPlaceholder(InputError):
    def __init__(self, name: str):
        super().__init__(f"placeholder {{{name}}} has no binding")
        self.name = name


class EmptyLabel(InputError):
    def __init__(self, label: str = ""):
        super().__init__(f"entity label {label!r} is empty after normalization")
        self.label = label


class ConfigError(InputError):
    pass


# Provider errors


class ProviderFailure(MatKGError):
    exit_code = EXIT_PROVIDER_ERROR


class AuthMissing(ProviderFailure):
    def __init__(self, env_var: str):
        super().__init__(f"environment variable {env_var} is not set")
        self.env_var = env_var


class ProviderError(ProviderFailure):
    def __init__(self, status: Optional[int], body: str):
        if status is None:
            super().__init__(f"provider request failed: {body[:200]}")
        else:
            super().__init__(f"provider returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class ProviderTimeout(ProviderFailure):
    def __init__(self, attempts: int):
        super().__init__(f"provider timed out after {attempts} attempt(s)")
        self.attempts = attempts


class NotRecorded(ProviderFailure):
    def __init__(self, digest: str):
        super().__init__(f"no recorded fixture for request {digest}")
        self.digest = digest


# Parse / contract errors


class ContractError(MatKGError):
    exit_code = EXIT_PARSE_ERROR


class NoTablesFound(ContractError):
    def __init__(self, detail: str = "no markdown tables in model output"):
        super().__init__(detail)


class SchemaViolation(ContractError):
    def __init__(self, path: str, detail: str = ""):
        super().__init__(f"schema violation at {path}" + (f": {detail}" if detail else ""))
        self.path = path


class DanglingEdge(ContractError):
    def __init__(self, endpoint: str, node_id: str):
        super().__init__(f"edge {endpoint} {node_id!r} does not resolve to a node")
        self.endpoint = endpoint
        self.node_id = node_id


class ParseFailure(ContractError):
    def __init__(self, section: str, detail: Optional[str] = None):
        super().__init__(f"could not parse model output for section {section!r}" + (f": {detail}" if detail else ""))
        self.section = section
        self.detail = detail
