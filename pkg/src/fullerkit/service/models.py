"""Request and response shapes for the HTTP service."""

from __future__ import annotations

from typing import Any, Optional, Union

from pydantic import BaseModel, ConfigDict, Field


class RunRequest(BaseModel):
    """One command invocation: a scenario reference plus overrides.

    `scenario` is a built-in name or an inline scenario document; file paths
    are resolved by the caller, never by the service.  `options` carries the
    per-command overrides (None values defer to scenario defaults), `config`
    overrides individual tool settings by name.
    """

    model_config = ConfigDict(extra="forbid")

    scenario: Union[str, dict]
    options: dict = Field(default_factory=dict)
    config: dict = Field(default_factory=dict)
    meta: bool = True


class ValidateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Union[str, dict]


class ErrorBody(BaseModel):
    code: str
    message: str
    details: dict = Field(default_factory=dict)


class ErrorResponse(BaseModel):
    error: ErrorBody


class ScenarioSummary(BaseModel):
    name: str
    title: str
    field: str
    contact: bool
    expected_count: int


class RunReport(BaseModel):
    """Envelope returned by every command endpoint."""

    model_config = ConfigDict(extra="forbid")

    v: int
    command: str
    scenario: str
    config: dict
    result: dict
    meta: Optional[dict] = None
