from .app import create_app
from .models import RunReport, RunRequest, ScenarioSummary, ValidateRequest

__all__ = ["create_app", "RunReport", "RunRequest", "ScenarioSummary",
           "ValidateRequest"]
