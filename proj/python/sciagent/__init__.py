"""Python interface to the sciagent C++ core."""
import json as _json

from . import _core
from ._core import (
    Error,
    GPModel,
    bo_campaign,
    camel_campaign,
    command_denial,
    compare_campaigns,
    design_parameters,
    evaluations_to_threshold,
    expected_improvement,
    extract_pdf_text,
    gp_fit,
    html_to_text,
    latin_hypercube,
    running_max,
    running_min,
    six_hump_camel,
    synthetic_yield,
    workflow_names,
    yield_optimum,
)

__all__ = [
    "Error", "GPModel", "bo_campaign", "camel_campaign", "command_denial", "compare_campaigns",
    "design_parameters", "evaluations_to_threshold", "expected_improvement", "extract_pdf_text", "gp_fit",
    "html_to_text", "latin_hypercube", "parse_plan", "read_transcript", "run_workflow", "running_max",
    "running_min", "six_hump_camel", "synthetic_yield", "validate_plan", "workflow_names", "yield_optimum",
]


def validate_plan(document):
    """Checks a decoded plan (list of step dicts); returns the normalized steps."""
    return _json.loads(_core.validate_plan(_json.dumps(document)))


def parse_plan(text):
    return _json.loads(_core.parse_plan(text))


def run_workflow(workflow, query, script, workspace_root, config=None, run_id=""):
    """Runs a workflow offline against a scripted backend file."""
    out = _core.run_workflow(workflow, query, str(script), str(workspace_root),
                             _json.dumps(config) if config else "", run_id)
    out["state"] = _json.loads(out["state"])
    return out


def read_transcript(path):
    return [_json.loads(line) for line in _core.read_transcript(str(path))]
