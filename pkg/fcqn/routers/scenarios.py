# fcqn/routers/scenarios.py
from fastapi import APIRouter, Body, HTTPException

from fcqn.errors import ConfigError, FcqnError
from fcqn.schemas import Report
from fcqn.services import harness

router = APIRouter(prefix="/scenarios", tags=["scenarios"])


def _config_from_body(body: str | dict):
    try:
        return harness.validate_config(body)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=exc.errors)


@router.post("/validate")
def validate_scenario(body: str | dict = Body(...)):
    """Resolve a YAML (as a JSON string) or JSON config with all defaults filled in."""
    return _config_from_body(body).model_dump(mode="json")


@router.post("/run", response_model=Report)
def run_scenario(body: str | dict = Body(...), write: bool = False):
    config = _config_from_body(body)
    try:
        return harness.run(config, write=write)
    except FcqnError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
