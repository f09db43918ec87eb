# fcqn/routers/runs.py
from fastapi import APIRouter, Depends
from sqlalchemy.orm import Session

from fcqn.db import get_db
from fcqn.schemas import RunOut
from fcqn.services.ledger import list_runs

router = APIRouter(prefix="/runs", tags=["runs"])


@router.get("", response_model=list[RunOut])
def get_runs(limit: int = 100, db: Session = Depends(get_db)):
    return list_runs(db, limit)
