# fcqn/services/ledger.py
import logging

from sqlalchemy.orm import Session

from fcqn.models import RunRecord
from fcqn.schemas import Report

logger = logging.getLogger(__name__)


def record_run(db: Session, report: Report, output_dir: str | None, status: str = "ok") -> RunRecord:
    """Append one row per executed scenario. Never read back into a report."""
    row = RunRecord(
        scenario=report.scenario,
        seed=report.seed,
        config_hash=report.config_hash,
        output_dir=output_dir,
        status=status,
    )
    db.add(row)
    db.commit()
    db.refresh(row)
    logger.debug("ledger row %d for %s", row.id, report.scenario)
    return row


def list_runs(db: Session, limit: int = 100) -> list[RunRecord]:
    return db.query(RunRecord).order_by(RunRecord.id.desc()).limit(limit).all()
