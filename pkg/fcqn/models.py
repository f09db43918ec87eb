# fcqn/models.py
from datetime import datetime

from sqlalchemy import Column, DateTime, Integer, String

from fcqn.db import Base


class RunRecord(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    scenario = Column(String, index=True)
    seed = Column(Integer)
    config_hash = Column(String(64), index=True)
    output_dir = Column(String, nullable=True)
    status = Column(String, default="ok")
    created_at = Column(DateTime, default=datetime.utcnow)
