# fcqn/settings.py
import os

from dotenv import load_dotenv

load_dotenv()

DATABASE_URL = os.getenv("FCQN_DATABASE_URL", "sqlite:///./fcqn_runs.db")
OUTPUT_DIR = os.getenv("FCQN_OUTPUT_DIR", "./results")
LOG_LEVEL = os.getenv("FCQN_LOG_LEVEL", "INFO")

# Convex solvers used by the trace-distance oracle (primary, cross-check)
SOLVER = os.getenv("FCQN_SOLVER", "CLARABEL")
CHECK_SOLVER = os.getenv("FCQN_CHECK_SOLVER", "SCS")

RECORD_RUNS = os.getenv("FCQN_RECORD_RUNS", "0").lower() in ("1", "true", "yes")
