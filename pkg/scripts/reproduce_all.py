# scripts/reproduce_all.py
"""Run every scenario config under configs/ and write its report next to the others."""
import logging
from pathlib import Path

from fcqn import settings
from fcqn.errors import FcqnError
from fcqn.services import harness

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

logger = logging.getLogger("fcqn.reproduce")


def main():
    logging.basicConfig(level=settings.LOG_LEVEL.upper(), format="%(levelname)s %(name)s: %(message)s")
    failed = []
    for path in sorted(CONFIG_DIR.glob("*.yaml")):
        try:
            config = harness.validate_config(path.read_text())
            report = harness.run(config)
        except FcqnError as exc:
            logger.error("%s: %s", path.name, exc)
            failed.append(path.name)
            continue
        logger.info("%s -> %s (%s)", path.name, config.output_dir, report.config_hash[:12])
    if failed:
        raise SystemExit(f"{len(failed)} configs failed: {', '.join(failed)}")


if __name__ == "__main__":
    main()
