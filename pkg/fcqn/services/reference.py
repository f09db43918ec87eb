# fcqn/services/reference.py
import json
import math
from functools import lru_cache
from pathlib import Path

REFERENCE_FILE = Path(__file__).resolve().parent.parent / "reference" / "reported_values.json"

_THETA_NAMES = {
    "0": 0.0,
    "pi/20": math.pi / 20,
    "pi/10": math.pi / 10,
    "3pi/20": 3 * math.pi / 20,
    "pi/5": math.pi / 5,
    "pi/4": math.pi / 4,
}


@lru_cache(maxsize=1)
def load_reference() -> dict:
    """Reported measurement values shipped with the package."""
    with open(REFERENCE_FILE, "r") as f:
        return json.load(f)


def link_labels() -> list[str]:
    return list(load_reference()["links"])


def mdi_targets() -> dict[str, float]:
    return {link: value for link, (value, _) in load_reference()["mdi_witness"].items()}


def link_fidelities(fiber: str = "post") -> dict[str, float]:
    key = "fidelity_post_fiber" if fiber == "post" else "fidelity_pre_fiber"
    return dict(load_reference()[key])


def theta_table() -> list[dict]:
    """Rows with numeric theta (radians), bound and E_Tr with their errors."""
    rows = []
    for row in load_reference()["theta_scan"]:
        rows.append({
            "theta": _THETA_NAMES[row["theta"]],
            "theta_label": row["theta"],
            "hwp_deg": row["hwp_deg"],
            "lower_bound": row["lower_bound"][0],
            "lower_bound_err": row["lower_bound"][1],
            "e_tr": row["e_tr"][0],
            "e_tr_err": row["e_tr"][1],
        })
    return rows


def attack_table() -> dict[str, dict]:
    return dict(load_reference()["attack_witness"])
