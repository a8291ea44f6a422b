"""Regenerates the bundled evaluation suite.

Expected rows are computed by running each case's reference SQL against a
freshly seeded fixture database, never written by hand. Run from the repo
root after changing the fixture:

    python3 scripts/gen_suite.py
"""

from __future__ import annotations

import sqlite3
import sys
import tempfile
from pathlib import Path

import yaml

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from erpchat import fixture  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "src" / "erpchat" / "data" / "suite.yaml"

# (id, question, validator, extras); reference_sql doubles as the known-good
# answer for replay tooling.
CASES = [
    (
        "count_units",
        "How many catalog units does the company sell?",
        "expected_rows",
        {"reference_sql": "SELECT COUNT(*) AS unit_count FROM T_A"},
    ),
    (
        "active_unit_names",
        "List the names of all catalog units that are currently active.",
        "expected_rows",
        {"reference_sql": "SELECT UnitName FROM T_A WHERE Status = 'active'"},
    ),
    (
        "orders_in_2023",
        "How many sales orders were placed during 2023?",
        "expected_rows",
        {"reference_sql": "SELECT COUNT(*) AS order_count FROM T_B WHERE OrderDate LIKE '2023%'"},
    ),
    (
        "quantity_per_unit",
        "What is the total ordered quantity for each unit name?",
        "expected_rows",
        {
            "reference_sql": (
                "SELECT a.UnitName, SUM(b.Quantity) AS total_quantity"
                " FROM T_A a JOIN T_B b ON a.idA = b.idA GROUP BY a.UnitName"
            )
        },
    ),
    (
        "most_expensive_unit",
        "Which catalog unit has the highest list price?",
        "expected_rows",
        {"reference_sql": "SELECT UnitName FROM T_A ORDER BY UnitPrice DESC LIMIT 1"},
    ),
    (
        "avg_price_by_category",
        "What is the average list price per unit category?",
        "expected_rows",
        {
            "reference_sql": (
                "SELECT Category, AVG(UnitPrice) AS avg_price FROM T_A GROUP BY Category"
            )
        },
    ),
    (
        "steps_of_path_p001",
        "List the step names of production path P-001 in execution order.",
        "expected_rows",
        {
            "ordered": True,
            "reference_sql": (
                "SELECT f.StepName FROM T_F f JOIN T_D d ON f.PathID = d.ID"
                " WHERE d.PathCode = 'P-001' ORDER BY f.StepNo"
            ),
        },
    ),
    (
        "in_service_by_region",
        "How many installed units are in service in each region?",
        "expected_rows",
        {
            "reference_sql": (
                "SELECT Region, COUNT(*) AS in_service_count FROM T_G"
                " WHERE ServiceStatus = 'in_service' GROUP BY Region"
            )
        },
    ),
    (
        "failed_inspections",
        "How many acceptance inspections did not pass?",
        "expected_rows",
        {"reference_sql": "SELECT COUNT(*) AS failed FROM T_E WHERE Result <> 'pass'"},
    ),
    (
        "avg_step_duration_active_paths",
        "What is the average routing step duration in minutes, considering only steps on active production paths?",
        "expected_sql_predicate",
        {
            "required_fragments": ["AVG(", "T_F", "T_D"],
            "forbidden_fragments": ["T_G"],
            "reference_sql": (
                "SELECT AVG(f.DurationMinutes) AS avg_step_minutes"
                " FROM T_F f JOIN T_D d ON f.PathID = d.ID WHERE d.Active = 1"
            ),
        },
    ),
    (
        "open_orders_by_value",
        "List the open sales orders from the largest total amount to the smallest.",
        "expected_sql_predicate",
        {
            "required_fragments": ["T_B", "ORDER BY", "DESC"],
            "reference_sql": (
                "SELECT idB, OrderDate, TotalAmount FROM T_B"
                " WHERE Status = 'open' ORDER BY TotalAmount DESC"
            ),
        },
    ),
]


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        db = Path(tmp) / "erp.db"
        fixture.seed_fixture(db)
        conn = sqlite3.connect(db)
        cases = []
        for case_id, question, validator, extras in CASES:
            entry = {"id": case_id, "question": question, "validator": validator}
            entry.update(extras)
            if validator == "expected_rows":
                rows = conn.execute(extras["reference_sql"]).fetchall()
                assert rows, f"reference query for {case_id} returned nothing"
                entry["expected_rows"] = [list(row) for row in rows]
            cases.append(entry)
        conn.close()
    OUT.write_text(
        "# Bundled evaluation suite. Generated by scripts/gen_suite.py;\n"
        "# expected rows come from running each reference query against the\n"
        "# seeded demonstration database. Do not edit rows by hand.\n"
        + yaml.safe_dump({"cases": cases}, sort_keys=False, allow_unicode=True, width=100),
        "utf-8",
    )
    print(f"wrote {OUT} with {len(cases)} cases")


if __name__ == "__main__":
    main()
