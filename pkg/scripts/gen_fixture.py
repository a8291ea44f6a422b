#!/usr/bin/env python3
"""Regenerates the bundled fixture database seed script.

Emits src/erpchat/data/erp_fixture.sql: seven anonymized ERP tables with a
fixed column-count profile (28/77/15/37/43/67/54, 321 total), a single
declared foreign key (T_F.PathID references T_D.ID) and 119 documented
columns. Column documentation is carried as trailing ``--`` comments on the
column definition lines; the SQLite catalog adapter reads them back from
sqlite_master. Descriptions never mention other tables or columns - the
semantic layer is the only place relationships are written down in prose.

Run from the repo root: python scripts/gen_fixture.py
"""

from __future__ import annotations

import random
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "erpchat" / "data" / "erp_fixture.sql"

# (table, total columns, documented columns)
PROFILE = {
    "T_A": (28, 12),
    "T_B": (77, 30),
    "T_C": (15, 15),
    "T_D": (37, 14),
    "T_E": (43, 16),
    "T_F": (67, 20),
    "T_G": (54, 12),
}

UNIT_NAMES = [
    "Hydraulic Press HP-310",
    "Belt Conveyor BC-12",
    "Robot Cell RC-7",
    "Case Packer CP-400",
    "Servo Press SP-90",
    "Roller Conveyor RC-230",
    "Welding Cell WC-2",
    "Palletizer PL-60",
    "Forming Press FP-150",
    "Chain Conveyor CC-80",
    "Inspection Cell IC-3",
    "Wrapping Machine WM-20",
]

CATEGORIES = ["press", "conveyor", "robotics", "packaging"]
STATUSES = ["active", "active", "active", "maintenance", "active", "retired",
            "active", "maintenance", "active", "active", "retired", "maintenance"]
PLANTS = ["BU-01", "BU-02", "VA-01"]
SITES = ["North Plant", "South Plant", "Harbor Yard", "East Works", "Central Depot"]
REGIONS = ["north", "south", "east"]
STEP_NAMES = ["cutting", "machining", "welding", "assembly", "wiring",
              "painting", "testing", "packing"]


def lit(value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


class Col:
    def __init__(self, name, sqltype, doc, gen, constraint=""):
        self.name = name
        self.sqltype = sqltype
        self.doc = doc
        self.gen = gen
        self.constraint = constraint


def fillers(prefix_start: int, count: int, rng: random.Random, all_null_every: int = 7):
    """Legacy-style spare columns; every ``all_null_every``-th one holds only NULLs."""
    kinds = [
        ("Spare{:02d}Code", "TEXT", lambda i, r: f"X{r.randint(100, 999)}"),
        ("Spare{:02d}Qty", "INTEGER", lambda i, r: r.randint(0, 500)),
        ("Spare{:02d}Amt", "REAL", lambda i, r: round(r.uniform(0, 9000), 2)),
        ("Spare{:02d}Flag", "INTEGER", lambda i, r: r.randint(0, 1)),
        ("Spare{:02d}Date", "TEXT", lambda i, r: f"202{r.randint(0, 4)}-{r.randint(1, 12):02d}-{r.randint(1, 28):02d}"),
    ]
    cols = []
    for n in range(count):
        pattern, sqltype, gen = kinds[n % len(kinds)]
        name = pattern.format(prefix_start + n)
        if (n + 1) % all_null_every == 0:
            cols.append(Col(name, sqltype, None, lambda i, r: None))
        else:
            cols.append(Col(name, sqltype, None, gen))
    return cols


def apply_doc_budget(table: str, cols: list[Col]) -> list[Col]:
    total, documented = PROFILE[table]
    assert len(cols) == total, f"{table}: {len(cols)} columns, expected {total}"
    legacy_doc = "Legacy field retained from the previous ERP migration; kept for report compatibility."
    for idx, col in enumerate(cols):
        if idx < documented:
            if col.doc is None:
                col.doc = legacy_doc
        else:
            col.doc = None
    assert sum(1 for c in cols if c.doc) == documented
    return cols


def build_tables(rng: random.Random):
    date_2022_2024 = lambda i, r: f"{r.choice([2022, 2023, 2023, 2024])}-{r.randint(1, 12):02d}-{r.randint(1, 28):02d}"

    t_a = [
        Col("idA", "INTEGER", "Internal numeric identifier of the unit.", lambda i, r: i + 1, "PRIMARY KEY"),
        Col("CurrentCode", "TEXT", "Current code printed on the unit nameplate.", lambda i, r: f"UNIT-{i + 1:03d}", "NOT NULL"),
        Col("UnitName", "TEXT", "Commercial name of the unit.", lambda i, r: UNIT_NAMES[i]),
        Col("Category", "TEXT", "Product family the unit belongs to.", lambda i, r: CATEGORIES[i % len(CATEGORIES)]),
        Col("Status", "TEXT", "Lifecycle status: active, maintenance or retired.", lambda i, r: STATUSES[i]),
        Col("UnitPrice", "REAL", "Catalog price per unit in euros.", lambda i, r: round(9000 + 1733.5 * ((i * 7) % 11) + i, 2)),
        Col("Currency", "TEXT", "Currency code applied to all monetary amounts of the unit.", lambda i, r: "EUR"),
        Col("PlantCode", "TEXT", "Plant where the unit is assembled.", lambda i, r: PLANTS[i % len(PLANTS)]),
        Col("BatchSize", "INTEGER", "Standard production batch size.", lambda i, r: r.randint(1, 20)),
        Col("WeightKg", "REAL", "Shipping weight in kilograms.", lambda i, r: round(r.uniform(120, 4200), 2)),
        Col("MaterialCode", "TEXT", "Primary material code from the purchasing catalog.", lambda i, r: f"MAT-{r.randint(10, 99)}"),
        Col("QualityClass", "TEXT", "Quality class assigned at design time.", lambda i, r: "ABC"[i % 3]),
    ] + fillers(1, 16, rng)

    t_b = [
        Col("idB", "INTEGER", "Internal numeric identifier of the sales order.", lambda i, r: i + 1, "PRIMARY KEY"),
        Col("idA", "INTEGER", "Numeric identifier of the ordered unit.", lambda i, r: (i % 12) + 1, "NOT NULL"),
        Col("OrderDate", "TEXT", "Date the order was registered.", date_2022_2024),
        Col("DueDate", "TEXT", "Contractual delivery date.", date_2022_2024),
        Col("Quantity", "INTEGER", "Number of units ordered.", lambda i, r: r.randint(1, 8)),
        Col("UnitPriceAtOrder", "REAL", "Unit price agreed at order time in euros.", lambda i, r: round(r.uniform(8000, 30000), 2)),
        Col("TotalAmount", "REAL", "Total order amount in euros.", lambda i, r: round(r.uniform(8000, 200000), 2)),
        Col("Status", "TEXT", "Order status: open, shipped or cancelled.", lambda i, r: ["open", "shipped", "shipped", "cancelled", "open"][i % 5]),
        Col("CustomerCode", "TEXT", "Code of the ordering customer.", lambda i, r: f"CUST-{(i % 9) + 1:02d}"),
        Col("Priority", "INTEGER", "Handling priority from 1 (urgent) to 5 (routine).", lambda i, r: r.randint(1, 5)),
        Col("SalesRegion", "TEXT", "Sales region that booked the order.", lambda i, r: REGIONS[i % 3]),
        Col("PaymentTerms", "TEXT", "Negotiated payment terms.", lambda i, r: r.choice(["NET30", "NET60", "PREPAID"])),
        Col("ShippedDate", "TEXT", "Date the order left the plant, when already shipped.", lambda i, r: date_2022_2024(i, r) if i % 5 in (1, 2) else None),
        Col("CarrierCode", "TEXT", "Carrier contracted for the delivery.", lambda i, r: r.choice(["CARR-A", "CARR-B", "CARR-C"])),
    ] + fillers(1, 63, rng)

    t_c = [
        Col("idC", "INTEGER", "Internal numeric identifier of the technical sheet.", lambda i, r: i + 1, "PRIMARY KEY"),
        Col("idA", "INTEGER", "Numeric identifier of the described unit.", lambda i, r: i + 1, "NOT NULL"),
        Col("NetWeightKg", "REAL", "Net weight in kilograms.", lambda i, r: round(r.uniform(100, 4000), 2)),
        Col("GrossWeightKg", "REAL", "Gross packed weight in kilograms.", lambda i, r: round(r.uniform(150, 4500), 2)),
        Col("PowerRatingKw", "REAL", "Rated electrical power in kilowatts.", lambda i, r: round(r.uniform(2, 75), 1)),
        Col("VoltageV", "INTEGER", "Nominal supply voltage in volts.", lambda i, r: r.choice([230, 400, 690])),
        Col("FirmwareVersion", "TEXT", "Installed controller firmware version.", lambda i, r: f"{r.randint(1, 4)}.{r.randint(0, 9)}.{r.randint(0, 20)}"),
        Col("CertificationCode", "TEXT", "Safety certification code.", lambda i, r: f"CE-{r.randint(1000, 9999)}"),
    ] + fillers(1, 7, rng)

    t_d = [
        Col("ID", "INTEGER", "Internal numeric identifier of the production path.", lambda i, r: i + 1, "PRIMARY KEY"),
        Col("UnitNumber", "TEXT", "Code of the unit the path produces.", lambda i, r: f"UNIT-{(i % 12) + 1:03d}", "NOT NULL"),
        Col("PathName", "TEXT", "Human-readable name of the production path.", lambda i, r: f"P-{i + 1:03d} {r.choice(['assembly', 'retrofit', 'overhaul'])}"),
        Col("PathCode", "TEXT", "Short code used on shop-floor paperwork.", lambda i, r: f"P-{i + 1:03d}"),
        Col("WorkcenterCode", "TEXT", "Main workcenter executing the path.", lambda i, r: f"WC-{r.randint(1, 6):02d}"),
        Col("PlannedDurationMin", "INTEGER", "Planned total duration in minutes.", lambda i, r: r.randint(300, 3000)),
        Col("Active", "INTEGER", "Set to 1 when the path is released for production.", lambda i, r: 1 if i % 4 else 0),
        Col("RevisionNo", "INTEGER", "Engineering revision number.", lambda i, r: r.randint(1, 9)),
    ] + fillers(1, 29, rng)

    t_e = [
        Col("idE", "INTEGER", "Internal numeric identifier of the acceptance record.", lambda i, r: i + 1, "PRIMARY KEY"),
        Col("idB", "INTEGER", "Numeric identifier of the inspected order.", lambda i, r: i + 1, "NOT NULL"),
        Col("idC", "INTEGER", "Numeric identifier of the reference technical sheet.", lambda i, r: (i % 12) + 1, "NOT NULL"),
        Col("InspectionDate", "TEXT", "Date the acceptance inspection took place.", date_2022_2024),
        Col("Result", "TEXT", "Overall inspection result: pass, rework or reject.", lambda i, r: ["pass", "pass", "pass", "rework", "reject"][i % 5]),
        Col("InspectorCode", "TEXT", "Badge code of the inspector.", lambda i, r: f"INSP-{(i % 6) + 1}"),
        Col("DefectCount", "INTEGER", "Number of defects recorded.", lambda i, r: 0 if i % 5 < 3 else r.randint(1, 7)),
        Col("DurationMin", "INTEGER", "Inspection duration in minutes.", lambda i, r: r.randint(15, 240)),
    ] + fillers(1, 35, rng)

    t_f = [
        Col("idF", "INTEGER", "Internal numeric identifier of the routing step.", lambda i, r: i + 1, "PRIMARY KEY"),
        Col("PathID", "INTEGER", "Numeric identifier of the owning production path.", lambda i, r: (i // 8) + 1, "NOT NULL REFERENCES T_D(ID)"),
        Col("UnitNumber", "TEXT", "Code of the unit being built at this step.", lambda i, r: f"UNIT-{((i // 8) % 12) + 1:03d}"),
        Col("StepNo", "INTEGER", "Execution order of the step within its path.", lambda i, r: (i % 8) + 1),
        Col("StepName", "TEXT", "Name of the manufacturing operation.", lambda i, r: STEP_NAMES[i % 8]),
        Col("MachineCode", "TEXT", "Machine or cell executing the step.", lambda i, r: f"M-{r.randint(1, 20):02d}"),
        Col("DurationMinutes", "REAL", "Standard run time in minutes.", lambda i, r: round(r.uniform(5, 180), 1)),
        Col("SetupMinutes", "REAL", "Standard setup time in minutes.", lambda i, r: round(r.uniform(0, 45), 1)),
        Col("OperatorGrade", "TEXT", "Minimum operator qualification grade.", lambda i, r: r.choice(["G1", "G2", "G3"])),
        Col("QualityGate", "INTEGER", "Set to 1 when the step ends with a quality gate.", lambda i, r: 1 if (i % 8) in (3, 7) else 0),
    ] + fillers(1, 57, rng)

    t_g = [
        Col("idG", "INTEGER", "Internal numeric identifier of the installed-base record.", lambda i, r: i + 1, "PRIMARY KEY"),
        Col("UnitNumber", "TEXT", "Code of the unit installed at the site.", lambda i, r: f"UNIT-{i + 1:03d}", "NOT NULL"),
        Col("SiteName", "TEXT", "Name of the customer site.", lambda i, r: SITES[i % len(SITES)]),
        Col("Region", "TEXT", "Geographic region of the site.", lambda i, r: REGIONS[i % 3]),
        Col("CommissionedAt", "TEXT", "Date the unit was commissioned.", date_2022_2024),
        Col("ServiceStatus", "TEXT", "Service status: in_service, standby or decommissioned.", lambda i, r: ["in_service", "in_service", "standby", "in_service", "decommissioned"][i % 5]),
        Col("LastServiceDate", "TEXT", "Date of the most recent service visit.", date_2022_2024),
        Col("ContractCode", "TEXT", "Service contract covering the unit.", lambda i, r: f"SC-{(i % 4) + 1:03d}"),
        Col("OperatingHours", "INTEGER", "Accumulated operating hours.", lambda i, r: r.randint(500, 40000)),
    ] + fillers(1, 45, rng)

    tables = {
        "T_A": (apply_doc_budget("T_A", t_a), 12),
        "T_B": (apply_doc_budget("T_B", t_b), 40),
        "T_C": (apply_doc_budget("T_C", t_c), 12),
        "T_D": (apply_doc_budget("T_D", t_d), 8),
        "T_E": (apply_doc_budget("T_E", t_e), 30),
        "T_F": (apply_doc_budget("T_F", t_f), 64),
        "T_G": (apply_doc_budget("T_G", t_g), 10),
    }
    return tables


def render(tables) -> str:
    out = [
        "-- Synthetic ERP fixture: 7 tables, 321 columns, one declared foreign key",
        "-- (T_F.PathID -> T_D.ID) and 119 documented columns. Generated by",
        "-- scripts/gen_fixture.py; edit the generator, not this file.",
        "",
        "PRAGMA foreign_keys=ON;",
        "",
    ]
    for name, (cols, _) in tables.items():
        out.append(f"CREATE TABLE {name} (")
        for idx, col in enumerate(cols):
            constraint = f" {col.constraint}" if col.constraint else ""
            comma = "," if idx < len(cols) - 1 else ""
            comment = f"  -- {col.doc}" if col.doc else ""
            out.append(f"    {col.name} {col.sqltype}{constraint}{comma}{comment}")
        out.append(");")
        out.append("")

    for name, (cols, nrows) in tables.items():
        rng = random.Random(f"rows-{name}")
        col_names = ", ".join(c.name for c in cols)
        rows = []
        for i in range(nrows):
            rows.append("(" + ", ".join(lit(c.gen(i, rng)) for c in cols) + ")")
        for start in range(0, len(rows), 10):
            chunk = rows[start:start + 10]
            out.append(f"INSERT INTO {name} ({col_names}) VALUES")
            out.append(",\n".join(chunk) + ";")
            out.append("")
    return "\n".join(out) + "\n"


def main():
    rng = random.Random("erp-fixture")
    tables = build_tables(rng)
    total_cols = sum(len(cols) for cols, _ in tables.values())
    total_docs = sum(sum(1 for c in cols if c.doc) for cols, _ in tables.values())
    assert total_cols == 321, total_cols
    assert total_docs == 119, total_docs
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(render(tables), encoding="utf-8")
    print(f"wrote {OUT} ({total_cols} columns, {total_docs} documented)")


if __name__ == "__main__":
    main()
