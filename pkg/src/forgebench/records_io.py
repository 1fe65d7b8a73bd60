"""Records file format and report building.

A records file is JSONL: the first line is a header object carrying the
run metadata, every further line is either a score record or a
``{"failure": {...}}`` entry. The file contains everything needed to
rebuild the exact report the sweep wrote, so `report` stays decoupled
from `sweep`.
"""

from __future__ import annotations

import json

from .errors import ParseError
from .metrics import Report, aggregate, group_cells
from .sweep import FailureRecord, ScoreRecord, SweepResult

RECORDS_SCHEMA = "forgebench-records/1"


def write_records(result: SweepResult, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        header = {"schema": RECORDS_SCHEMA, "meta": result.meta}
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for r in result.records:
            f.write(json.dumps(r.to_json_dict(), sort_keys=True) + "\n")
        for fr in result.failures:
            f.write(json.dumps({"failure": fr.to_json_dict()}, sort_keys=True) + "\n")


def read_records(path: str) -> tuple[dict, list[ScoreRecord], list[FailureRecord]]:
    meta: dict = {}
    records: list[ScoreRecord] = []
    failures: list[FailureRecord] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {e}") from e
            if "schema" in row:
                if row["schema"] != RECORDS_SCHEMA:
                    raise ParseError(f"{path}:{lineno}: unknown schema {row['schema']!r}")
                meta = row.get("meta", {})
            elif "failure" in row:
                fr = row["failure"]
                failures.append(
                    FailureRecord(
                        item_id=fr["item_id"],
                        op_category=fr["op_category"],
                        severity_label=fr["severity"],
                        reason=fr.get("reason", ""),
                        label=fr.get("label", ""),
                    )
                )
            else:
                try:
                    records.append(
                        ScoreRecord(
                            item_id=row["item_id"],
                            op_category=row["op_category"],
                            severity_label=row["severity"],
                            score=float(row["score"]),
                            label=row["label"],
                        )
                    )
                except KeyError as e:
                    raise ParseError(f"{path}:{lineno}: missing field {e}") from e
    return meta, records, failures


def build_report(
    meta: dict, records: list[ScoreRecord], failures: list[FailureRecord]
) -> Report:
    cells = group_cells(records, failures)
    failure_rows = [f.to_json_dict() for f in failures]
    return aggregate(cells, meta=meta, failures=failure_rows)


def report_from_sweep(result: SweepResult) -> Report:
    return build_report(result.meta, result.records, result.failures)


def report_from_file(path: str) -> Report:
    meta, records, failures = read_records(path)
    return build_report(meta, records, failures)
