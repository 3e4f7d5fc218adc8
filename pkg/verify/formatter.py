"""JSON/CSV writers and console tables for traces and reports"""

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np
from rich.table import Table

from core.trace import FlowTrace

from .experiments import ConvergenceResult, VerificationReport
from .suite import SuiteReport


def fmt(value: Any) -> str:
    """17 significant digits, enough to round-trip a double"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def csv_table(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buffer.getvalue()


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serialisable")


def to_json(record: Any) -> str:
    # repr-based float output round-trips bit-exactly
    return json.dumps(record, indent=2, sort_keys=False, default=_plain) + "\n"


class TraceFormatter:
    """Serialise flow traces"""

    @staticmethod
    def header(trace: FlowTrace) -> List[str]:
        cols = ["t", "dt"] + [f"A_{k}" for k in range(-1, trace.n)]
        cols += ["min_kappa", "max_abs_f", "min_rho", "max_rho", "theta"]
        return cols + [f"Q[{name}]" for name in trace.monitor_names]

    @staticmethod
    def to_csv(trace: FlowTrace) -> str:
        names = trace.monitor_names
        rows = []
        for p in trace.points:
            row: List[Any] = [p.t, p.dt] + p.quermass.as_list()
            row += [p.min_curvature, p.max_speed, p.min_rho, p.max_rho, p.theta]
            row += [p.monitors.get(name, math.nan) for name in names]
            rows.append(row)
        return csv_table(TraceFormatter.header(trace), rows)

    @staticmethod
    def to_json(trace: FlowTrace) -> str:
        return to_json(trace.to_record())


class ReportFormatter:
    """Serialise verification reports and summarise them on the console"""

    ROW_HEADER = [
        "experiment_id",
        "n",
        "mode",
        "resolution",
        "name",
        "family",
        "lhs",
        "rhs",
        "gap",
        "gap_ratio",
        "scale",
        "status",
        "pass",
    ]

    @staticmethod
    def to_csv(reports: Sequence[VerificationReport]) -> str:
        rows = []
        for report in reports:
            res = "x".join(str(r) for r in report.resolution)
            for row in report.rows:
                rows.append(
                    [
                        report.experiment_id,
                        report.n,
                        report.mode,
                        res,
                        row.name,
                        row.family,
                        row.lhs,
                        row.rhs,
                        row.gap,
                        row.gap_ratio,
                        row.scale,
                        row.status,
                        row.passed,
                    ]
                )
        return csv_table(ReportFormatter.ROW_HEADER, rows)

    @staticmethod
    def to_json(reports: Sequence[VerificationReport], summary: Dict[str, Any]) -> str:
        return to_json({"summary": summary, "reports": [r.to_record() for r in reports]})

    @staticmethod
    def convergence_csv(result: ConvergenceResult) -> str:
        rows = [[r.resolution, r.spacing, r.residual, result.order] for r in result.rows]
        return csv_table(["resolution", "spacing", "residual", "order"], rows)

    @staticmethod
    def summary_table(reports: Sequence[VerificationReport], title: str = "Inequalities") -> Table:
        table = Table(title=title)
        for col, justify in (
            ("experiment", "left"),
            ("inequality", "left"),
            ("gap", "right"),
            ("gap/scale", "right"),
            ("status", "left"),
        ):
            table.add_column(col, justify=justify)
        for report in reports:
            for row in report.rows:
                style = {"fail": "red", "error": "red", "hypothesis violated": "yellow"}.get(
                    row.status, ""
                )
                table.add_row(
                    report.experiment_id,
                    row.name,
                    f"{row.gap:.6e}",
                    f"{row.gap_ratio:.3e}",
                    row.status,
                    style=style,
                )
        return table


def xi_table_csv(s: np.ndarray, values: np.ndarray) -> str:
    return csv_table(["s", "xi"], zip(s.tolist(), values.tolist()))


class SuiteFormatter:
    """Consolidated acceptance report"""

    @staticmethod
    def to_json(report: SuiteReport) -> str:
        return to_json(report.to_record())

    @staticmethod
    def plan_table(steps: Sequence[Dict[str, Any]]) -> Table:
        table = Table(title="Acceptance plan")
        table.add_column("#", justify="right")
        table.add_column("criterion")
        table.add_column("runs")
        for s in steps:
            table.add_row(str(s["criterion"]), s["title"], s["runs"])
        return table

    @staticmethod
    def summary_table(report: SuiteReport) -> Table:
        table = Table(title="Acceptance")
        table.add_column("#", justify="right")
        table.add_column("criterion")
        table.add_column("result")
        table.add_column("seconds", justify="right")
        for r in report.results:
            verdict = "pass" if r.passed else (r.error or "FAIL")
            table.add_row(
                str(r.number),
                r.title,
                verdict,
                f"{r.seconds:.1f}",
                style="" if r.passed else "red",
            )
        return table
