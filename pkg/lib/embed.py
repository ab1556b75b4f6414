"""
レポートの組み立て

CSVの列の順番は固定です。mauveとcoherenceは計算しないので空欄になります。
"""
from io import StringIO
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence
import csv
import json
import math

from lib.metrics import REPETITION_N, Row

if TYPE_CHECKING:
    from lib.experiment import CellResult, TimingRow

METRICS_COLUMNS = [
    "method", "domain", "mauve", "diversity", "distinct2", "distinct3", "distinct4",
    "coherence", "repetition", "nll", "ms_per_prompt", "rel_speed"
]
TIMING_COLUMNS = ["method", "k", "mode", "workers", "ms_per_prompt", "std_ms", "total_s", "amateur_ms", "rel_speed"]
REPORT_HEADER = {
    "diversity": "product of distinct-2, distinct-3 and distinct-4 over generated tokens",
    "repetition": f"fraction of {REPETITION_N}-gram positions whose {REPETITION_N}-gram occurred earlier",
    "nll": "expert negative log-likelihood per generated token (nats), prompt as context",
    "mauve": "not computed",
    "coherence": "not computed"
}


def _number(value: Optional[float], digits: int = 6) -> str:
    if value is None:
        return ""
    if not math.isfinite(value):
        return str(value)
    return f"{value:.{digits}f}"


def _json_number(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return value


def metrics_record(row: Row) -> Dict[str, str]:
    report = row.report
    return {
        "method": row.method,
        "domain": row.domain,
        "mauve": "",
        "diversity": _number(report.diversity),
        "distinct2": _number(report.distinct[2]),
        "distinct3": _number(report.distinct[3]),
        "distinct4": _number(report.distinct[4]),
        "coherence": "",
        "repetition": _number(report.repetition_rate),
        "nll": _number(report.expert_nll),
        "ms_per_prompt": _number(report.mean_ms, 3),
        "rel_speed": _number(report.rel_speed, 3)
    }


def _write_csv(columns: List[str], records: Sequence[Dict[str, str]]) -> str:
    buffer = StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow(record)
    return buffer.getvalue()


def metrics_csv(rows: Sequence[Row]) -> str:
    """
    指標の表をCSVにします。

    :param rows: 集計した行
    :return: CSVの文字列
    """
    return _write_csv(METRICS_COLUMNS, [metrics_record(row) for row in rows])


def metrics_json(rows: Sequence[Row], cells: Sequence["CellResult"] = (), **meta: Any) -> str:
    """
    指標の表をJSONにします。セルごとの結果があれば一緒に書き出します。

    :param rows: 集計した行
    :param cells: セルごとの結果
    :param meta: ヘッダーに加える情報
    :return: JSONの文字列
    """
    body: Dict[str, Any] = {
        "header": dict(REPORT_HEADER, **meta),
        "rows": [
            dict(method=row.method, domain=row.domain, **row.report.to_dict(), **row.extra)
            for row in rows
        ]
    }
    if cells:
        body["cells"] = [cell.to_dict() for cell in cells]
    return json.dumps(body, ensure_ascii=False, indent=2)


def timing_record(row: "TimingRow") -> Dict[str, str]:
    summary = row.summary
    return {
        "method": row.method,
        "k": "" if row.k is None else str(row.k),
        "mode": row.mode or "",
        "workers": str(summary.workers),
        "ms_per_prompt": _number(summary.mean_ms, 3),
        "std_ms": _number(summary.std_ms, 3),
        "total_s": _number(summary.total_s, 3),
        "amateur_ms": _number(summary.median_amateur_ms, 3),
        "rel_speed": f"{row.rel_speed:.2f}x"
    }


def timing_csv(rows: Sequence["TimingRow"]) -> str:
    return _write_csv(TIMING_COLUMNS, [timing_record(row) for row in rows])


def timing_json(rows: Sequence["TimingRow"], **meta: Any) -> str:
    return json.dumps({
        "header": meta,
        "rows": [
            {
                "method": row.method,
                "k": row.k,
                "mode": row.mode,
                "workers": row.summary.workers,
                "prompts": row.summary.prompts,
                "repetitions": row.summary.repetitions,
                "ms_per_prompt": _json_number(row.summary.mean_ms),
                "std_ms": _json_number(row.summary.std_ms),
                "total_s": _json_number(row.summary.total_s),
                "amateur_ms": _json_number(row.summary.median_amateur_ms),
                "rel_speed": _json_number(row.rel_speed)
            }
            for row in rows
        ]
    }, ensure_ascii=False, indent=2)


def render_table(records: Sequence[Dict[str, str]], columns: Sequence[str]) -> str:
    """
    空欄の列を省いて、左揃えのテキストの表にします。

    :param records: 行
    :param columns: 列の順番
    :return: 表の文字列
    """
    shown = [column for column in columns if any(record[column] for record in records)]
    widths = {column: max([len(column)] + [len(record[column]) for record in records]) for column in shown}
    lines = ["  ".join(column.ljust(widths[column]) for column in shown)]
    for record in records:
        lines.append("  ".join(record[column].ljust(widths[column]) for column in shown))
    return "\n".join(line.rstrip() for line in lines)
