import io
import csv
import json
import math
import datetime

from pathlib import Path
from typing import Any, Dict, List

import numpy as np

# Internal libraries
from src.kernel_core import Kernel, PointSet, Potential
from utils.exceptions import DomainError, KernelFormatError, ToolkitError
from utils.helpers import dumps_report
from utils.logger import setup_logger

logger = setup_logger(__name__)


def _read_json(path: Path) -> Any:
    try:
        with path.open(encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError:
        raise KernelFormatError(str(path), "file not found") from None
    except json.JSONDecodeError as e:
        raise KernelFormatError(f"{path}:{e.lineno}:{e.colno}", f"malformed JSON: {e.msg}") from None
    except OSError as e:
        raise KernelFormatError(str(path), f"cannot read file: {e}") from None


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
    except OSError as e:
        raise KernelFormatError(str(path), f"cannot write file: {e}") from None


def _as_number(value: Any, location: str) -> float:
    # bool is an int subclass but never a valid entry
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise KernelFormatError(location, f"expected a number, got {value!r}")
    number = float(value)
    if not math.isfinite(number):
        raise KernelFormatError(location, "non-finite entry")
    return number


def _parse_points(doc: Dict, source: str) -> PointSet:
    labels = doc.get("points")
    if not isinstance(labels, list) or not labels:
        raise KernelFormatError(f"{source}:points", "expected a nonempty list of labels")
    if not all(isinstance(label, str) for label in labels):
        raise KernelFormatError(f"{source}:points", "labels must be strings")
    try:
        return PointSet(tuple(labels))
    except DomainError as e:
        raise KernelFormatError(f"{source}:points", str(e)) from None


def _parse_matrix(rows: Any, n: int, source: str) -> List[List[float]]:
    if not isinstance(rows, list) or len(rows) != n:
        got = len(rows) if isinstance(rows, list) else type(rows).__name__
        raise KernelFormatError(f"{source}:values", f"non-square array: expected {n} rows, got {got}")
    matrix = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise KernelFormatError(f"{source}:values[{i}]", f"non-square array: expected {n} entries, got {got}")
        matrix.append([_as_number(v, f"{source}:values[{i}][{j}]") for j, v in enumerate(row)])
    return matrix


def _load_kernel_csv(path: Path) -> Kernel:
    try:
        with path.open(newline='', encoding='utf-8') as f:
            rows = [row for row in csv.reader(f) if any((cell or '').strip() for cell in row)]
    except OSError as e:
        raise KernelFormatError(str(path), f"cannot read file: {e}") from None
    if not rows:
        raise KernelFormatError(str(path), "empty CSV")
    header = [cell.strip() for cell in rows[0]]
    points = _parse_points({"points": header}, str(path))
    body = []
    for i, row in enumerate(rows[1:]):
        parsed = []
        for j, cell in enumerate(row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise KernelFormatError(f"{path}:row {i + 2}, column {j + 1}", f"expected a number, got {cell!r}") from None
        body.append(parsed)
    return Kernel(points, _parse_matrix(body, len(points), str(path)))


def load_kernel(source: str | Path) -> Kernel:
    """
    Read a kernel file. JSON files hold {"points": [...], "values": [[...], ...]};
    files ending in .csv hold a header row of labels followed by n rows of n values.
    Raises KernelFormatError naming the offending location.
    """
    path = Path(source)
    if path.suffix.lower() == ".csv":
        kernel = _load_kernel_csv(path)
    else:
        doc = _read_json(path)
        if not isinstance(doc, dict):
            raise KernelFormatError(str(path), "expected a JSON object")
        points = _parse_points(doc, str(path))
        kernel = Kernel(points, _parse_matrix(doc.get("values"), len(points), str(path)))
    logger.debug(f"Loaded {kernel.n}x{kernel.n} kernel from {path}")
    return kernel


def write_kernel(k: Kernel, dest: str | Path) -> None:
    """Write `k` so that load_kernel reproduces it bit-exactly (JSON, or CSV by suffix)."""
    path = Path(dest)
    if path.suffix.lower() == ".csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(k.points.labels)
        writer.writerows([repr(float(v)) for v in row] for row in k.values)
        _write_text(path, buffer.getvalue())
    else:
        _write_text(path, json.dumps(k.to_dict(), sort_keys=True) + "\n")


def write_potential(p: Potential, dest: str | Path) -> None:
    _write_text(Path(dest), json.dumps(p.to_dict(), sort_keys=True) + "\n")


def load_family_doc(source: str | Path) -> tuple[PointSet, np.ndarray]:
    """Read {"points": [...], "members": [[...], ...]} into points and an (m, n) array."""
    path = Path(source)
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise KernelFormatError(str(path), "expected a JSON object")
    points = _parse_points(doc, str(path))
    members = doc.get("members")
    if not isinstance(members, list):
        raise KernelFormatError(f"{path}:members", "expected a list of potentials")
    rows = []
    for m, member in enumerate(members):
        if not isinstance(member, list) or len(member) != len(points):
            raise KernelFormatError(f"{path}:members[{m}]", f"expected {len(points)} values")
        rows.append([_as_number(v, f"{path}:members[{m}][{i}]") for i, v in enumerate(member)])
    return points, np.array(rows, dtype=float).reshape(len(rows), len(points))


def load_sample_doc(source: str | Path) -> Dict:
    """Read a function-sample file {"a", "b", "values", "bounds"?, "jumps"?} without interpreting it."""
    path = Path(source)
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise KernelFormatError(str(path), "expected a JSON object")
    for key in ("a", "b"):
        _as_number(doc.get(key), f"{path}:{key}")
    values = doc.get("values")
    if not isinstance(values, list):
        raise KernelFormatError(f"{path}:values", "expected a list of samples")
    parsed = {
        "a": float(doc["a"]),
        "b": float(doc["b"]),
        "values": [_as_number(v, f"{path}:values[{i}]") for i, v in enumerate(values)],
    }
    bounds = doc.get("bounds")
    if bounds is not None:
        if not isinstance(bounds, list) or len(bounds) != 2:
            raise KernelFormatError(f"{path}:bounds", "expected [m, M]")
        parsed["bounds"] = tuple(_as_number(v, f"{path}:bounds[{i}]") for i, v in enumerate(bounds))
    jumps = doc.get("jumps", {})
    if not isinstance(jumps, dict):
        raise KernelFormatError(f"{path}:jumps", "expected an object of node index -> right limit")
    try:
        parsed["jumps"] = {int(k): _as_number(v, f"{path}:jumps[{k}]") for k, v in jumps.items()}
    except ValueError:
        raise KernelFormatError(f"{path}:jumps", "node indices must be integers") from None
    return parsed


class DataManager:
    def __init__(self, out: str | None = None, timestamp: bool = True) -> None:
        """
        Emits JSON reports to stdout or to the `out` file.
        Args:
            out: report destination; None writes to stdout.
            timestamp: add a `generated_at` field (disable for byte-identical reruns).
        """
        self.logger = setup_logger(__name__)
        self.out = Path(out) if out else None
        self.timestamp = timestamp

    def render(self, report: Dict) -> str:
        body = dict(report)
        if self.timestamp:
            body["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        return dumps_report(body) + "\n"

    def emit(self, report: Dict, echo=print) -> None:
        text = self.render(report)
        if self.out is None:
            echo(text, end="")
            return
        _write_text(self.out, text)
        self.logger.info(f"Report written to {self.out}")

    def emit_error(self, error: ToolkitError, echo=print) -> None:
        self.emit({"error": type(error).__name__, "message": str(error), "details": error.details()}, echo=echo)
