import json

import numpy as np
import pytest

from src.data_manager import (
    DataManager,
    load_family_doc,
    load_kernel,
    load_sample_doc,
    write_kernel,
    write_potential,
)
from src.kernel_core import Kernel, PointSet, Potential
from utils.exceptions import KernelFormatError, NegativeCycleError


def test_load_kernel_parses_values(write_json):
    k = load_kernel(write_json("k.json", {"points": ["a", "b"], "values": [[1, 0.5], [2, 1]]}))
    assert k.points.labels == ("a", "b")
    assert k("a", "b") == 0.5
    assert k("b", "a") == 2.0


@pytest.mark.parametrize("doc, fragment", [
    ({"points": ["a", "b"], "values": [[1, 2], [3, 4], [5, 6]]}, "non-square"),
    ({"points": ["a", "b"], "values": [[1, 2], [3]]}, "non-square"),
    ({"points": ["a", "a"], "values": [[1, 2], [3, 4]]}, "duplicate"),
    ({"points": ["a"], "values": [["x"]]}, "expected a number"),
    ({"points": [], "values": []}, "nonempty"),
])
def test_load_kernel_rejects_malformed(write_json, doc, fragment):
    with pytest.raises(KernelFormatError) as info:
        load_kernel(write_json("bad.json", doc))
    assert fragment in str(info.value)


def test_load_kernel_rejects_non_finite(tmp_path):
    path = tmp_path / "nan.json"
    path.write_text('{"points": ["a"], "values": [[NaN]]}', encoding='utf-8')
    with pytest.raises(KernelFormatError) as info:
        load_kernel(path)
    assert "values[0][0]" in info.value.location


def test_load_kernel_reports_json_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"points": ["a"],\n "values": [[1]', encoding='utf-8')
    with pytest.raises(KernelFormatError) as info:
        load_kernel(path)
    assert info.value.location.startswith(str(path) + ":")


def test_missing_file(tmp_path):
    with pytest.raises(KernelFormatError):
        load_kernel(tmp_path / "absent.json")


def test_write_identity_kernel(tmp_path):
    path = tmp_path / "one.json"
    write_kernel(Kernel(PointSet(("a",)), [[1.0]]), path)
    assert json.loads(path.read_text(encoding='utf-8'))["values"] == [[1]]


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_round_trip_is_bit_exact(tmp_path, suffix):
    rng = np.random.default_rng(2024)
    for trial in range(100):
        n = int(rng.integers(1, 7))
        k = Kernel(PointSet.of_size(n), rng.standard_normal((n, n)) * 10.0 ** rng.integers(-8, 8))
        path = tmp_path / f"k{trial}{suffix}"
        write_kernel(k, path)
        assert load_kernel(path).same_as(k)


def test_csv_kernel_with_bad_cell(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("a,b\n1,2\n3,oops\n", encoding='utf-8')
    with pytest.raises(KernelFormatError) as info:
        load_kernel(path)
    assert "row 3, column 2" in info.value.location


def test_unwritable_destination(tmp_path):
    blocker = tmp_path / "file.txt"
    blocker.write_text("x", encoding='utf-8')
    with pytest.raises(KernelFormatError):
        write_kernel(Kernel(PointSet(("a",)), [[1.0]]), blocker / "k.json")


def test_csv_labels_with_commas_and_quotes(tmp_path):
    k = Kernel(PointSet(("a,b", 'say "c"')), [[1.0, 0.5], [2.0, 1.0]])
    path = tmp_path / "k.csv"
    write_kernel(k, path)
    assert load_kernel(path).same_as(k)


def test_write_potential_layout(tmp_path):
    p = Potential(PointSet(("a", "b", "c")), [0.1, -2.5, 1e-300])
    write_potential(p, tmp_path / "p.json")
    doc = json.loads((tmp_path / "p.json").read_text(encoding='utf-8'))
    assert doc == {"points": ["a", "b", "c"], "values": [0.1, -2.5, 1e-300]}


def test_family_doc(write_json):
    points, members = load_family_doc(write_json("fam.json", {"points": ["a", "b"], "members": [[0, 1], [2, 3]]}))
    assert points.labels == ("a", "b")
    assert members.shape == (2, 2)
    with pytest.raises(KernelFormatError):
        load_family_doc(write_json("bad.json", {"points": ["a", "b"], "members": [[0]]}))


def test_sample_doc_jumps_are_integer_keyed(write_json):
    doc = load_sample_doc(write_json("s.json", {"a": 0, "b": 1, "values": [0, 1, 2], "jumps": {"1": 5}}))
    assert doc["jumps"] == {1: 5.0}
    with pytest.raises(KernelFormatError):
        load_sample_doc(write_json("t.json", {"a": 0, "b": 1, "values": [0, 1, 2], "jumps": {"one": 5}}))


def test_render_is_deterministic_without_timestamp():
    manager = DataManager(timestamp=False)
    report = {"ok": True, "value": 0.1, "kernel": Kernel(PointSet(("a",)), [[2.0]])}
    assert manager.render(report) == manager.render(report)
    assert "generated_at" not in json.loads(manager.render(report))
    assert "generated_at" in json.loads(DataManager().render(report))


def test_non_finite_numbers_are_strings():
    text = DataManager(timestamp=False).render({"slack": float("-inf")})
    assert json.loads(text)["slack"] == "-inf"


def test_emit_to_file_and_error_report(tmp_path, capsys):
    out = tmp_path / "reports" / "r.json"
    DataManager(out=str(out), timestamp=False).emit({"ok": False})
    assert json.loads(out.read_text(encoding='utf-8')) == {"ok": False}

    DataManager(timestamp=False).emit_error(NegativeCycleError(["a", "b"], -2.0))
    doc = json.loads(capsys.readouterr().out)
    assert doc["error"] == "NegativeCycleError"
    assert doc["details"] == {"cycle": ["a", "b"], "weight": -2.0}
