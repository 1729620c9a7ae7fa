import io
import json

import pytest

from conftest import GOLDEN
from fctl.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, text, name="p.fctl"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_check_prints_the_type():
    code, out, _ = run("check", GOLDEN / "id.fctl")
    assert code == 0 and out.strip() == "forall a. a -> a"


def test_check_json():
    code, out, _ = run("check", "--json", GOLDEN / "shift_throw.fctl")
    data = json.loads(out)
    assert code == 0 and data["ok"] and data["mode"] == "delimited cbv"


def test_check_reports_type_errors(tmp_path):
    path = write(tmp_path, "#mode abortive cbv\n(tfun a -> fun (x:a) -> x) (tfun a -> fun (x:a) -> x)\n")
    code, _, err = run("check", path)
    assert code == 1 and "type error" in err
    code, out, _ = run("check", "--json", path)
    assert code == 1 and json.loads(out)["kind"] == "not-arrow"


def test_eval_callcc():
    code, out, _ = run("eval", "--fuel", 100, GOLDEN / "callcc.fctl")
    assert code == 0
    assert out.splitlines() == ["tfun a -> fun (x:a) -> x", "steps: 2"]


@pytest.mark.parametrize("name", ["callcc", "shift_discard", "shift_throw", "application"])
def test_eval_engines_agree(name):
    code, out, _ = run("eval", "--engine", "both", "--json", GOLDEN / f"{name}.fctl")
    data = json.loads(out)
    assert code == 0 and data["agree"]
    assert [r["engine"] for r in data["results"]] == ["reduction", "machine"]


def test_parse_error_has_a_position(tmp_path):
    path = write(tmp_path, "#mode abortive cbv\nfun (x: -> x\n")
    code, _, err = run("eval", path)
    assert code == 1
    assert f"{path}:2:" in err and "parse error" in err


def test_missing_header_without_mode_flag(tmp_path):
    path = write(tmp_path, "tfun a -> fun (x:a) -> x\n")
    assert run("check", path)[0] == 1
    code, out, _ = run("check", "--mode", "abortive", "cbn", path)
    assert code == 0 and out.strip() == "forall a. a -> a"


def test_stuck_exits_2(tmp_path):
    path = write(tmp_path, "#mode abortive cbv\n(tfun a -> fun (x:a) -> x) (tfun a -> fun (x:a) -> x)\n")
    code, out, _ = run("eval", path)
    assert code == 2 and out.startswith("stuck")
    assert run("decompose", path)[0] == 2


def test_fuel_exhausted_exits_3():
    code, out, _ = run("eval", "--fuel", 1, GOLDEN / "callcc.fctl")
    assert code == 3 and "fuel exhausted" in out


def test_stdin(monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO((GOLDEN / "id.fctl").read_text()))
    code, out, _ = run("check", "-")
    assert code == 0 and out.strip() == "forall a. a -> a"


def test_missing_file_and_usage_errors():
    assert run("check", "/nonexistent/file.fctl")[0] == 1
    assert run("bogus")[0] == 1
    assert run("fuzz", "--count", -1)[0] == 1


def test_trace_matches_golden():
    for name in ("callcc", "shift_discard", "shift_throw"):
        code, out, _ = run("trace", GOLDEN / f"{name}.fctl")
        assert code == 0
        assert out == (GOLDEN / f"{name}.trace.json").read_text()


def test_machine_trace():
    code, out, _ = run("trace", "--engine", "machine", GOLDEN / "callcc.fctl")
    recs = json.loads(out)
    assert code == 0 and recs[-1]["state"] == "done"


def test_step():
    code, out, _ = run("step", GOLDEN / "callcc.fctl")
    assert code == 0 and out.startswith("1. callcc:")
    code, out, _ = run("step", "--json", GOLDEN / "callcc.fctl", 5)
    data = json.loads(out)
    assert [r.get("rule") for r in data["steps"]] == ["callcc", "throw_v", None]
    assert data["program"] == "tfun a -> fun (x:a) -> x"


def test_decompose():
    code, out, _ = run("decompose", GOLDEN / "application.fctl")
    assert code == 0 and out.startswith("redex:") and "rule: beta_v" in out
    code, out, _ = run("decompose", "--all", GOLDEN / "application.fctl")
    assert out.splitlines()[-1] == "3 decompositions, 1 redex"
    code, out, _ = run("decompose", "--all", "--json", GOLDEN / "shift_throw.fctl")
    assert all("metacontext" in d for d in json.loads(out)["decompositions"])


def _without_timing(obj):
    if isinstance(obj, dict):
        return {k: _without_timing(v) for k, v in obj.items() if k != "seconds"}
    if isinstance(obj, list):
        return [_without_timing(v) for v in obj]
    return obj


def test_fuzz_is_reproducible():
    args = ("fuzz", "--count", 15, "--seed", 7, "--mode", "delimited", "cbn", "--json")
    c1, o1, _ = run(*args)
    c2, o2, _ = run(*args)
    assert c1 == c2 == 0
    assert _without_timing(json.loads(o1)) == _without_timing(json.loads(o2))


def test_fuzz_text_all_modes():
    code, out, _ = run("fuzz", "--count", 5)
    assert code == 0 and out.count("result: PASS") == 4
