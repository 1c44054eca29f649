import csv
import io
import json

import pytest

from kedlab.cli import run


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def body_lines(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_validate_dim3():
    code, out, _ = invoke("validate", "--dim", "3", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["summary"]["m_measured"] == 4
    assert payload["summary"]["n_failures"] == 0
    assert payload["config"]["command"] == "validate"


def test_validate_csv_has_rows_and_summary():
    code, out, _ = invoke("validate", "--dim", "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# kedlab validate" and lines[1].startswith("# config: ")
    summary = json.loads(lines[-1].removeprefix("# summary: "))
    assert summary == {"dim": 1, "m_measured": 2, "m_predicted": 2, "n_terms": 12, "n_failures": 0}
    assert len(body_lines(out)) == 1 + 12 * 2


def test_validate_disagreement_exit_code():
    code, _, _ = invoke("validate", "--dim", "3", "--profiles", "hydrogenic", "--tol", "1e-6")
    assert code == 2


def test_check_marginal():
    code, out, _ = invoke("check", "--dim", "1", "--term", "0,0,1")
    assert code == 0
    (record,) = csv.DictReader(body_lines(out))
    assert record["class"] == "PeriodicMarginal" and record["q_decay"] == "0/1"
    assert record["finite_periodic"] == "true" and record["finite_localized"] == "false"


def test_enumerate_dim2():
    code, out, _ = invoke("enumerate", "--dim", "2")
    assert code == 0
    assert len(body_lines(out)) == 1 + 7
    code, out, _ = invoke("enumerate", "--dim", "2", "--format", "json")
    assert json.loads(out)["count"] == 7
    code, out, _ = invoke("enumerate", "--dim", "1", "--periodic")
    assert len(body_lines(out)) == 1 + 7


def test_probe_localized_and_periodic():
    code, out, _ = invoke("probe", "--term", "0,0,0,0,0,1", "--profile", "hydrogenic", "--format", "json")
    assert code == 0
    report = json.loads(out)["report"]
    assert report["verdict"] == "Growing" and report["agrees"] == "true"
    code, out, _ = invoke("probe", "--term", "0,0,1", "--profile", "cos:rho0=1,A=0.5,L=1")
    assert code == 0 and ",true," in body_lines(out)[1]
    code, out, _ = invoke("probe", "--term", "2", "--profile", "hydrogenic", "--rlo", "10", "--rhi", "30")
    assert code == 0 and "10.0:30.0" in out


def test_fit_auto_basis():
    code, out, _ = invoke("fit", "--profile", "hydrogenic", "--format", "json")
    assert code == 0
    fit = json.loads(out)["fit"]
    assert fit["a"][1] == pytest.approx(1.0, abs=1e-6)
    assert abs(fit["a"][0]) < 1e-6 and abs(fit["a"][2]) < 1e-6
    code, out, _ = invoke("fit", "--profile", "hydrogenic", "--basis", "tf", "2")
    assert code == 0 and "residual_rms=" in out


def test_fit_rank_deficient():
    code, out, _ = invoke("fit", "--profile", "hydrogenic", "--basis", "0,0,0,1", "0,2", "1,0,1", "2,1", "4")
    assert code == 2 and "null-space dimension 2" in out


@pytest.mark.parametrize("argv", [
    ("probe", "--term", "1,0", "--profile", "hydrogenic"),
    ("probe", "--term", "2", "--profile", "bogus"),
    ("check", "--dim", "0", "--term", "2"),
    ("enumerate", "--dim", "2", "--max-order", "65"),
    ("frobnicate",),
    ("check", "--dim", "3"),
])
def test_usage_errors(argv):
    code, out, err = invoke(*argv)
    assert code == 1 and out == "" and "error" in err


def test_term_error_shows_grammar():
    _, _, err = invoke("check", "--dim", "3", "--term", "x")
    assert "n1,n2,...,nm" in err


def test_deterministic_output(tmp_path):
    a = invoke("validate", "--dim", "2")[1]
    b = invoke("validate", "--dim", "2")[1]
    assert a == b
    path = tmp_path / "out.csv"
    code, out, _ = invoke("enumerate", "--dim", "3", "--output", str(path))
    assert code == 0 and out == ""
    text = path.read_text()
    assert text.startswith("# kedlab enumerate\n# config: ")
    assert json.loads(text.splitlines()[1].removeprefix("# config: "))["dim"] == 3


def test_threads_env(monkeypatch):
    serial = invoke("validate", "--dim", "2")[1]
    monkeypatch.setenv("KEDLAB_THREADS", "4")
    parallel = invoke("validate", "--dim", "2")[1]
    assert body_lines(parallel) == body_lines(serial)
    monkeypatch.setenv("KEDLAB_THREADS", "-2")
    assert invoke("validate", "--dim", "2")[0] == 1
