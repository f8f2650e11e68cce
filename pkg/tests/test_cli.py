# -*- coding: utf-8 -*-
#
# Copyright 2017-2020- Swiss Data Science Center (SDSC)
# A partnership between École Polytechnique Fédérale de Lausanne (EPFL) and
# Eidgenössische Technische Hochschule Zürich (ETHZ).
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Tests for the command line interface."""

import json

from click.testing import CliRunner

from combrec.cli import cli, cyc, lrc, rep


def invoke(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])


def test_version():
    result = invoke("--version")

    assert result.exit_code == 0
    assert "0.1.0" in result.output


def test_lrc_bound():
    result = invoke("lrc", "bound", "--n", 131, "--k", 10, "--theta", 130, "--tau", 1, "--r", 3)

    assert result.exit_code == 0
    envelope = json.loads(result.output)
    assert envelope["tool"] == "combrec"
    assert envelope["command"] == "lrc bound"
    assert envelope["timing"] is None
    assert envelope["budget_exhausted"] is False
    assert envelope["input"]["linear"] is True
    assert envelope["result"]["T"] == 2
    assert envelope["result"]["bound"] == 120


def test_lrc_bound_is_deterministic():
    args = ("lrc", "bound", "--n", 50, "--k", 8, "--theta", 48, "--tau", 2, "--r", 2)

    assert invoke(*args).output == invoke(*args).output


def test_lrc_bound_formats():
    args = ("lrc", "bound", "--n", 131, "--k", 10, "--theta", 130, "--tau", 1, "--r", 3)

    assert invoke(*args, "--format", "text").output.strip() == "T=2 bound=120 singleton=122"

    lines = invoke(*args, "--csv").output.splitlines()
    assert lines[0] == "t,first,second,passed"
    assert lines[1] == "1,True,True,True"
    assert len(lines) == 4

    assert invoke(*args, "--json", "--csv").exit_code == 2


def test_lrc_bound_timing():
    result = invoke("lrc", "bound", "--n", 20, "--k", 5, "--theta", 18, "--tau", 2, "--r", 1, "--timing")

    assert result.exit_code == 0
    assert isinstance(json.loads(result.output)["timing"], float)


def test_lrc_bound_errors():
    assert invoke("lrc", "bound", "--n", 5, "--k", 10, "--theta", 5, "--tau", 1, "--r", 1).exit_code == 1
    assert invoke("lrc", "bound", "--n", 5, "--k", 2).exit_code == 2
    assert invoke("lrc", "bound", "--n", "five", "--k", 2, "--theta", 5, "--tau", 1, "--r", 1).exit_code == 2


def test_unknown_subcommand():
    assert invoke("lrc", "nosuch").exit_code == 2
    assert invoke("nosuch").exit_code == 2


def test_lrc_example_verify_and_shorten(tmp_path):
    code_path = tmp_path / "code.json"
    loc_path = tmp_path / "loc.json"
    trace_path = tmp_path / "trace.json"

    result = invoke("lrc", "example", "--k", 10, "--out", code_path, "--loc-out", loc_path)
    assert result.exit_code == 0
    summary = json.loads(result.output)["result"]
    assert summary["n"] == 131
    assert summary["words"] == 1024

    code_data = json.loads(code_path.read_text())
    assert code_data["format"] == 1
    assert len(code_data["words"]) == 1024

    result = invoke("lrc", "verify", "--code", code_path, "--loc", loc_path, "--format", "text")
    assert result.exit_code == 0
    assert result.output.strip() == "capable"

    result = invoke("lrc", "shorten", "--code", code_path, "--loc", loc_path, "--trace", trace_path)
    assert result.exit_code == 0
    trace = json.loads(trace_path.read_text())
    assert trace["iterations"][0]["P"] == [1]
    assert trace["iterations"][0]["I"] == [11, 12, 19]
    assert trace["iteration_count"] >= 2
    assert trace["certified_bound"] >= 38
    assert json.loads(result.output)["result"] == trace


def test_lrc_verify_counterexample(tmp_path):
    code_path = tmp_path / "code.json"
    loc_path = tmp_path / "loc.json"
    code_path.write_text(
        json.dumps({"format": 1, "q": 2, "alphabet": [0, 1], "n": 3, "words": [[0, 0, 0], [0, 1, 1], [1, 0, 1]]})
    )
    loc_path.write_text(json.dumps({"format": 1, "theta": [1, 2, 3], "tau": 1, "r": 1}))

    result = invoke("lrc", "verify", "--code", code_path, "--loc", loc_path)
    assert result.exit_code == 0
    capability = json.loads(result.output)["result"]
    assert capability["capable"] is False
    assert capability["exhaustive"] is True
    assert capability["counterexample"] == [1]

    result = invoke("lrc", "shorten", "--code", code_path, "--loc", loc_path)
    assert result.exit_code == 1

    result = invoke("lrc", "verify", "--code", code_path, "--loc", loc_path, "--budget", 1)
    assert result.exit_code == 1
    assert '"budget_exhausted": true' in result.output


def test_lrc_verify_bad_file(tmp_path):
    code_path = tmp_path / "code.json"
    code_path.write_text("{not json")

    result = invoke("lrc", "verify", "--code", code_path, "--loc", code_path)
    assert result.exit_code == 1

    result = invoke("lrc", "verify", "--code", tmp_path / "missing.json", "--loc", code_path)
    assert result.exit_code == 2


def test_rep_min():
    result = invoke("rep", "min", "--m", 2, "--d", 2, "--eps", "1/2", "--oracle")

    assert result.exit_code == 0
    data = json.loads(result.output)["result"]
    assert data["b"] == 3
    assert data["oracle"] == 3
    assert data["oracle_agrees"] is True
    assert data["threshold"] == "2/1"
    assert len(data["witness"]["points"]) == 3


def test_rep_min_options():
    assert invoke("rep", "min", "--m", 4, "--d", 2, "--eps", "1/2", "--format", "text").output.strip() == "b=9"
    assert invoke("rep", "min", "--m", 2, "--d", 2, "--eps", "0.5").exit_code == 2

    result = invoke("rep", "min", "--m", 5, "--d", 2, "--eps", "1/2", "--oracle")
    assert result.exit_code == 1
    assert '"budget_exhausted": true' in result.output


def test_rep_min_spec_file(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec = {"format": 1, "kind": "explicit", "shape": [2, 2], "weights": ["2", "1", "1", "1"]}
    spec_path.write_text(json.dumps(spec))

    result = invoke("rep", "min", "--m", 2, "--d", 2, "--eps", "1/2", "--weights", spec_path, "--format", "text")
    assert result.exit_code == 0
    assert result.output.strip() == "b=3"


def test_rep_sweep(tmp_path):
    csv_path = tmp_path / "sweep.csv"
    args = ("--spec", "shell", "--eps", "1/2", "--m", "2,4", "--format", "csv", "--csv-out", csv_path)
    result = invoke("rep", "sweep", *args)

    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines == ["m,b_m,ratio_num,ratio_den,lower_ok,upper_ok", "2,4,1,1,True,True", "4,11,11,16,True,True"]
    assert csv_path.read_text().splitlines() == lines

    assert invoke("rep", "sweep", "--eps", "1/2", "--m", "2,x").exit_code == 2


def test_rep_sweep_csv_table(tmp_path):
    csv_path = tmp_path / "out.csv"
    result = invoke("rep", "sweep", "--spec", "shell", "--eps", "1/2", "--d", 2, "--m", "2,4", "--csv", csv_path)

    assert result.exit_code == 0
    assert [row["b_m"] for row in json.loads(result.output)["result"]["rows"]] == [4, 11]
    assert csv_path.read_text().splitlines()[1:] == ["2,4,1,1,True,True", "4,11,11,16,True,True"]


def test_rep_compose():
    result = invoke("rep", "compose", "--m", 5, "--r", 2, "--eps", "1/2", "--format", "text")

    assert result.exit_code == 0
    assert result.output.strip() == "size=19 bound=32 representative=True"


def test_cyc_mean_and_var():
    assert invoke("cyc", "mean", "--n", 1).output.strip() == "1/1"
    assert invoke("cyc", "mean", "--n", 3).output.strip() == "11/6"
    assert invoke("cyc", "var", "--n", 3).output.strip() == "17/36"
    assert json.loads(invoke("cyc", "mean", "--n", 8, "--json").output)["result"]["mean"] == "761/280"
    assert invoke("cyc", "mean", "--n", 0).exit_code == 1


def test_cyc_moments():
    result = invoke("cyc", "moments", "--n", 3, "--s", 2, "--csv")

    assert result.exit_code == 0
    assert "3,1,11/6" in result.output.splitlines()
    assert "3,2,23/6" in result.output.splitlines()


def test_cyc_moments_json():
    result = invoke("cyc", "moments", "--n", 12, "--s", 4)

    assert result.exit_code == 0
    envelope = json.loads(result.output)
    assert envelope["input"] == {"n": 12, "s": 4}
    table = envelope["result"]
    assert table["n_max"] == 12
    assert table["s_max"] == 4
    assert len(table["values"]) == 48
    assert {"n": 3, "s": 2, "value": "23/6"} in table["values"]

    assert invoke("cyc", "moments", "--n", 3, "--s", 2, "--format", "text").output.splitlines()[-1] == "mu[3][2]=23/6"


def test_cyc_sample():
    result = invoke("cyc", "sample", "--n", 4, "--trials", 1000, "--seed", 1, "--chunk-size", 300)

    assert result.exit_code == 0
    data = json.loads(result.output)["result"]
    assert data["trials"] == 1000
    assert sum(data["count_histogram"]) == 1000
    assert data["exact_mean"] == "25/12"


def test_cyc_sample_settings():
    args = ("cyc", "sample", "--n", 5, "--trials", 900, "--seed", 3, "--chunk-size", 200)

    single = json.loads(invoke(*args).output)["result"]
    threaded = json.loads(invoke(*args, "--workers", 3).output)["result"]
    assert single == threaded

    assert invoke(*args, "--workers", 0).exit_code == 2
    assert invoke("cyc", "sample", "--n", 5, "--trials", 10, "--chunk-size", 0).exit_code == 2


def test_group_entry_points():
    assert CliRunner().invoke(cyc, ["mean", "--n", 2]).output.strip() == "3/2"
    assert CliRunner().invoke(lrc, ["--help"]).exit_code == 0
    assert CliRunner().invoke(rep, ["--help"]).exit_code == 0


def test_out_file(tmp_path):
    out = tmp_path / "report.json"
    result = invoke("cyc", "moments", "--n", 2, "--s", 1, "--out", out)

    assert result.exit_code == 0
    assert result.output == ""
    assert json.loads(out.read_text())["result"]["values"] == [
        {"n": 1, "s": 1, "value": "1/1"},
        {"n": 2, "s": 1, "value": "3/2"},
    ]


def test_reproduce_subset():
    result = invoke("reproduce", "--only", "cyc.moments", "--only", "cyc.closed", "--format", "text")

    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert [line.split()[0] for line in lines] == ["cyc.moments", "cyc.closed-forms"]
    assert all(line.split()[1] == "pass" for line in lines)


def test_reproduce_group_alias():
    result = invoke("reproduce", "--only", "thm3", "--trials", 20000, "--format", "text")

    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert [line.split()[0] for line in lines] == ["cyc.moments", "cyc.closed-forms", "cyc.monte-carlo"]


def test_reproduce_corrupted_golden(tmp_path):
    golden = tmp_path / "golden.json"
    data = {"format": 1, "example": {}, "mean": {"3": "1/1"}, "variance": {}, "moments": {"1,1": "1/1"}}
    golden.write_text(json.dumps(data))

    result = invoke("reproduce", "--only", "golden", "--golden", golden)
    assert result.exit_code == 1
    assert "Failed criteria: golden" in result.output

    assert invoke("reproduce", "--only", "nothing").exit_code == 1
