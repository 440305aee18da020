import json

import pytest

from dyntree.cli import main
from dyntree.errors import StreamFormatError
from dyntree.streams import (GENERATORS, Stream, StreamHeader, convert_csv, format_stream,
                             generate, parse_stream, read_stream, write_stream)

HEADER = '{"format": "dyntree.stream/1", "d": 1, "label_type": "class"}'


def lines(*recs):
    return [HEADER] + [json.dumps(r) for r in recs]


def test_parse_round_trip(tmp_path):
    st = generate("checkerboard", 300, seed=3)
    p = tmp_path / "s.jsonl"
    write_stream(st, p)
    again = read_stream(p)
    assert again.requests == st.requests
    assert again.header.n_max == st.max_active()
    assert format_stream(again) == p.read_text()


@pytest.mark.parametrize("kind", GENERATORS)
def test_generators_are_seeded_and_valid(kind):
    a = generate(kind, 400, seed=9)
    b = generate(kind, 400, seed=9)
    assert a.requests == b.requests
    assert a.requests != generate(kind, 400, seed=10).requests
    a.final_set()  # every prefix valid, or this raises
    assert (a.header.label_type == "real") == (kind == "regression")


@pytest.mark.parametrize("recs,line,msg", [
    ([{"op": "ins", "x": [1], "y": 0}, {"op": "del", "x": [2], "y": 0}], 3, "absent"),
    ([{"op": "upd", "x": [1], "y": 0}], 2, "op must be"),
    ([{"op": "ins", "x": [1, 2], "y": 0}], 2, "expected 1 features"),
    ([{"op": "ins", "x": [1], "y": 0.5}], 2, "integer"),
    ([{"op": "ins", "x": [1]}], 2, "missing label"),
])
def test_parse_errors_carry_line_numbers(recs, line, msg):
    with pytest.raises(StreamFormatError) as err:
        parse_stream(lines(*recs))
    assert err.value.line == line
    assert msg in str(err.value)


def test_parse_rejects_bad_json_and_header():
    with pytest.raises(StreamFormatError) as err:
        parse_stream([HEADER, "{nope"])
    assert err.value.line == 2
    with pytest.raises(StreamFormatError):
        parse_stream(['{"format": "other", "d": 1}'])
    with pytest.raises(StreamFormatError):
        parse_stream([])


def test_convert_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,label\n0.5,1,0\n1.5,2,1\n")
    st = convert_csv(p, "label")
    assert st.header.d == 2 and len(st.requests) == 2
    assert st.requests[1].example.x == (1.5, 2.0) and st.requests[1].example.y == 1
    assert convert_csv(p).requests == st.requests


# ------------------------------------------------------------------ CLI
def write(tmp_path, st, name="s.jsonl"):
    p = tmp_path / name
    write_stream(st, p)
    return str(p)


def test_run_stream_separable_inserts(tmp_path, capsys):
    src = write(tmp_path, generate("clusters", 2000, seed=1, p_insert=1.0))
    out = tmp_path / "run" / "report.json"
    code = main(["run-stream", "--input", src, "--gain", "gini", "--alpha", "0.3", "--beta", "0.3",
                 "--verify-every", "1", "--report", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["format"] == "dyntree.run/1"
    assert doc["verification"]["checks"] == 2000 and doc["verification"]["violations"] == []
    assert len(doc["per_update_ops"]) == 2000
    assert doc["epsilon"] == pytest.approx(0.003)
    assert (tmp_path / "run" / "report_ops.csv").exists()
    assert (tmp_path / "run" / "report_ops.png").exists()


def test_run_stream_absent_delete_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.jsonl"
    p.write_text("\n".join(lines({"op": "ins", "x": [1], "y": 0},
                                 {"op": "del", "x": [5], "y": 0})) + "\n")
    code = main(["run-stream", "--input", str(p), "--report", str(tmp_path / "r.json")])
    assert code == 2
    assert "line 3" in capsys.readouterr().err


def test_run_stream_corrupted_tau_exit_3(tmp_path):
    src = write(tmp_path, generate("clusters", 300, seed=2))
    out = tmp_path / "r.json"
    code = main(["run-stream", "--input", src, "--tau", "1", "--epsilon", "0.2",
                 "--report", str(out), "--no-plot"])
    assert code == 3
    assert json.loads(out.read_text())["budget_violations"]


def test_run_stream_label_type_mismatch_exit_2(tmp_path):
    src = write(tmp_path, generate("clusters", 50, seed=2))
    assert main(["run-stream", "--input", src, "--gain", "var",
                 "--report", str(tmp_path / "r.json")]) == 2


def test_run_stream_regression(tmp_path):
    src = write(tmp_path, generate("regression", 300, seed=4))
    assert main(["run-stream", "--input", src, "--gain", "var", "--verify-every", "25",
                 "--report", str(tmp_path / "r.json"), "--no-plot"]) == 0


def test_bench_single_size_and_determinism(tmp_path):
    args = ["bench-scaling", "--sizes", "256", "--trials", "1", "--seed", "5",
            "--generators", "hot-leaf,clusters"]
    assert main(args + ["--report", str(tmp_path / "a" / "b.json")]) == 0
    assert main(args + ["--report", str(tmp_path / "c" / "b.json"), "--no-plot"]) == 0
    a = (tmp_path / "a" / "b.json").read_bytes()
    assert a == (tmp_path / "c" / "b.json").read_bytes()
    assert (tmp_path / "a" / "b.csv").read_bytes() == (tmp_path / "c" / "b.csv").read_bytes()
    assert (tmp_path / "a" / "b.png").exists()
    doc = json.loads(a)
    assert [r["ratio"] for r in doc["table"]] == [1.0, 1.0]


def test_bench_bad_args_exit_2(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["bench-scaling", "--sizes", "abc", "--report", str(tmp_path / "x.json")])
    assert err.value.code == 2
    assert main(["bench-scaling", "--sizes", "64", "--generators", "nope",
                 "--report", str(tmp_path / "x.json")]) == 2


def test_build_then_verify(tmp_path):
    src = write(tmp_path, generate("checkerboard", 400, seed=6, p_insert=1.0))
    dump = tmp_path / "tree.json"
    assert main(["build", "--input", src, "--alpha", "0.15", "--dump", str(dump)]) == 0
    assert main(["verify", "--tree", str(dump), "--input", src, "--alpha", "0.3",
                 "--beta", "0.3"]) == 0
    # flip a leaf label so it is no longer a mode
    doc = json.loads(dump.read_text())
    leaf = next(r for r in doc["nodes"] if r["split"] is None)
    leaf["label"] = 99
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["verify", "--tree", str(bad), "--input", src, "--alpha", "0.3",
                 "--beta", "0.3", "--report", str(tmp_path / "v.json")]) == 3
    assert json.loads((tmp_path / "v.json").read_text())["violations"][0]["condition"] == "label"


def test_build_depth_limit(tmp_path):
    src = write(tmp_path, generate("checkerboard", 400, seed=7, p_insert=1.0))
    dump = tmp_path / "t.json"
    assert main(["build", "--input", src, "--alpha", "0.01", "--h-star", "1",
                 "--dump", str(dump)]) == 0
    from dyntree.tree import DecisionTree
    assert DecisionTree.from_json(dump.read_text()).height <= 1


def test_build_rejects_deletes(tmp_path):
    src = write(tmp_path, generate("clusters", 200, seed=8))
    assert main(["build", "--input", src, "--dump", str(tmp_path / "t.json")]) == 2


def test_generate_and_convert_commands(tmp_path):
    out = tmp_path / "g.jsonl"
    assert main(["generate", "--kind", "hot-leaf", "--updates", "100", "--seed", "3",
                 "--output", str(out)]) == 0
    assert len(read_stream(out).requests) == 100
    csvp = tmp_path / "d.csv"
    csvp.write_text("f,y\n1,0\n2,1\n")
    assert main(["convert-csv", "--csv", str(csvp), "--output", str(tmp_path / "c.jsonl")]) == 0
    assert isinstance(read_stream(tmp_path / "c.jsonl"), Stream)
    assert StreamHeader(1).as_dict()["format"] == "dyntree.stream/1"
