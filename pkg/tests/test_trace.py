import json

import pytest

from introimmune.harness import pack_by_name, run_pack
from introimmune.trace import TraceSchemaError, dumps, parse_trace, read_trace, write_trace


def _text(records):
    return "".join(dumps(r) + "\n" for r in records)


@pytest.fixture(scope="module")
def records():
    return run_pack(pack_by_name("wtt-c1-driver"), 8).records


def test_round_trip(tmp_path, records):
    path = tmp_path / "t.jsonl"
    text = write_trace(path, records)
    info, events, fin = read_trace(path)
    assert info == records[0]["payload"]
    assert events == records[1:-1]
    assert fin == records[-1]["payload"]
    assert text == path.read_text()


def test_serialization_is_canonical():
    assert dumps({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'


def _mutate(records, index, change):
    recs = json.loads(json.dumps(records))
    change(recs[index])
    return _text(recs)


@pytest.mark.parametrize("index, change, fragment", [
    (1, lambda r: r.pop("payload"), "exactly the fields"),
    (1, lambda r: r.update(extra=1), "exactly the fields"),
    (1, lambda r: r.update(stage=-2), "natural"),
    (1, lambda r: r.update(kind=7), "kind must be"),
    (1, lambda r: r.update(payload=[]), "payload must be"),
    (0, lambda r: r.update(kind="event"), "first record"),
    (0, lambda r: r["payload"].update(format=99), "unsupported format"),
    (0, lambda r: r["payload"].update(construction="zz"), "unknown construction"),
    (0, lambda r: r["payload"].update(stages=3), "announces 3 stages"),
    (-1, lambda r: r.update(kind="action1"), "last record"),
    (2, lambda r: r.update(kind="C1"), "not a wtt event"),
    (2, lambda r: r.update(stage=5), "out of order"),
])
def test_schema_violations(records, index, change, fragment):
    with pytest.raises(TraceSchemaError, match=fragment):
        parse_trace(_mutate(records, index, change))


def test_line_numbers_and_json_errors(records):
    text = _text(records).replace('"kind":"header"', '"kind":"header",', 1)
    with pytest.raises(TraceSchemaError, match="line 1: not JSON"):
        parse_trace(text)
    with pytest.raises(TraceSchemaError, match="empty"):
        parse_trace("\n\n")
    with pytest.raises(TraceSchemaError, match="line 3"):
        parse_trace(_mutate(records, 2, lambda r: r.update(stage=9)))


def test_unreadable(tmp_path):
    with pytest.raises(TraceSchemaError, match="cannot read"):
        read_trace(tmp_path / "none.jsonl")
