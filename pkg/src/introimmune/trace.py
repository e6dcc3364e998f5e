"""Line-delimited trace records: ``{"stage": int, "kind": str, "payload": {...}}``.

The first record is a header (kind ``header``, stage 0), the last a summary
(kind ``final``). Records are serialized with sorted keys and no spaces so
identical runs give identical bytes.
"""

import json
from pathlib import Path

FORMAT = 1
EVENT_KINDS = {
    "wtt": {"no-action", "action1", "action2"},
    "bs": {"P", "N", "default"},
    "d": {"P", "N", "default"},
    "q": {"C1", "C2", "C3", "C4", "default"},
}


class TraceSchemaError(ValueError):
    pass


def dumps(record) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_trace(path, records):
    text = "".join(dumps(r) + "\n" for r in records)
    Path(path).write_text(text)
    return text


def header(construction, pack, stages, config):
    return {"stage": 0, "kind": "header",
            "payload": {"format": FORMAT, "construction": construction, "pack": pack,
                        "stages": stages, "config": config}}


def final(stages, payload):
    return {"stage": stages, "kind": "final", "payload": payload}


def _check(cond, lineno, message):
    if not cond:
        raise TraceSchemaError(f"line {lineno}: {message}")


def parse_trace(text, source="<trace>"):
    """Validate and split a trace into (header payload, event records, final payload)."""
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as err:
            raise TraceSchemaError(f"{source} line {lineno}: not JSON ({err.msg})") from None
        _check(isinstance(rec, dict) and set(rec) == {"stage", "kind", "payload"}, lineno,
               "record must have exactly the fields stage, kind, payload")
        _check(isinstance(rec["stage"], int) and rec["stage"] >= 0, lineno, "stage must be a natural")
        _check(isinstance(rec["kind"], str), lineno, "kind must be a string")
        _check(isinstance(rec["payload"], dict), lineno, "payload must be an object")
        records.append((lineno, rec))
    _check(records, 1, "empty trace")
    first_line, head = records[0]
    _check(head["kind"] == "header", first_line, "first record must be the header")
    info = head["payload"]
    _check(info.get("format") == FORMAT, first_line, f"unsupported format {info.get('format')!r}")
    construction = info.get("construction")
    _check(construction in EVENT_KINDS, first_line, f"unknown construction {construction!r}")
    last_line, tail = records[-1]
    _check(len(records) >= 2 and tail["kind"] == "final", last_line, "last record must be final")
    events = []
    for lineno, rec in records[1:-1]:
        _check(rec["kind"] in EVENT_KINDS[construction], lineno,
               f"kind {rec['kind']!r} is not a {construction} event")
        _check(rec["stage"] == len(events) + 1, lineno,
               f"stage {rec['stage']} out of order, expected {len(events) + 1}")
        events.append(rec)
    _check(info.get("stages") == len(events), last_line,
           f"header announces {info.get('stages')} stages, trace has {len(events)}")
    return info, events, tail["payload"]


def read_trace(path):
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise TraceSchemaError(f"{path}: cannot read trace ({err.strerror or err})") from None
    return parse_trace(text, str(path))
