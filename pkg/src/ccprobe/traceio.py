"""Trace serialization and plot-point emission.

A trace is the prober's time-ordered record of every segment it saw or
emitted. On disk it is line-delimited JSON, one event per line, with
exactly the keys t_us, dir, kind, seq, len, ack, ip_id. Reading a written
trace gives back equal events; events must be sorted by t_us.
"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import TraceOrderError, TraceParseError

DIRS = frozenset({"tx", "rx"})
KINDS = frozenset({"syn", "synack", "data", "ack", "rst", "fin"})

_FIELDS = ("t_us", "dir", "kind", "seq", "len", "ack", "ip_id")
_INT_FIELDS = ("t_us", "seq", "len", "ack", "ip_id")

PLOT_HEADER = "t_us,y,marker"


@dataclass(frozen=True)
class TraceEvent:
    t_us: int
    dir: str
    kind: str
    seq: int
    len: int
    ack: int
    ip_id: int


def _event_line(event: TraceEvent) -> str:
    return json.dumps(asdict(event), separators=(",", ":"))


def write_trace(trace: list[TraceEvent], sink) -> None:
    """Write one JSON object per event to a file object or path."""
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as fp:
            write_trace(trace, fp)
        return
    for event in trace:
        sink.write(_event_line(event))
        sink.write("\n")


def trace_to_text(trace: list[TraceEvent]) -> str:
    return "".join(_event_line(ev) + "\n" for ev in trace)


def _parse_line(line_no: int, line: str) -> TraceEvent:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(line_no, f"invalid JSON ({exc.msg})") from exc
    if not isinstance(raw, dict):
        raise TraceParseError(line_no, "event is not an object")
    if set(raw) != set(_FIELDS):
        raise TraceParseError(line_no, f"expected exactly the keys {_FIELDS}")
    for key in _INT_FIELDS:
        if type(raw[key]) is not int:
            raise TraceParseError(line_no, f"{key} must be an integer")
        if raw[key] < 0:
            raise TraceParseError(line_no, f"{key} must be nonnegative")
    if raw["dir"] not in DIRS:
        raise TraceParseError(line_no, f"dir must be one of {sorted(DIRS)}")
    if raw["kind"] not in KINDS:
        raise TraceParseError(line_no, f"kind must be one of {sorted(KINDS)}")
    if raw["kind"] == "data" and raw["len"] <= 0:
        raise TraceParseError(line_no, "data events need len > 0")
    if raw["kind"] != "data" and raw["len"] != 0:
        raise TraceParseError(line_no, "non-data events need len == 0")
    return TraceEvent(**raw)


def read_trace(source) -> list[TraceEvent]:
    """Parse a trace from a file object, path, or string of JSONL."""
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    events = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            raise TraceParseError(line_no, "blank line")
        events.append(_parse_line(line_no, line))
    for prev, cur in zip(events, events[1:]):
        if cur.t_us < prev.t_us:
            raise TraceOrderError(
                f"events out of order: t_us {cur.t_us} after {prev.t_us}"
            )
    return events


def read_trace_file(path) -> list[TraceEvent]:
    return read_trace(Path(path))


def emit_plot_points(trace: list[TraceEvent]) -> list[tuple[int, int, str]]:
    """Time/sequence points: received data plots seq+len, sent acks plot ack."""
    points = []
    for event in trace:
        if event.dir == "rx" and event.kind == "data":
            points.append((event.t_us, event.seq + event.len, "packet"))
        elif event.dir == "tx" and event.kind == "ack":
            points.append((event.t_us, event.ack, "ack"))
    return points


def write_plot_points(trace: list[TraceEvent], sink) -> None:
    """Write plot points as CSV with a t_us,y,marker header."""
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as fp:
            write_plot_points(trace, fp)
        return
    sink.write(PLOT_HEADER + "\n")
    for t_us, y, marker in emit_plot_points(trace):
        sink.write(f"{t_us},{y},{marker}\n")
