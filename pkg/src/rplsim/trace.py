"""Line-delimited trace files: tab-separated (t, node, kind, details...).

The in-memory trace is a list of tuples of ints and short strings, appended
in execution order.  Writing then re-reading a trace reproduces the tuples
exactly (ints stay ints), so metrics recomputed from a file match the live
run.
"""

from __future__ import annotations


def write_trace(trace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in trace:
            fh.write("\t".join(str(fieldval) for fieldval in rec))
            fh.write("\n")


def _parse_field(token: str):
    try:
        return int(token)
    except ValueError:
        return token


def read_trace(path) -> list[tuple]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            out.append(tuple(_parse_field(tok) for tok in line.split("\t")))
    return out
