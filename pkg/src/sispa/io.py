"""File formats: valuations, set cover instances, reduced bidding instances, configs and CSVs.

Valuation files are JSON objects tagged by ``kind``::

    {"kind": "xos", "m": 3, "clauses": [[1, 0, 2], [0, 3, 0]]}
    {"kind": "coverage", "m": 2, "weights": [1.0, 2.5], "edges": [[0], [0, 1]]}
    {"kind": "unit_demand", "m": 4, "value": 8.0}
    {"kind": "additive", "values": [2.0, 1.0]}

Set cover files are plain text: a header line ``k m r`` followed by ``m``
lines of ``r`` element labels in ``1..k``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .hardness import BiddingHardnessInstance, SetCoverInstance
from .valuations import Valuation, valuation_from_dict

TRACE_COLUMNS = ["run_id", "t", "utility", "payment", "won_set", "envy_gap_running", "regret_running"]


def load_valuation(path) -> Valuation:
    with open(path) as fh:
        return valuation_from_dict(json.load(fh))


def save_valuation(val: Valuation, path) -> None:
    write_json(val.to_dict(), path)


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_set_cover(path) -> SetCoverInstance:
    return parse_set_cover(Path(path).read_text())


def parse_set_cover(text: str) -> SetCoverInstance:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or len(lines[0]) != 3:
        raise ValueError("set cover header must be 'k m r'")
    k, m, r = (int(x) for x in lines[0])
    body = lines[1:]
    if len(body) != m:
        raise ValueError(f"header declares {m} sets but {len(body)} set lines follow")
    sets = []
    for j, row in enumerate(body, start=1):
        if len(row) != r:
            raise ValueError(f"set line {j} has {len(row)} elements, expected r={r}")
        elems = [int(x) for x in row]
        if len(set(elems)) != r:
            raise ValueError(f"set line {j} repeats an element")
        sets.append(elems)
    return SetCoverInstance(k, tuple(sets))


def format_set_cover(sc: SetCoverInstance) -> str:
    lines = [f"{sc.k} {sc.m} {sc.r}"]
    lines += [" ".join(str(e) for e in sorted(s)) for s in sc.sets]
    return "\n".join(lines) + "\n"


def write_set_cover(sc: SetCoverInstance, path) -> None:
    Path(path).write_text(format_set_cover(sc))


def load_hardness_instance(path) -> BiddingHardnessInstance:
    with open(path) as fh:
        return BiddingHardnessInstance.from_dict(json.load(fh))


def write_csv(rows, path, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
