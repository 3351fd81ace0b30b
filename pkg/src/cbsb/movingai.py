"""Readers for MovingAI ``.map`` and ``.scen`` benchmark files."""
from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path as FsPath
from typing import Sequence

import numpy as np

from .core import AgentTask, GridMap, Location

FREE_CHARS = ".G"
BLOCKED_CHARS = "@OTSW"


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class OutOfBounds(ValueError):
    pass


def _text(data: bytes | str) -> list[str]:
    if isinstance(data, bytes):
        data = data.decode("ascii")
    return [ln.rstrip() for ln in data.replace("\r\n", "\n").replace("\r", "\n").split("\n")]


def load_map(data: bytes | str) -> GridMap:
    lines = _text(data)
    header = {}
    expected = ("type", "height", "width")
    for idx, key in enumerate(expected):
        if idx >= len(lines):
            raise ParseError(f"missing '{key}' header", idx + 1)
        parts = lines[idx].split()
        if len(parts) != 2 or parts[0] != key:
            raise ParseError(f"expected '{key} <value>', got {lines[idx]!r}", idx + 1)
        header[key] = parts[1]
    if len(lines) < 4 or lines[3].strip() != "map":
        raise ParseError("expected 'map'", 4)
    try:
        height, width = int(header["height"]), int(header["width"])
    except ValueError as exc:
        raise ParseError(f"non-integer dimension: {exc}", 2) from None
    if height < 1 or width < 1:
        raise ParseError("dimensions must be positive", 2)
    rows = lines[4:]
    while rows and not rows[-1]:
        rows.pop()
    if len(rows) != height:
        raise ParseError(f"expected {height} map rows, found {len(rows)}", 5 + min(len(rows), height))
    blocked = np.zeros((height, width), dtype=bool)
    for r, row in enumerate(rows):
        lineno = r + 5
        if len(row) != width:
            raise ParseError(f"row {r} has length {len(row)}, expected {width}", lineno)
        for c, ch in enumerate(row):
            if ch in BLOCKED_CHARS:
                blocked[r, c] = True
            elif ch not in FREE_CHARS:
                raise ParseError(f"unknown cell character {ch!r} in row {r}", lineno)
    return GridMap(width, height, blocked)


@dataclass(frozen=True)
class ScenarioEntry:
    bucket: int
    map_name: str
    map_width: int
    map_height: int
    start: Location  # (row, col)
    target: Location
    reference_length: float


def load_scenario(data: bytes | str, grid: GridMap | None = None) -> list[ScenarioEntry]:
    lines = _text(data)
    if not lines or lines[0].split() != ["version", "1"]:
        raise ParseError("expected 'version 1'", 1)
    entries = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 9:
            raise ParseError(f"expected 9 fields, found {len(fields)}", n)
        try:
            bucket, w, h, sx, sy, gx, gy = (int(fields[i]) for i in (0, 2, 3, 4, 5, 6, 7))
            ref = float(fields[8])
        except ValueError as exc:
            raise ParseError(str(exc), n) from None
        entry = ScenarioEntry(bucket, fields[1], w, h, (sy, sx), (gy, gx), ref)
        if grid is not None:
            for name, loc in (("start", entry.start), ("target", entry.target)):
                if not grid.in_bounds(loc) or not grid.is_free(loc):
                    raise OutOfBounds(f"line {n}: {name} (x={loc[1]}, y={loc[0]}) is off-map or blocked")
        entries.append(entry)
    return entries


def tasks_from_scenario(entries: Sequence[ScenarioEntry], m: int) -> list[AgentTask]:
    """The first ``m`` entries as agent tasks, in file order."""
    if m > len(entries):
        raise ValueError(f"scenario has {len(entries)} entries, {m} requested")
    return [AgentTask(i, e.start, e.target) for i, e in enumerate(entries[:m])]


def read_map(path) -> GridMap:
    return load_map(FsPath(path).read_bytes())


def read_scenario(path, grid: GridMap | None = None) -> list[ScenarioEntry]:
    return load_scenario(FsPath(path).read_bytes(), grid)


def read_instance(map_path, scen_path, m: int) -> tuple[GridMap, list[AgentTask]]:
    grid = read_map(map_path)
    return grid, tasks_from_scenario(read_scenario(scen_path, grid), m)


BENCH_DIR_ENV = "CBSB_BENCH_DIR"


def benchmark_dirs() -> list[FsPath]:
    """Directories searched for benchmark maps: the env override first, then bundled data."""
    dirs = []
    extra = os.environ.get(BENCH_DIR_ENV)
    if extra:
        dirs.extend(FsPath(p) for p in extra.split(os.pathsep) if p)
    dirs.append(FsPath(str(resources.files("cbsb") / "data")))
    return dirs


def find_benchmark(map_name: str) -> tuple[FsPath, list[FsPath]] | None:
    """Locate ``<map_name>.map`` and its scenario files, or None if unavailable."""
    for root in benchmark_dirs():
        for candidate in (root / map_name, root):
            map_file = candidate / f"{map_name}.map"
            if map_file.is_file():
                scens = sorted(candidate.glob(f"{map_name}-*.scen"), key=_scen_order)
                # the "random" scenario family is preferred when both are present
                random = [s for s in scens if "-random-" in s.name]
                return map_file, random or scens
    return None


def _scen_order(p: FsPath):
    stem = p.stem
    tail = stem.rsplit("-", 1)[-1]
    return (stem.rsplit("-", 1)[0], int(tail) if tail.isdigit() else 0, stem)
