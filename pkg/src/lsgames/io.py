"""File formats: matrix/vector CSV, map sidecars, game directories, labeled
dataset CSV, report CSV, and flat key=value config files.

Floats are serialized with 17 significant digits so that a save/load round
trip reproduces every double bit for bit.
"""

import os
import zipfile

import numpy as np

from .maps import LinearReductionMap
from .quadratic import QuadGame2P, ReducedQuadGame2P
from .svm import LabeledDataset

FLOAT_FMT = "%.17g"


class ParseError(ValueError):
    """A file failed to parse; the message names the file and line."""


def _fmt(x) -> str:
    if isinstance(x, bool) or isinstance(x, np.bool_):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % float(x)
    return str(x)


# ---------------------------------------------------------------------------
# Matrices and vectors: plain CSV of reals, one matrix row per line, no header.

def save_matrix_csv(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", encoding="ascii") as fh:
        for row in M:
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")


def load_matrix_csv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(
                    f"{path}:{lineno}: expected {width} values, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise ParseError(f"{path}: file contains no matrix rows")
    return np.asarray(rows)


def save_vector_csv(path, v):
    save_matrix_csv(path, np.asarray(v, dtype=float).reshape(-1, 1))


def load_vector_csv(path) -> np.ndarray:
    return load_matrix_csv(path).ravel()


# ---------------------------------------------------------------------------
# Flat key=value files (map sidecars, game meta, run configs).

def save_keyvalues(path, pairs):
    with open(path, "w", encoding="ascii") as fh:
        for key, value in pairs.items():
            fh.write(f"{key}={_fmt(value)}\n")


def load_keyvalues(path) -> dict:
    out = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip()
            if not key:
                raise ParseError(f"{path}:{lineno}: empty key")
            if key in out:
                raise ParseError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value.strip()
    return out


# ---------------------------------------------------------------------------
# Reduction maps: matrix CSV plus a metadata sidecar next to it.

def save_map(m: LinearReductionMap, path):
    save_matrix_csv(path, m.entries)
    save_keyvalues(
        str(path) + ".meta",
        {"kind": m.kind, "rows": m.rows, "cols": m.cols, "scale": m.scale, "seed": m.seed},
    )


def load_map(path) -> LinearReductionMap:
    entries = load_matrix_csv(path)
    meta = load_keyvalues(str(path) + ".meta")
    rows, cols = int(meta["rows"]), int(meta["cols"])
    if entries.shape != (rows, cols):
        raise ParseError(
            f"{path}: entry matrix is {entries.shape}, sidecar says ({rows}, {cols})"
        )
    entries.setflags(write=False)
    return LinearReductionMap(
        kind=meta["kind"],
        rows=rows,
        cols=cols,
        entries=entries,
        scale=float(meta["scale"]),
        seed=int(meta["seed"]),
    )


# ---------------------------------------------------------------------------
# Quadratic games: a directory (or zip archive) of Q1/Q2/r1/r2 CSVs plus meta.

_GAME_MEMBERS = ("Q1.csv", "Q2.csv", "r1.csv", "r2.csv", "meta")


def save_quad_game(game, path):
    """Write a game to a directory, or to a zip archive if path ends in .zip."""
    payload = {
        "Q1.csv": game.Q1, "Q2.csv": game.Q2,
        "r1.csv": np.asarray(game.r1).reshape(-1, 1),
        "r2.csv": np.asarray(game.r2).reshape(-1, 1),
    }
    meta = {"dim": game.dim, "v1": game.v1, "v2": game.v2}
    if str(path).endswith(".zip"):
        with zipfile.ZipFile(path, "w") as zf:
            for name, M in payload.items():
                lines = "".join(
                    ",".join(FLOAT_FMT % v for v in row) + "\n" for row in np.atleast_2d(M)
                )
                zf.writestr(name, lines)
            zf.writestr("meta", "".join(f"{k}={_fmt(v)}\n" for k, v in meta.items()))
    else:
        os.makedirs(path, exist_ok=True)
        for name, M in payload.items():
            save_matrix_csv(os.path.join(path, name), M)
        save_keyvalues(os.path.join(path, "meta"), meta)


def load_quad_game(path, reduced=False):
    """Load a game saved by save_quad_game; set reduced=True for tilde semantics."""
    if str(path).endswith(".zip"):
        with zipfile.ZipFile(path, "r") as zf:
            tmp = {}
            for name in _GAME_MEMBERS:
                tmp[name] = zf.read(name).decode("ascii")
        parts = {}
        for name in ("Q1.csv", "Q2.csv", "r1.csv", "r2.csv"):
            rows = [
                [float(tok) for tok in line.split(",")]
                for line in tmp[name].splitlines() if line.strip()
            ]
            parts[name] = np.asarray(rows)
        meta = {}
        for line in tmp["meta"].splitlines():
            if line.strip():
                key, _, value = line.partition("=")
                meta[key.strip()] = value.strip()
    else:
        parts = {name: load_matrix_csv(os.path.join(path, name))
                 for name in ("Q1.csv", "Q2.csv", "r1.csv", "r2.csv")}
        meta = load_keyvalues(os.path.join(path, "meta"))
    cls = ReducedQuadGame2P if reduced else QuadGame2P
    return cls(
        Q1=parts["Q1.csv"], Q2=parts["Q2.csv"],
        r1=parts["r1.csv"].ravel(), r2=parts["r2.csv"].ravel(),
        v1=float(meta["v1"]), v2=float(meta["v2"]), dim=int(meta["dim"]),
    )


# ---------------------------------------------------------------------------
# Labeled datasets: header f1,...,fd,label; label column last, values -1/+1.

def save_dataset(data: LabeledDataset, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(f"f{k + 1}" for k in range(data.d)) + ",label\n")
        for row, label in zip(data.X, data.y):
            fh.write(",".join(FLOAT_FMT % v for v in row))
            fh.write(f",{int(label)}\n")


def load_dataset(path) -> LabeledDataset:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(f"{path}: empty file")
    header = [tok.strip() for tok in lines[0].split(",")]
    if len(header) < 2 or header[-1] != "label":
        raise ParseError(f"{path}:1: header must be f1,...,fd,label")
    d = len(header) - 1
    if header[:-1] != [f"f{k + 1}" for k in range(d)]:
        raise ParseError(f"{path}:1: feature columns must be named f1,...,f{d}")
    X, y = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tokens = line.split(",")
        if len(tokens) != d + 1:
            raise ParseError(f"{path}:{lineno}: expected {d + 1} values, got {len(tokens)}")
        try:
            values = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
        if values[-1] not in (-1.0, 1.0):
            raise ParseError(f"{path}:{lineno}: label must be -1 or +1, got {tokens[-1]}")
        X.append(values[:-1])
        y.append(values[-1])
    if not X:
        raise ParseError(f"{path}: no data rows")
    return LabeledDataset(X=np.asarray(X), y=np.asarray(y))


# ---------------------------------------------------------------------------
# Reports: a schema comment line, a header row, then data rows.

REPORT_SCHEMA_VERSION = 1


def write_report(path, command, columns, rows):
    """Write report rows (dicts) in a fixed column order."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# lsgames-report v{REPORT_SCHEMA_VERSION} command={command}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[col]) for col in columns) + "\n")
