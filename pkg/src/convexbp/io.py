"""Text formats: GRID2 images, BSER boundary tables and JSON-lines metadata.

Every float is written with 17 significant digits, so a write/read cycle
reproduces the binary values exactly.
"""
import json

import numpy as np

from .errors import FormatError
from .forward import MeansData, VWaveData, WaveData
from .phantoms import GridImage

GRID2_MAGIC = "GRID2"
BSER_MAGIC = "BSER"
VERSION = "v1"
BSER_KINDS = {"means": MeansData, "wave": WaveData, "vwave": VWaveData}


def _fmt(x):
    return format(float(x), ".17g")


def _row(values):
    return " ".join(map(_fmt, values))


def _floats(tokens, lineno, count=None):
    if count is not None and len(tokens) != count:
        raise FormatError(f"expected {count} values, found {len(tokens)}", line=lineno)
    try:
        vals = np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise FormatError(str(exc), line=lineno) from None
    if not np.all(np.isfinite(vals)):
        raise FormatError("non-finite value", line=lineno)
    return vals


def _int(token, lineno, what, minimum=1):
    try:
        v = int(token)
    except ValueError:
        raise FormatError(f"{what} must be an integer, got {token!r}", line=lineno) from None
    if v < minimum:
        raise FormatError(f"{what} must be >= {minimum}", line=lineno)
    return v


def _data_lines(text):
    """Non-blank lines with their 1-based numbers."""
    return [(k, ln.split()) for k, ln in enumerate(text.splitlines(), 1) if ln.strip()]


def format_grid2(img):
    x0, y0 = img.origin
    dx, dy = img.spacing
    head = f"{GRID2_MAGIC} {VERSION} {img.nx} {img.ny} {_fmt(x0)} {_fmt(y0)} {_fmt(dx)} {_fmt(dy)}\n"
    return head + "".join(_row(r) + "\n" for r in img.values)


def parse_grid2(text):
    lines = _data_lines(text)
    if not lines:
        raise FormatError("empty GRID2 file", line=1)
    k, head = lines[0]
    if len(head) != 8 or head[0] != GRID2_MAGIC or head[1] != VERSION:
        raise FormatError(f"expected '{GRID2_MAGIC} {VERSION} nx ny xmin ymin dx dy'", line=k)
    nx = _int(head[2], k, "nx", 2)
    ny = _int(head[3], k, "ny", 2)
    xmin, ymin, dx, dy = _floats(head[4:], k)
    if not (dx > 0 and dy > 0):
        raise FormatError("dx and dy must be positive", line=k)
    body = lines[1:]
    if len(body) != ny:
        where = body[ny][0] if len(body) > ny else (body[-1][0] + 1 if body else k + 1)
        raise FormatError(f"expected {ny} rows, found {len(body)}", line=where)
    values = np.array([_floats(toks, kk, nx) for kk, toks in body])
    return GridImage(values, (xmin, ymin), (dx, dy))


def format_bser(table):
    n_c, n_s = table.values.shape
    head = (f"{BSER_MAGIC} {VERSION} {table.kind} {n_c} {n_s} "
            f"{_fmt(table.step)} {_fmt(table.extent)}\n")
    centers = "".join(_row(c) + "\n" for c in table.centers)
    return head + centers + "".join(_row(r) + "\n" for r in table.values)


def parse_bser(text):
    lines = _data_lines(text)
    if not lines:
        raise FormatError("empty BSER file", line=1)
    k, head = lines[0]
    if len(head) != 7 or head[0] != BSER_MAGIC or head[1] != VERSION:
        raise FormatError(f"expected '{BSER_MAGIC} {VERSION} kind n_centers n_samples step extent'",
                          line=k)
    if head[2] not in BSER_KINDS:
        raise FormatError(f"unknown kind {head[2]!r}", line=k)
    n_c = _int(head[3], k, "n_centers")
    n_s = _int(head[4], k, "n_samples")
    step, extent = _floats(head[5:], k)
    if not step > 0:
        raise FormatError("step must be positive", line=k)
    if not np.isclose(step * n_s, extent, rtol=1e-12, atol=0):
        raise FormatError("extent differs from n_samples * step", line=k)
    body = lines[1:]
    if len(body) != 2 * n_c:
        where = body[2 * n_c][0] if len(body) > 2 * n_c else (body[-1][0] + 1 if body else k + 1)
        raise FormatError(f"expected {2 * n_c} lines after the header, found {len(body)}",
                          line=where)
    centers = np.array([_floats(t, kk, 2) for kk, t in body[:n_c]])
    values = np.array([_floats(t, kk, n_s) for kk, t in body[n_c:]])
    return BSER_KINDS[head[2]](centers, step, values)


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _read(path):
    with open(path) as fh:
        return fh.read()


def write_grid2(path, img):
    _write(path, format_grid2(img))


def read_grid2(path):
    return parse_grid2(_read(path))


def write_bser(path, table):
    _write(path, format_bser(table))


def read_bser(path):
    return parse_bser(_read(path))


def format_kernel_profiles(cache):
    """One row per cached direction: ``nx ny a0 da lo hi`` then the table values."""
    lines = ["# nx ny a0 da valid_lo valid_hi values...\n"]
    for k in range(cache.n_dirs):
        p = cache.profile(k)
        head = [p.n[0], p.n[1], p.a0, p.da, p.valid_range[0], p.valid_range[1]]
        lines.append(_row(np.concatenate([head, p.values])) + "\n")
    return "".join(lines)


def write_kernel_profiles(path, cache):
    _write(path, format_kernel_profiles(cache))


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def metadata_line(record):
    return json.dumps(record, sort_keys=True, default=_jsonable) + "\n"


def append_metadata(path, record):
    """Append one JSON record to a JSON-lines file."""
    with open(path, "a", newline="\n") as fh:
        fh.write(metadata_line(record))


def read_metadata(path):
    out = []
    for k, line in enumerate(_read(path).splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise FormatError(exc.msg, line=k) from None
    return out


def write_json(path, record):
    _write(path, json.dumps(record, sort_keys=True, indent=2, default=_jsonable) + "\n")
