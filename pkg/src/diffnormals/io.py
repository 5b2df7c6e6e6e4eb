"""Reading and writing point clouds as XYZ, ASCII PCD and PLY."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cloud import PointCloud
from .errors import CloudIOError, ParseError

FORMATS = ("xyz", "pcd-ascii", "ply")

_SUFFIX_FORMATS = {
    ".xyz": "xyz",
    ".txt": "xyz",
    ".pcd": "pcd-ascii",
    ".ply": "ply",
}

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    try:
        return _SUFFIX_FORMATS[suffix]
    except KeyError:
        raise ValueError(f"cannot infer cloud format from suffix {suffix!r}") from None


def _check_format(fmt: Optional[str], path) -> str:
    fmt = fmt or infer_format(path)
    if fmt not in FORMATS:
        raise ValueError(f"unknown cloud format {fmt!r}; expected one of {FORMATS}")
    return fmt


def _read_bytes(path) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise CloudIOError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _parse_floats(tokens, path, lineno):
    try:
        values = [float(t) for t in tokens]
    except ValueError:
        raise ParseError(f"non-numeric value in {' '.join(tokens)!r}", path, lineno) from None
    if not all(np.isfinite(values)):
        raise ParseError("non-finite value", path, lineno)
    return values


def load_cloud(path, format: Optional[str] = None) -> PointCloud:
    """Load a point cloud, preserving file order.

    ``format`` is one of ``xyz``, ``pcd-ascii`` or ``ply``; when omitted it is
    inferred from the file suffix. Records with NaN/Inf coordinates raise
    :class:`ParseError` naming the offending line (or vertex for binary PLY).
    """
    fmt = _check_format(format, path)
    data = _read_bytes(path)
    if fmt == "xyz":
        return _load_xyz(data, path)
    if fmt == "pcd-ascii":
        return _load_pcd(data, path)
    return _load_ply(data, path)


def _decode(data: bytes, path) -> list[str]:
    try:
        return data.decode("ascii").splitlines()
    except UnicodeDecodeError:
        raise ParseError("file is not ASCII text", path) from None


def _load_xyz(data: bytes, path) -> PointCloud:
    names: Optional[list[str]] = None
    rows = []
    width = None
    for lineno, line in enumerate(_decode(data, path), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            header = stripped[1:].split()
            if names is None and not rows and header[:3] == ["x", "y", "z"]:
                names = header[3:]
            continue
        tokens = stripped.split()
        if len(tokens) < 3:
            raise ParseError(f"expected at least 3 columns, got {len(tokens)}", path, lineno)
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise ParseError(f"expected {width} columns, got {len(tokens)}", path, lineno)
        rows.append(_parse_floats(tokens, path, lineno))
    if not rows:
        return PointCloud(np.empty((0, 3)))
    table = np.array(rows, dtype=np.float64)
    extra = table.shape[1] - 3
    if names is None or len(names) != extra:
        names = [f"field_{i}" for i in range(3, 3 + extra)]
    return PointCloud(table[:, :3], {n: table[:, 3 + i] for i, n in enumerate(names)})


def _load_pcd(data: bytes, path) -> PointCloud:
    lines = _decode(data, path)
    header: dict[str, list[str]] = {}
    data_line = None
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, *values = stripped.split()
        header[key.upper()] = values
        if key.upper() == "DATA":
            data_line = lineno
            break
    if data_line is None:
        raise ParseError("missing DATA line in PCD header", path)
    if header["DATA"] != ["ascii"]:
        raise ParseError(f"only 'DATA ascii' is supported, got {header['DATA']}", path, data_line)
    fields = header.get("FIELDS")
    if not fields or fields[:3] != ["x", "y", "z"]:
        raise ParseError("PCD FIELDS must start with x y z", path)
    counts = header.get("COUNT", ["1"] * len(fields))
    if any(c != "1" for c in counts):
        raise ParseError("PCD fields with COUNT > 1 are not supported", path)
    types = header.get("TYPE", ["F"] * len(fields))
    if len(types) != len(fields) or len(counts) != len(fields):
        raise ParseError("PCD TYPE/COUNT lengths disagree with FIELDS", path)
    declared = header.get("POINTS")
    rows = []
    for lineno in range(data_line + 1, len(lines) + 1):
        stripped = lines[lineno - 1].strip()
        if not stripped:
            continue
        tokens = stripped.split()
        if len(tokens) != len(fields):
            raise ParseError(f"expected {len(fields)} values, got {len(tokens)}", path, lineno)
        rows.append(_parse_floats(tokens, path, lineno))
    if declared is not None and int(declared[0]) != len(rows):
        raise ParseError(f"POINTS declares {declared[0]} records, found {len(rows)}", path)
    table = np.array(rows, dtype=np.float64).reshape(len(rows), len(fields))
    attrs = {}
    for i, (name, kind) in enumerate(zip(fields[3:], types[3:]), start=3):
        col = table[:, i]
        attrs[name] = col.astype(np.int64) if kind in ("I", "U") else col
    return PointCloud(table[:, :3], attrs)


def _load_ply(data: bytes, path) -> PointCloud:
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise ParseError("not a PLY file", path)
    body_start = data.index(b"\n", end) + 1
    header_lines = data[:body_start].decode("ascii").splitlines()
    fmt = None
    elements: list[tuple[str, int, list[tuple[str, str]]]] = []
    for lineno, line in enumerate(header_lines, start=1):
        tokens = line.split()
        if not tokens or tokens[0] in ("ply", "comment", "obj_info", "end_header"):
            continue
        if tokens[0] == "format":
            fmt = tokens[1]
        elif tokens[0] == "element":
            elements.append((tokens[1], int(tokens[2]), []))
        elif tokens[0] == "property":
            if not elements:
                raise ParseError("property before element", path, lineno)
            if tokens[1] == "list":
                if elements[-1][0] == "vertex":
                    raise ParseError("list properties on vertices are not supported", path, lineno)
                elements[-1][2].append(("list", tokens[-1]))
                continue
            if tokens[1] not in _PLY_TYPES:
                raise ParseError(f"unknown PLY type {tokens[1]!r}", path, lineno)
            elements[-1][2].append((tokens[2], _PLY_TYPES[tokens[1]]))
    if fmt not in ("ascii", "binary_little_endian"):
        raise ParseError(f"unsupported PLY format {fmt!r}", path)
    if not elements or elements[0][0] != "vertex":
        raise ParseError("PLY vertex element must come first", path)
    _, count, props = elements[0]
    names = [p[0] for p in props]
    if names[:3] != ["x", "y", "z"]:
        raise ParseError("PLY vertex properties must start with x y z", path)

    if fmt == "ascii":
        lines = data[body_start:].decode("ascii").splitlines()
        first = len(header_lines) + 1
        rows = []
        for k in range(count):
            if k >= len(lines):
                raise ParseError(f"expected {count} vertices, found {k}", path)
            tokens = lines[k].split()
            if len(tokens) != len(props):
                raise ParseError(f"expected {len(props)} values", path, first + k)
            rows.append(_parse_floats(tokens, path, first + k))
        table = np.array(rows, dtype=np.float64).reshape(count, len(props))
        columns = {n: table[:, i] for i, n in enumerate(names)}
        kinds = {n: t for n, t in props}
    else:
        dtype = np.dtype([(n, "<" + t) for n, t in props])
        need = count * dtype.itemsize
        if len(data) - body_start < need:
            raise ParseError("PLY body shorter than declared vertex count", path)
        rec = np.frombuffer(data, dtype=dtype, count=count, offset=body_start)
        columns = {n: rec[n].astype(np.float64) for n in names}
        kinds = dict(props)
    xyz = np.column_stack([columns["x"], columns["y"], columns["z"]]) if count else np.empty((0, 3))
    bad = np.flatnonzero(~np.all(np.isfinite(xyz), axis=1))
    if bad.size:
        raise ParseError(f"vertex {int(bad[0])} has non-finite coordinates", path)
    attrs = {}
    for n in names[3:]:
        col = columns[n]
        attrs[n] = col.astype(np.int64) if kinds[n][0] in "iu" else col
    return PointCloud(xyz, attrs)


def _select_scalars(cloud: PointCloud, scalars: Optional[Sequence[str]]) -> dict[str, np.ndarray]:
    if scalars is None:
        return cloud.attributes
    out = {}
    for name in scalars:
        if name in ("x", "y", "z"):
            raise ValueError(f"attribute name {name!r} collides with a coordinate")
        out[name] = cloud.attribute(name)
    return out


def _is_int(arr: np.ndarray) -> bool:
    return np.issubdtype(arr.dtype, np.integer) or arr.dtype == np.bool_


def _fmt_column(arr: np.ndarray) -> list[str]:
    if _is_int(arr):
        return [str(int(v)) for v in arr]
    return [f"{v:.9g}" for v in arr]


def _ascii_rows(cloud: PointCloud, attrs: dict[str, np.ndarray]) -> list[str]:
    cols = [_fmt_column(cloud.points[:, i]) for i in range(3)]
    cols += [_fmt_column(a) for a in attrs.values()]
    return [" ".join(row) for row in zip(*cols)]


def save_cloud(
    cloud: PointCloud,
    path,
    format: Optional[str] = None,
    scalars: Optional[Sequence[str]] = None,
    *,
    binary: bool = True,
) -> None:
    """Write ``cloud`` with the named scalar attributes (all when ``None``).

    ASCII formats print coordinates with 9 significant digits. PLY is written
    binary little-endian unless ``binary=False``. Output is byte-for-byte
    deterministic for identical inputs.
    """
    fmt = _check_format(format, path)
    attrs = _select_scalars(cloud, scalars)
    if fmt == "xyz":
        lines = ["# " + " ".join(["x", "y", "z", *attrs])]
        payload = ("\n".join(lines + _ascii_rows(cloud, attrs)) + "\n").encode("ascii")
    elif fmt == "pcd-ascii":
        names = ["x", "y", "z", *attrs]
        ints = [False] * 3 + [_is_int(a) for a in attrs.values()]
        n = len(cloud)
        header = [
            "# .PCD v0.7 - Point Cloud Data file format",
            "VERSION 0.7",
            "FIELDS " + " ".join(names),
            "SIZE " + " ".join("4" if i else "8" for i in ints),
            "TYPE " + " ".join("I" if i else "F" for i in ints),
            "COUNT " + " ".join("1" for _ in names),
            f"WIDTH {n}",
            "HEIGHT 1",
            "VIEWPOINT 0 0 0 1 0 0 0",
            f"POINTS {n}",
            "DATA ascii",
        ]
        payload = ("\n".join(header + _ascii_rows(cloud, attrs)) + "\n").encode("ascii")
    else:
        payload = _ply_bytes(cloud, attrs, binary)
    try:
        with open(path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise CloudIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _ply_bytes(cloud: PointCloud, attrs: dict[str, np.ndarray], binary: bool) -> bytes:
    props = [("x", "f8"), ("y", "f8"), ("z", "f8")]
    props += [(n, "i4" if _is_int(a) else "f8") for n, a in attrs.items()]
    ply_name = {"f8": "double", "i4": "int"}
    header = [
        "ply",
        "format " + ("binary_little_endian" if binary else "ascii") + " 1.0",
        f"element vertex {len(cloud)}",
        *(f"property {ply_name[t]} {n}" for n, t in props),
        "end_header",
    ]
    head = ("\n".join(header) + "\n").encode("ascii")
    if not binary:
        return head + ("".join(r + "\n" for r in _ascii_rows(cloud, attrs))).encode("ascii")
    rec = np.empty(len(cloud), dtype=np.dtype([(n, "<" + t) for n, t in props]))
    for i, axis in enumerate("xyz"):
        rec[axis] = cloud.points[:, i]
    for n, a in attrs.items():
        rec[n] = a
    return head + rec.tobytes()


def list_cloud_files(directory) -> list[Path]:
    """Cloud files in ``directory`` with a recognised suffix, sorted by name."""
    d = Path(directory)
    if not d.is_dir():
        raise CloudIOError(f"not a directory: {directory}")
    return sorted(p for p in d.iterdir() if p.suffix.lower() in _SUFFIX_FORMATS)
