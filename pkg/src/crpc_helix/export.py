"""Writers for meshes, profiles, sections, polynomials and reports.

Every number goes through ``format_float`` and every file is written to a
temporary sibling and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from collections.abc import Callable, Iterable
from pathlib import Path
from typing import TextIO

import numpy as np

from crpc_helix.planar import PlanarProfile
from crpc_helix.profile import GluedProfile
from crpc_helix.surface import SurfaceMesh, helical_motion
from crpc_helix.utils import format_float as ff

PROFILE_HEADER = ("s", "t", "g", "x", "y", "z", "branch")
PLANAR_HEADER = ("s", "u", "z", "piece")


def atomic_write(path: str | Path, writer: Callable[[TextIO], None]) -> Path:
    """Run ``writer`` against a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(
        mode="w", dir=path.parent, prefix=f".{path.name}.", suffix=".tmp", delete=False, newline=""
    ) as tmp:
        tmp_path = tmp.name
        try:
            writer(tmp)
        except BaseException:
            tmp.close()
            os.unlink(tmp_path)
            raise
    os.replace(tmp_path, path)
    return path


def _render(writer: Callable[[TextIO], None]) -> str:
    buf = io.StringIO(newline="")
    writer(buf)
    return buf.getvalue()


# ── OBJ ──────────────────────────────────────────────────────────────────


def dump_obj(mesh: SurfaceMesh, fh: TextIO, comments: Iterable[str] = ()) -> None:
    """v / vn / f records; faces touching a singular vertex carry no normals."""
    for line in comments:
        fh.write(f"# {line}\n")
    for x, y, z in mesh.vertices:
        fh.write(f"v {ff(x)} {ff(y)} {ff(z)}\n")

    normal_index = np.zeros(mesh.vertex_count, dtype=np.int64)
    count = 0
    for i, (normal, singular) in enumerate(zip(mesh.normals, mesh.singular_flags)):
        if singular:
            continue
        count += 1
        normal_index[i] = count
        fh.write(f"vn {ff(normal[0])} {ff(normal[1])} {ff(normal[2])}\n")

    for face in mesh.faces:
        if all(normal_index[i] for i in face):
            parts = [f"{i + 1}//{normal_index[i]}" for i in face]
        else:
            parts = [str(i + 1) for i in face]
        fh.write(f"f {' '.join(parts)}\n")


def dump_polyline_obj(points: np.ndarray, fh: TextIO, comments: Iterable[str] = ()) -> None:
    for line in comments:
        fh.write(f"# {line}\n")
    for x, y, z in points:
        fh.write(f"v {ff(x)} {ff(y)} {ff(z)}\n")
    fh.write("l " + " ".join(str(i + 1) for i in range(len(points))) + "\n")


def write_obj(path: str | Path, mesh: SurfaceMesh, comments: Iterable[str] = ()) -> Path:
    return atomic_write(path, lambda fh: dump_obj(mesh, fh, comments))


def write_polyline_obj(path: str | Path, points: np.ndarray, comments: Iterable[str] = ()) -> Path:
    return atomic_write(path, lambda fh: dump_polyline_obj(points, fh, comments))


# ── CSV ──────────────────────────────────────────────────────────────────


def profile_rows(profile: GluedProfile, t_values: Iterable[float]) -> list[tuple]:
    """One row per signed t: s, t, g, x, y, z, branch."""
    rows = []
    for t in t_values:
        t = float(t)
        x, y, z = profile.point(t)
        branch = "X0" if t >= 0 else "X1"
        rows.append((profile.s_of_t(t), t, y, x, y, z, branch))
    return rows


def dump_profile_csv(rows: Iterable[tuple], fh: TextIO) -> None:
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(PROFILE_HEADER)
    for *numbers, branch in rows:
        out.writerow([ff(n) for n in numbers] + [branch])


def write_profile_csv(path: str | Path, rows: Iterable[tuple]) -> Path:
    rows = list(rows)
    return atomic_write(path, lambda fh: dump_profile_csv(rows, fh))


def read_profile_csv(path: str | Path) -> list[tuple]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            (float(r["s"]), float(r["t"]), float(r["g"]), float(r["x"]), float(r["y"]), float(r["z"]), r["branch"])
            for r in reader
        ]


def mesh_vertices_from_rows(
    rows: list[tuple],
    v_values: np.ndarray,
    pitch: float = 0.5,
    mirror: bool = False,
) -> np.ndarray:
    """Re-sweep profile rows into the n_v x n_t vertex array of ``sample_mesh``."""
    columns = [2.0 * pitch * helical_motion(v_values, (x, y, z)) for _, _, _, x, y, z, _ in rows]
    vertices = np.stack(columns, axis=1).reshape(-1, 3)
    if mirror:
        vertices[:, 1] = -vertices[:, 1]
    return vertices


def dump_planar_csv(section: PlanarProfile, fh: TextIO) -> None:
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(PLANAR_HEADER)
    for s, u, z, piece in section.rows():
        out.writerow([ff(s), ff(u), ff(z), piece])


def write_planar_csv(path: str | Path, section: PlanarProfile) -> Path:
    return atomic_write(path, lambda fh: dump_planar_csv(section, fh))


# ── SVG ──────────────────────────────────────────────────────────────────


def dump_planar_svg(section: PlanarProfile, fh: TextIO, unit: float = 100.0, margin: float = 10.0) -> None:
    """One polyline; z points up, so it is flipped into SVG's y-down frame."""
    u = section.points[:, 0] * unit
    z = -section.points[:, 1] * unit
    min_u, min_z = float(u.min()), float(z.min())
    width = float(u.max()) - min_u + 2 * margin
    height = float(z.max()) - min_z + 2 * margin
    coords = " ".join(f"{ff(a - min_u + margin)},{ff(b - min_z + margin)}" for a, b in zip(u, z))
    fh.write(
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{ff(width)}" height="{ff(height)}" viewBox="0 0 {ff(width)} {ff(height)}">\n'
    )
    fh.write(f'  <polyline fill="none" stroke="black" stroke-width="1" points="{coords}"/>\n')
    fh.write("</svg>\n")


def write_planar_svg(path: str | Path, section: PlanarProfile, unit: float = 100.0) -> Path:
    return atomic_write(path, lambda fh: dump_planar_svg(section, fh, unit))


# ── JSON and text ────────────────────────────────────────────────────────


def dumps_json(data: dict) -> str:
    """Sorted keys, shortest float repr, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_json(path: str | Path, data: dict) -> Path:
    text = dumps_json(data)
    return atomic_write(path, lambda fh: fh.write(text))


def write_text(path: str | Path, text: str) -> Path:
    if not text.endswith("\n"):
        text += "\n"
    return atomic_write(path, lambda fh: fh.write(text))


def render_obj(mesh: SurfaceMesh, comments: Iterable[str] = ()) -> str:
    return _render(lambda fh: dump_obj(mesh, fh, comments))
