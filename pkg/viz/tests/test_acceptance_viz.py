"""A9 acceptance: round-trip a real blast snapshot produced by the solver
CLI and render both figure styles from it."""

import re
import shutil
import subprocess
import sys

import numpy as np
import pytest

from mhdviz import reader, render


def naive_vtk_scalars(text: str) -> dict[str, np.ndarray]:
    """Independent flat parse of every SCALARS block (reference values)."""
    out = {}
    lines = text.splitlines()
    i = 0
    n_cells = None
    while i < len(lines):
        if lines[i].startswith("CELL_DATA"):
            n_cells = int(lines[i].split()[1])
        if lines[i].startswith("SCALARS"):
            name = lines[i].split()[1]
            i += 2  # skip LOOKUP_TABLE
            vals = []
            while len(vals) < n_cells:
                vals.extend(float(v) for v in lines[i].split())
                i += 1
            out[name] = np.array(vals)
            continue
        i += 1
    return out


@pytest.fixture(scope="module")
def blast_snapshot(tmp_path_factory):
    if shutil.which("mhdpp") is None:
        pytest.skip("mhdpp CLI not installed")
    out = tmp_path_factory.mktemp("blast")
    proc = subprocess.run(
        ["mhdpp", "run", "--problem", "blast", "--cells", "16x16",
         "--t-end", "2e-4", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    snaps = sorted(out.glob("snap_*.vtk"))
    assert snaps
    return snaps[-1]


def test_a9_round_trip_and_rendering(blast_snapshot, tmp_path):
    snap = reader.read_snapshot(blast_snapshot)
    raw = naive_vtk_scalars(blast_snapshot.read_text())
    nx, ny = snap.shape
    assert (nx, ny) == (16, 16)
    worst = 0.0
    for name, flat in raw.items():
        got = np.ravel(snap.get(name), order="F")
        scale = np.maximum(np.abs(flat), 1e-300)
        finite = np.isfinite(flat)
        worst = max(worst, float(np.max(np.abs(got - flat)[finite] / scale[finite])))
    assert worst <= 1e-15

    contour = tmp_path / "blast_contour.png"
    schlieren = tmp_path / "blast_schlieren.png"
    render.render_contour(snap, "rho", contour)
    render.render_schlieren(snap, "rho", schlieren)
    ok = contour.stat().st_size > 1000 and schlieren.stat().st_size > 1000
    print(f"[A9] {'PASS' if ok else 'FAIL'}: reader worst relative deviation "
          f"{worst:.1e} (<= 1e-15); contour {contour.stat().st_size} bytes, "
          f"schlieren {schlieren.stat().st_size} bytes", flush=True)
    assert ok
