"""Smoke test for the hexblur extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/hexblur-*.whl
    python python/smoke.py
"""

import csv
import math
import pathlib

import hexblur

ROOT = pathlib.Path(__file__).resolve().parent.parent


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL {msg}")
    print(f"ok   {msg}")


a = hexblur.AxialCoord(2, -1)
x, y = a.to_cartesian()
check((x, y) == (3.0, 0.0), "axial (2,-1) sits at (3, 0)")
check(hexblur.AxialCoord.from_cartesian(x + 0.2, y - 0.1) == a, "cartesian round trip")
check(hexblur.AxialCoord.from_offset(*a.to_offset()) == a, "offset round trip")
check(all(len(hexblur.ring(n)) == 6 * n for n in range(1, 20)), "ring sizes")
check(abs(hexblur.HEX_TO_SQUARE_APOTHEM_RATIO - 1.0746) < 1e-4, "apothem ratio")

params = hexblur.BlurParams(2.0, 1.0, mode="center_relative")
stencil = hexblur.build_stencil(params)
diag = stencil.weight(hexblur.AxialCoord(1, 0))
check(round(100 * diag, 1) == 51.9, "stencil diagonal weight 51.9%")

with open(ROOT / "data" / "bimodal.csv") as f:
    rows = list(csv.DictReader(f))
xs = [float(r["x"]) for r in rows]
ys = [float(r["y"]) for r in rows]
labels = [r["label"] for r in rows]
grid = hexblur.bin_points(xs, ys, labels=labels, bins_across=40)
check(grid.total_weight() == len(rows), "binning keeps every point")

blurred = hexblur.apply_blur(grid, hexblur.build_stencil(hexblur.BlurParams(2.0, 1.0)))
check(math.isclose(blurred.total_weight(), grid.total_weight(), rel_tol=1e-9), "blur conserves mass")
check(len(blurred) > len(grid), "blur spreads into empty bins")

peak = max(grid.to_dict().items(), key=lambda kv: kv[1])[0]
top = grid.top_labels(hexblur.AxialCoord(*peak), k=1)
check(top and top[0][0] in ("left", "right"), "labels survive binning")

svg = hexblur.render_svg(blurred, colormap="viridis", saturation=2.0)
check(svg.startswith("<?xml") and svg.count("<polygon") == len(blurred), "svg render")

try:
    hexblur.BlurParams(0.0, 1.0)
except ValueError as e:
    check("sigma_x" in str(e), "invalid sigma raises ValueError")
else:
    raise SystemExit("FAIL invalid sigma accepted")

print("smoke test passed")
