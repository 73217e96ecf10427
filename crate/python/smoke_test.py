"""Smoke test for the pylambda_surfaces extension module.

Build first:  cargo build --release -p lambda-surfaces-py
Then run:     python3 python/smoke_test.py
"""

import importlib
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    try:
        return importlib.import_module("pylambda_surfaces")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libpylambda_surfaces.so"
        if lib.exists():
            tmp = Path(tempfile.mkdtemp())
            shutil.copy(lib, tmp / "pylambda_surfaces.so")
            sys.path.insert(0, str(tmp))
            return importlib.import_module("pylambda_surfaces")
    sys.exit("pylambda_surfaces not built; run: cargo build --release -p lambda-surfaces-py")


def main():
    ls = load()

    p = ls.Params(2, -1.0)
    assert p.n == 2 and p.lambda_ == -1.0
    assert abs(p.sphere_radius - 2.0) < 1e-15
    assert abs(p.cylinder_radius - (1 + math.sqrt(5)) / 2) < 1e-15
    assert not p.in_theorem_range()

    try:
        ls.Params(1, 0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("n = 1 must be rejected")

    sphere = ls.shoot(p, 2.0)
    assert sphere["quadrant"] == "on_axis", sphere
    assert ls.shoot(p, 1.05)["quadrant"] == "first"
    assert ls.shoot(p, 1.9)["quadrant"] == "second"

    sc = ls.scan(p, 1.1, 1.9, 41)
    assert len(sc["outcomes"]) == 41 and len(sc["brackets"]) == 1

    root = ls.find_root(p, 1.2, 1.4)
    assert abs(root["x_hat"] - 1.31) <= 0.02, root

    summary, profiles = ls.solve(p)
    assert len(summary["roots"]) == 1 and summary["roots"][0]["certified"]
    assert len(profiles) == 1 and profiles[0]["samples"]

    rep = ls.verify_bounds(ls.Params(2, -0.5), 1e-3)
    assert rep["lemma31_ok"] and rep["lemma32_ok"]

    q = ls.Params(3, -0.5)
    pl = ls.plane_linearization(q)
    assert abs(pl["w_xi_0"] + 1 / 6) < 1e-8
    sp = ls.sphere_linearization(q)
    assert sp["w_end"] < 0 and sp["wp_end"] < 0
    d1, d2, d3 = ls.endpoint_derivatives(ls.Params(2, 0.0))
    assert abs(d1 - 2) < 1e-14 and abs(d2 - 1) < 1e-14 and abs(d3 + 1 / 3) < 1e-14
    assert ls.finite_difference_check(q, 1e-5, "sphere") < 1e-6

    obj = ls.mesh_obj(p, 2.0, 16)
    assert obj.startswith("v ") or "\nv " in obj

    print("pylambda_surfaces smoke test: OK")
    print(f"  n=2 lambda=-1 root x_hat = {root['x_hat']:.6f}")


if __name__ == "__main__":
    main()
