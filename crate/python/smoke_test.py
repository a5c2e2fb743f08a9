"""Smoke test for the twistcb_py extension.

Builds the extension with cargo unless TWISTCB_PY_LIB points at a built
shared library, loads it, and exercises each exported entry point.
"""

import importlib.util
import json
import os
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def locate_library() -> pathlib.Path:
    env = os.environ.get("TWISTCB_PY_LIB")
    if env:
        return pathlib.Path(env)
    subprocess.run(
        ["cargo", "build", "--release", "-p", "twistcb-py"],
        cwd=ROOT,
        check=True,
    )
    target = pathlib.Path(os.environ.get("CARGO_TARGET_DIR", ROOT / "target")) / "release"
    for name in ("libtwistcb_py.so", "libtwistcb_py.dylib", "twistcb_py.dll"):
        if (target / name).exists():
            return target / name
    sys.exit(f"no twistcb_py library under {target}")


def load(lib: pathlib.Path):
    tmp = pathlib.Path(tempfile.mkdtemp())
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    dest = tmp / f"twistcb_py{suffix}"
    shutil.copy(lib, dest)
    spec = importlib.util.spec_from_file_location("twistcb_py", dest)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main() -> None:
    tc = load(locate_library())

    a1 = tc.LieAlgebra("A1")
    a2 = tc.LieAlgebra("A2")
    assert (a1.rank, a1.dim, a1.dual_coxeter) == (1, 3, 2), repr(a1)
    assert (a2.rank, a2.dim, a2.dual_coxeter) == (2, 8, 3), repr(a2)
    assert a1.weights(1) == [[0], [1]]
    assert len(a2.weights(2)) == 6

    assert a1.fusion(1, [1], [1]) == [([0], 1)]
    assert a2.fusion(1, [1, 0], [1, 0]) == [([0, 1], 1)]
    assert a2.fusion_rank(1, [1, 0], [1, 0], [1, 0]) == 1
    assert a1.fusion_rank(1, [1], [1], [1]) == 0

    rank, stabilized, _ = a1.coinvariant_rank(1, [[1], [1]], 4)
    assert (rank, stabilized) == (1, True)
    rank, stabilized, _ = a1.coinvariant_rank(1, [[1], [1], [1]], 4)
    assert (rank, stabilized) == (0, True)

    ok, detail = a1.virasoro_check(1, [0], 3)
    assert ok, detail

    graph = {
        "p": 2,
        "vertices": [{"genus": 0}],
        "edges": [[0, 0]],
        "legs": [{"vertex": 0, "label": "a"}],
        "branch": [],
    }
    report = tc.rank_graph(json.dumps(graph), json.dumps({"a": {"weight": [0]}}))
    assert report["rank"] == 2 and report["method"] == "degeneration", report

    try:
        tc.rank_graph(json.dumps(graph), json.dumps({}))
    except ValueError:
        pass
    else:
        raise AssertionError("missing label accepted")

    code, out, _ = tc.run_cli(["weights", "--algebra", "A2", "--level", "1", "--rho", "outer"])
    assert code == 0
    assert [row["orbit"] for row in json.loads(out)] == [0, 1, 1]
    code, _, err = tc.run_cli(["check", "nosuch"])
    assert code == 2 and err

    lines = tc.torsor_suite()
    assert lines and all(ok for _, ok, _ in lines), lines

    print("twistcb_py smoke test: ok")


if __name__ == "__main__":
    main()
