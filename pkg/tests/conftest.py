from pathlib import Path

import pytest

from pbdr.benchmark.scenes import resolve_mesh_path

CUBE_OBJ = """\
# axis-aligned cube of half extent {h}
v {m} {m} {m}
v {h} {m} {m}
v {h} {h} {m}
v {m} {h} {m}
v {m} {m} {h}
v {h} {m} {h}
v {h} {h} {h}
v {m} {h} {h}
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 4 8 7 3
f 1 5 8 4
f 2 3 7 6
"""


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="run the full-length physics acceptance runs",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def write_cube(path: Path, half_extent: float = 0.1) -> Path:
    path.write_text(CUBE_OBJ.format(h=half_extent, m=-half_extent))
    return path


@pytest.fixture
def cube_obj(tmp_path: Path) -> Path:
    return write_cube(tmp_path / "cube.obj")


@pytest.fixture
def bunny_mesh() -> Path:
    path = resolve_mesh_path(None)
    if not path.is_file():
        pytest.skip(f"no bunny mesh at {path}, set PBDR_MESH_DIR")
    return path
