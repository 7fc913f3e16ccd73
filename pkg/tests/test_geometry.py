import csv
from pathlib import Path

from conftest import write_cube
import numpy as np
import pytest

from pbdr.geometry import (
    EmptyPackingError,
    MeshFormatError,
    TriMesh,
    mesh_inertia,
    mesh_volume,
    pack_box,
    pack_mesh,
    pack_rod,
    point_in_mesh,
    points_in_mesh,
    solid_box_inertia,
)
from pbdr.geometry.mesh import parse_obj


def test_pack_box_default_resolution():
    packing = pack_box((0.1, 0.1, 0.1), 4)

    assert len(packing) == 64
    assert packing.radius == pytest.approx(0.025)
    for axis in range(3):
        np.testing.assert_allclose(
            np.unique(np.round(packing.centers[:, axis], 12)),
            [-0.075, -0.025, 0.025, 0.075],
        )
    assert packing.min_center_distance() >= 2.0 * packing.radius - 1e-12


def test_pack_box_single_sphere():
    packing = pack_box((0.1, 0.1, 0.1), 1)

    assert len(packing) == 1
    np.testing.assert_allclose(packing.centers[0], [0.0, 0.0, 0.0], atol=1e-15)
    assert packing.radius == pytest.approx(0.1)


@pytest.mark.parametrize("n, count", [(3, 27), (10, 1000)])
def test_pack_box_counts(n: int, count: int):
    assert len(pack_box((0.1, 0.1, 0.1), n)) == count


def test_pack_box_rejects_empty_grid():
    with pytest.raises(ValueError):
        pack_box((0.1, 0.1, 0.1), 0)


@pytest.mark.parametrize(
    "length, radius, count", [(0.2, 0.025, 4), (0.05, 0.025, 1), (0.21, 0.025, 4)]
)
def test_pack_rod(length: float, radius: float, count: int):
    packing = pack_rod(length, radius)

    assert len(packing) == count
    np.testing.assert_allclose(packing.centers[:, 1:], 0.0)
    assert packing.centers[:, 0].mean() == pytest.approx(0.0, abs=1e-15)
    if count > 1:
        np.testing.assert_allclose(np.diff(packing.centers[:, 0]), 2.0 * radius)


def test_pack_rod_too_short():
    with pytest.raises(ValueError):
        pack_rod(0.01, 0.025)


def test_parse_obj_fan_triangulates_and_resolves_negative_indices():
    text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\nf -4 -3 -1\n"

    vertices, triangles = parse_obj(text)

    assert len(vertices) == 4
    assert triangles == [(0, 1, 2), (0, 2, 3), (0, 1, 3)]


@pytest.mark.parametrize(
    "text", ["v 0 0 0\n", "v 0 0\nf 1 1 1\n", "v 0 0 0\nv 1 0 0\nf 1 2\n", "v a b c\n"]
)
def test_parse_obj_rejects_malformed_files(text: str):
    with pytest.raises(MeshFormatError):
        parse_obj(text)


def test_mesh_rejects_out_of_range_indices():
    with pytest.raises(MeshFormatError):
        TriMesh(vertices=np.zeros((3, 3)), triangles=np.array([[0, 1, 3]]))


def test_from_obj_records_source(cube_obj: Path):
    mesh = TriMesh.from_obj(cube_obj)

    assert len(mesh.triangles) == 12
    assert mesh.source_path == str(cube_obj)
    assert len(mesh.source_hash) == 64
    low, high = mesh.bounds
    np.testing.assert_allclose(low, [-0.1, -0.1, -0.1])
    np.testing.assert_allclose(high, [0.1, 0.1, 0.1])


def test_point_in_mesh(cube_obj: Path):
    mesh = TriMesh.from_obj(cube_obj)

    assert point_in_mesh((0.0, 0.0, 0.0), mesh)
    assert point_in_mesh((0.05, -0.07, 0.09), mesh)
    assert not point_in_mesh((10.1, 0.0, 0.0), mesh)
    assert not point_in_mesh((0.0, 0.0, -0.3), mesh)


def test_point_on_vertex_is_deterministic(cube_obj: Path):
    mesh = TriMesh.from_obj(cube_obj)

    answers = {point_in_mesh((0.1, 0.1, 0.1), mesh) for _ in range(3)}

    assert len(answers) == 1


def test_batch_inside_test_matches_single_points(cube_obj: Path):
    mesh = TriMesh.from_obj(cube_obj)
    points = np.random.default_rng(1).uniform(-0.15, 0.15, size=(50, 3))

    batch = points_in_mesh(points, mesh)

    assert list(batch) == [point_in_mesh(p, mesh) for p in points]
    expected = np.all(np.abs(points) < 0.1, axis=1)
    assert list(batch) == list(expected)


def test_pack_mesh_unit_cube(tmp_path: Path):
    mesh = TriMesh.from_obj(write_cube(tmp_path / "unit.obj", half_extent=0.5))

    packing = pack_mesh(mesh, 0.25)

    assert len(packing) == 8
    np.testing.assert_allclose(np.abs(packing.centers), 0.25)
    assert packing.source["sha256"] == mesh.source_hash
    assert packing.source["parity_disagreement"] == 0.0


def test_pack_mesh_matches_box_packing(cube_obj: Path):
    packing = pack_mesh(TriMesh.from_obj(cube_obj), 0.025)
    box = pack_box((0.1, 0.1, 0.1), 4)

    assert len(packing) == len(box)
    np.testing.assert_allclose(
        np.sort(packing.centers, axis=0), np.sort(box.centers, axis=0), atol=1e-12
    )


def test_pack_mesh_too_coarse(cube_obj: Path):
    with pytest.raises(EmptyPackingError):
        pack_mesh(TriMesh.from_obj(cube_obj), 0.4)


def test_cube_volume_and_inertia(cube_obj: Path):
    mesh = TriMesh.from_obj(cube_obj)

    com, inertia = mesh_inertia(mesh, 4.0)

    assert mesh_volume(mesh) == pytest.approx(0.008)
    np.testing.assert_allclose(com, 0.0, atol=1e-15)
    np.testing.assert_allclose(inertia, solid_box_inertia(4.0, (0.1, 0.1, 0.1)), atol=1e-12)
    assert inertia[0, 0] == pytest.approx(4.0 * 0.2**2 / 6.0)


def test_packing_csv(tmp_path: Path):
    path = tmp_path / "packing.csv"

    pack_box((0.1, 0.1, 0.1), 2).to_csv(path)

    with open(path) as stream:
        rows = list(csv.reader(stream))
    assert rows[0] == ["cx", "cy", "cz", "radius"]
    assert len(rows) == 9
    assert rows[1] == ["-0.05", "-0.05", "-0.05", "0.05"]


def test_mesh_inertia_is_taken_about_the_center_of_mass(cube_obj: Path):
    mesh = TriMesh.from_obj(cube_obj)
    shift = np.array([0.3, -0.1, 0.2])
    moved = TriMesh(vertices=mesh.vertices + shift, triangles=mesh.triangles)

    _, central = mesh_inertia(mesh, 4.0)
    com, inertia = mesh_inertia(moved, 4.0)

    np.testing.assert_allclose(com, shift, atol=1e-12)
    np.testing.assert_allclose(inertia, central, atol=1e-12)
