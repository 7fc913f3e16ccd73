from pbdr.geometry.mesh import (
    MeshFormatError,
    TriMesh,
    mesh_inertia,
    mesh_volume,
    point_in_mesh,
    points_in_mesh,
    solid_box_inertia,
)
from pbdr.geometry.packing import (
    EmptyPackingError,
    SpherePacking,
    pack_box,
    pack_mesh,
    pack_rod,
)
