from .domain import (
    Aperture,
    BoundaryTag,
    Chart,
    MeridianDomain,
    Point2,
    build_domain,
    map_coords,
    map_point,
    weight_r,
)
from .mesh import (
    Mesh,
    MeshQuality,
    check_conformity,
    generate_mesh,
    mesh_quality,
    rectangle_mesh,
    refine_mesh,
)
from .mesh_io import read_mesh, write_mesh
