import numpy as np
import pytest

from stmesh import meshes
from stmesh.errors import InconsistentNumberingError, MeshFormatError
from stmesh.extrusion import extrude_multi, uniform_levels
from stmesh.io import (
    RunConfig,
    load_config,
    read_any_mesh,
    read_displacement_table,
    read_gmsh,
    read_mesh,
    read_spacetime_mesh,
    write_displacement_table,
    write_mesh,
    write_residuals,
    write_spacetime_mesh,
    write_vtk,
    write_vtk_mesh,
)
from stmesh.mesh import BoundaryClass, BoundaryTag
from stmesh.slicing import slice_mesh
from stmesh.io import write_vtk_slice

SQUARE = """\
# two triangles
dimension 2
nodes 4
0 0 0
1 1 0
2 0 1
3 1 1
elements 2
0 1 2
1 2 3
boundary 1
0 1 RobinIn
"""


def write(tmp_path, text, name="m.mesh"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_read_two_triangle_file(tmp_path):
    mesh = read_mesh(write(tmp_path, SQUARE))
    assert (mesh.num_nodes, mesh.num_elements) == (4, 2)
    assert mesh.tag((0, 1)) == BoundaryTag.ROBIN_IN
    assert mesh.tag((1, 3)) == BoundaryTag.DIRICHLET


@pytest.mark.parametrize("old, new, line", [
    ("1 2 3\n", "1 2 9\n", 10),          # index out of range
    ("3 1 1\n", "2 1 1\n", 7),           # node defined twice
    ("3 1 1\n", "3 0 1\n", 7),           # duplicate coordinates
    ("nodes 4", "nodes x", 3),
    ("0 1 RobinIn", "0 1 Sideways", 12),
    ("0 1 RobinIn", "0 3 RobinIn", 12),  # not a boundary facet
])
def test_parse_errors_carry_line_numbers(tmp_path, old, new, line):
    with pytest.raises(MeshFormatError) as info:
        read_mesh(write(tmp_path, SQUARE.replace(old, new)))
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_truncated_file(tmp_path):
    with pytest.raises(MeshFormatError):
        read_mesh(write(tmp_path, "\n".join(SQUARE.splitlines()[:8])))


def test_checks_on_load(tmp_path):
    bad = write(tmp_path, SQUARE.replace("1 2 3\n", "2 1 3\n"))
    with pytest.raises(InconsistentNumberingError):
        read_mesh(bad)
    assert read_mesh(bad, check=False).num_elements == 2


def test_round_trip_is_exact(tmp_path, rng):
    mesh = meshes.random_delaunay(40, 3, rng)
    mesh = mesh.with_coords(mesh.coords + 1e-7 * rng.normal(size=mesh.coords.shape))
    path = tmp_path / "r.mesh"
    write_mesh(path, mesh)
    back = read_mesh(path, check=False)
    assert np.array_equal(back.coords, mesh.coords)
    assert np.array_equal(back.elements, mesh.elements)


def test_round_trip_keeps_tags(tmp_path):
    mesh = meshes.cylinder(n_rings=2, n_sectors=4, n_layers=2)
    write_mesh(tmp_path / "c.mesh", mesh)
    back = read_mesh(tmp_path / "c.mesh")
    assert {k: v for k, v in back.boundary_tags.items() if v != BoundaryTag.DIRICHLET} == \
        {k: v for k, v in mesh.boundary_tags.items() if v != BoundaryTag.DIRICHLET}


def test_spacetime_round_trip(tmp_path):
    base = meshes.tag_boundary(meshes.unit_square(2), lambda c, n: BoundaryTag.ROBIN_OUT if c[0] > 0.99 else BoundaryTag.DIRICHLET)
    st = extrude_multi(base, uniform_levels(1.0, 3))
    write_spacetime_mesh(tmp_path / "st.mesh", st)
    back = read_any_mesh(tmp_path / "st.mesh")
    assert np.array_equal(back.coords, st.coords)
    assert np.array_equal(back.elements, st.elements)
    assert np.array_equal(back.spatial_node, st.spatial_node)
    assert np.array_equal(back.time_levels, st.time_levels)
    assert list(back.boundary_class) == list(st.boundary_class)
    assert list(back.boundary_tag) == list(st.boundary_tag)
    assert sum(c == BoundaryClass.SIGMAR for c in back.boundary_class) > 0
    with pytest.raises(MeshFormatError):
        read_mesh(tmp_path / "st.mesh")
    assert read_spacetime_mesh(tmp_path / "st.mesh").num_elements == st.num_elements


GMSH = """\
$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
1 1 "RobinOut"
2 2 "fluid"
$EndPhysicalNames
$Nodes
5
10 0 0 0
20 1 0 0
30 0 1 0
40 1 1 0
50 5 5 0
$EndNodes
$Elements
4
1 15 2 0 1 10
2 1 2 1 1 20 40
3 2 2 2 1 10 20 30
4 2 2 2 1 20 30 40
$EndElements
"""


def test_gmsh_import(tmp_path):
    mesh = read_gmsh(write(tmp_path, GMSH, "g.msh"))
    assert mesh.coords.shape == (4, 2)  # unused node dropped, z dropped
    assert mesh.elements.tolist() == [[0, 1, 2], [1, 2, 3]]
    assert mesh.tag((1, 3)) == BoundaryTag.ROBIN_OUT


def test_gmsh_rejects_quadratic_elements(tmp_path):
    text = GMSH.replace("4 2 2 2 1 20 30 40", "4 9 2 2 1 20 30 40 10 20 30")
    with pytest.raises(MeshFormatError) as info:
        read_gmsh(write(tmp_path, text, "g.msh"))
    assert info.value.line == 22


def test_vtk_writer_layout(tmp_path):
    path = tmp_path / "a.vtk"
    write_vtk(path, [[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [5], point_data={"p": [1.0, 2.0, 3.0],
                                                                          "u": [[1, 0], [0, 1], [1, 1]]})
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2:5] == ["ASCII", "DATASET UNSTRUCTURED_GRID", "POINTS 3 double"]
    assert lines[5] == "0.0000000000000000e+00 0.0000000000000000e+00 0.0000000000000000e+00"
    assert "CELLS 1 4" in lines and "CELL_TYPES 1" in lines and "POINT_DATA 3" in lines
    assert "SCALARS p double 1" in lines and "VECTORS u double" in lines
    with pytest.raises(ValueError):
        write_vtk(path, [[0, 0]], [], [], point_data={"p": [1.0, 2.0]})


def test_vtk_output_is_deterministic(tmp_path):
    st = extrude_multi(meshes.unit_cube(2), uniform_levels(1.0, 2))
    for name in ("a.vtk", "b.vtk"):
        write_vtk_slice(tmp_path / name, slice_mesh(st, 0.37, fields={"t": st.coords[:, -1]}))
    assert (tmp_path / "a.vtk").read_bytes() == (tmp_path / "b.vtk").read_bytes()
    write_vtk_mesh(tmp_path / "m.vtk", meshes.unit_square(2))
    assert "CELL_TYPES 8" in (tmp_path / "m.vtk").read_text()


def test_displacement_table_round_trip(tmp_path):
    vals = np.random.default_rng(0).normal(size=(3, 5, 2))
    write_displacement_table(tmp_path / "d.txt", [0.0, 0.5, 1.0], vals)
    tab = read_displacement_table(tmp_path / "d.txt", num_nodes=5)
    assert np.array_equal(tab.values, vals)
    with pytest.raises(MeshFormatError):
        read_displacement_table(tmp_path / "d.txt", num_nodes=6)


def test_residual_csv(tmp_path):
    write_residuals(tmp_path / "r.csv", [1.0, 0.5, 1e-6])
    assert (tmp_path / "r.csv").read_text().splitlines() == [
        "iteration,relative_residual", "0,1", "1,0.5", "2,9.9999999999999995e-07"]


def test_config_parsing(tmp_path):
    (tmp_path / "c.ini").write_text("""\
[mesh]
file = base.mesh
[time]
levels = 0, 0.25, 1.0
[motion]
kind = pump
amplitude = 0.1
z_only = yes
[problem]
kind = pump
[solver]
sigma_u = 80
ilu_levels = 1, 2
[output]
slices = 0.5, 0.75
""")
    cfg = load_config(tmp_path / "c.ini")
    assert cfg.mesh_file == str(tmp_path / "base.mesh")
    assert (cfg.T, cfg.K) == (1.0, 2)
    assert cfg.motion_spec().z_only and cfg.motion_spec().amplitude == 0.1
    sc = cfg.solver_config(sigma_p=0.5)
    assert (sc.sigma_u, sc.sigma_p, sc.ilu_levels) == (80.0, 0.5, (1, 2))
    assert cfg.slices == [0.5, 0.75]


def test_config_validation(tmp_path):
    (tmp_path / "c.ini").write_text("[time]\nT = 1\n[output]\nslices = 2.0\n")
    with pytest.raises(ValueError):
        load_config(tmp_path / "c.ini")
    (tmp_path / "c.ini").write_text("[solver]\nsigma = 1\n")
    with pytest.raises(ValueError):
        load_config(tmp_path / "c.ini")
    with pytest.raises(ValueError):
        RunConfig(K=0)
