import json
import math

import numpy as np
import pytest

import specx


def test_version():
    assert specx.__version__ == "0.1.0"


def test_sphere_spectrum():
    mesh = specx.sphere_mesh(3)
    assert mesh.euler_characteristic == 2
    spec = specx.laplace_eigs(mesh, 4)
    assert spec.values[0] == pytest.approx(0.0, abs=1e-8)
    assert spec.values[1] == pytest.approx(2.0, rel=0.02)
    assert spec.multiplicity(1) == 3
    assert spec.normalized()[1] == pytest.approx(8 * math.pi, rel=0.02)


def test_mesh_round_trip_from_arrays():
    mesh = specx.sphere_mesh(1)
    copy = specx.TriMesh(mesh.vertices, mesh.triangles)
    assert copy.num_vertices == mesh.num_vertices
    np.testing.assert_allclose(specx.vertex_areas(copy), specx.vertex_areas(mesh))


def test_bad_mesh_raises():
    v = np.eye(3)
    with pytest.raises(specx.TopologyError):
        specx.TriMesh(v, np.array([[0, 1, 1]], dtype=np.int32))
    flat = specx.TriMesh(np.zeros((3, 3)), np.array([[0, 1, 2]], dtype=np.int32))
    with pytest.raises(specx.SpecxError):
        specx.laplace_eigs(flat, 2)


def test_torus_and_disk():
    torus = specx.torus_mesh(1j, 32)
    assert torus.is_periodic
    assert specx.laplace_eigs(torus, 5).normalized()[1] == pytest.approx(4 * math.pi**2, rel=0.02)
    disk = specx.disk_mesh(10)
    sigma = specx.steklov_eigs(disk, 2).values[1]
    assert specx.normalized_steklov(sigma, disk) == pytest.approx(2 * math.pi, rel=0.02)


def test_gl_gradient_matches_difference():
    mesh = specx.sphere_mesh(1)
    rng = np.random.default_rng(3)
    u = rng.normal(size=(mesh.num_vertices, 3))
    v = rng.normal(size=u.shape)
    h = 1e-6
    fd = (specx.gl_energy(mesh, u + h * v, 0.2) - specx.gl_energy(mesh, u - h * v, 0.2)) / (2 * h)
    assert np.sum(specx.gl_gradient(mesh, u, 0.2) * v) == pytest.approx(fd, rel=1e-6)


def test_minmax_and_index():
    mesh = specx.sphere_mesh(2)
    phi = specx.identity_map(mesh)
    rep = specx.minmax_upper(mesh, phi, eps=0.2, grid=5)
    assert rep.sup_energy == pytest.approx(4 * math.pi, rel=0.05)
    si = specx.spectral_index(mesh, phi)
    assert (si.ind_S, si.nul_S) == (1, 3)
    law = specx.composition_law(mesh, phi, 3)
    assert law.equal


def test_cli(tmp_path):
    code, out, err = specx.run_cli(["eigs", "--surface", "sphere", "--subdiv", "2", "--out", str(tmp_path)])
    assert code == 0, err
    doc = json.loads((tmp_path / "eigs.json").read_text())
    assert doc["version"] == "0.1.0"
    code, _, _ = specx.run_cli(["eigs", "--surface", "sphere", "--res", "8"])
    assert code == 2
