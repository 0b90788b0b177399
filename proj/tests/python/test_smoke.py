import math

import numpy as np
import pytest

import biofilm_pvi as pvi


def test_experiment_names():
    names = pvi.experiment_names()
    assert "ex5_1" in names and "appendix_A2" in names
    assert pvi.Experiment("ex5_1").name == "ex5_1"
    with pytest.raises(ValueError):
        pvi.Experiment("no_such_experiment")


def test_mesh_generation():
    mesh = pvi.Mesh.rectangle((-1, 1), (-1, 1), 4)
    assert mesh.dim == 2
    assert mesh.num_vertices == 25
    assert mesh.num_cells == 32
    assert mesh.measure == pytest.approx(4.0)
    assert mesh.vertices.shape == (25, 2)
    fine = mesh.refine()
    assert fine.num_cells == 128
    again = pvi.Mesh.parse(mesh.to_text())
    assert np.array_equal(again.cells, mesh.cells)


def test_run_ex5_1():
    e = pvi.Experiment("ex5_1")
    t = pvi.run(e)
    s = t.series
    assert len(s["t"]) == 21
    assert s["active_nodes"][-1] > 0
    assert np.all(t.B <= e.upper_bound + 1e-12)
    assert np.all(t.Lambda <= 1e-12)
    inactive = t.B < e.upper_bound - 1e-12
    assert np.all(t.Lambda[inactive] == 0.0)
    mesh = e.build_mesh()
    assert pvi.total_biomass(mesh, t.B) == pytest.approx(s["total_B"][-1])
    assert t.at(0.05) is not None
    assert t.to_csv().startswith("step,t,")


def test_overrides_and_vtk(tmp_path):
    e = pvi.Experiment("ex5_2_i")
    e.final_time = 0.02
    e.sample_times = [0.02]
    t = pvi.run(e)
    assert t.t == pytest.approx(0.02)
    path = tmp_path / "state.vtk"
    pvi.write_vtk(str(path), e.build_mesh(), t.captures[-1])
    assert path.read_text().startswith("# vtk DataFile")


def test_projection_and_orders():
    assert pvi.evans_projection(0.5, 0.0, 0.3) == 0.3
    assert pvi.evans_projection(-1.0, 0.0, 0.3) == 0.0
    assert pvi.observed_order(1.0, 0.25, 0.1, 0.05) == pytest.approx(2.0)


def test_oracle():
    assert pvi.oracle_check(10) == 10
    assert pvi.oracle_check(10, inject_fault=True) < 10


def test_short_convergence_table():
    rows = pvi.convergence("ex5_1", levels=2)
    assert len(rows) == 2
    assert rows[0]["order1"] is None
    assert rows[1]["err1"] < rows[0]["err1"]
    assert math.isfinite(rows[1]["order2"])
