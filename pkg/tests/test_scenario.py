import numpy as np
import pytest

from creepdam.errors import ConfigError
from creepdam.geometry import Polyline, structured_rect_mesh, write_mesh
from creepdam.material import Coupling
from creepdam.scenario import (BUILTIN, Scenario, ScenarioFactory, boundary_pattern,
                               build_band_damage)

LINE = Polyline([[0.5, 0.5], [1.5, 0.5]])


def scenario(text, tmp_path=None):
    return Scenario.from_text(text, "test", str(tmp_path) if tmp_path else ".")


class TestBand:
    def test_values(self):
        mesh = structured_rect_mesh(2.0, 1.0, 8, 8)
        w = build_band_damage(mesh, LINE, 0.25)
        x, y = mesh.nodes.T
        on_line = (y == 0.5) & (x >= 0.5) & (x <= 1.5)
        assert np.all(w[on_line] == 0.5)
        half = (np.abs(y - 0.5) == 0.125) & (x >= 0.5) & (x <= 1.5)
        np.testing.assert_allclose(w[half], 0.25)
        far = np.abs(y - 0.5) >= 0.25
        assert np.all(w[far] == 0.0)
        assert w.min() >= 0.0 and w.max() <= 0.5

    def test_bad_h(self):
        with pytest.raises(ConfigError):
            build_band_damage(structured_rect_mesh(1, 1, 2, 2), LINE, 0.0)


class TestParse:
    @pytest.mark.parametrize("name", sorted(BUILTIN))
    def test_builtins(self, name):
        prob = Scenario.load(name).to_problem()
        assert prob.omega0.shape == (prob.mesh.n_nodes,)

    def test_band_defaults(self):
        sc = Scenario.load("band")
        prob = sc.to_problem()
        assert prob.mesh.n_nodes == 65 * 33
        assert prob.omega0.max() == 0.5
        assert prob.params.qd == 0.5 and prob.t_end == 20.0

    @pytest.mark.parametrize("text,key", [
        ("[mesh]\nnx = ten\n", "mesh.nx"),
        ("[mesh]\ncolour = red\n", "mesh.colour"),
        ("[solver]\nx = 1\n", "solver"),
        ("[material]\nnu = 0.7\n", "material"),
        ("[material]\ncoupling = loose\n", "material.coupling"),
        ("[initial]\nkind = band\nh = 0.1\n", "initial.polyline"),
        ("[initial]\nkind = band\npolyline = 0 0, 1 1\nh = -1\n", "initial.h"),
        ("[initial]\nkind = file\npath = nowhere.txt\n", "initial.path"),
        ("[mesh]\nkind = file\npath = nowhere.txt\n", "mesh.path"),
        ("[boundary]\nkind = affine\nend = 1 2 3\n", "boundary.end"),
        ("[run]\nt_end = -1\n", "run.t_end"),
        ("[run]\ndt_init = 1\ndt_max = 0.1\n", "run"),
        ("[run]\nt_end = inf\n", "run.t_end"),
        ("[mesh\n", "test"),
    ])
    def test_errors_name_key(self, text, key):
        with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
            scenario(text)

    def test_inline_comments_and_case(self):
        sc = scenario("[material]\nE = 500  # modulus\nCoupling = partly\n")
        prob = sc.to_problem()
        assert prob.params.E == 500 and prob.params.coupling is Coupling.PARTLY

    def test_literal_zero_B(self):
        res = scenario("[material]\nB = 0\n[mesh]\nnx = 4\nny = 2\n[run]\nt_end = 1\n").to_problem().run()
        assert res.termination.value == "ReachedT"

    def test_missing_source(self):
        with pytest.raises(ConfigError, match="no such"):
            Scenario.load("no-such-scenario")

    def test_with_value(self):
        sc = Scenario.load("notch")
        fine = sc.with_value("nx", 32)
        assert fine.values["mesh"]["nx"] == 32 and fine.values["mesh"]["ny"] == 16
        assert sc.with_value("h", 0.05).values["initial"]["h"] == 0.05
        assert sc.with_value("material.m", 3.0).values["material"]["m"] == 3.0
        with pytest.raises(ConfigError):
            sc.with_value("material.zeta", 1)
        with pytest.raises(ConfigError):
            sc.with_value("zeta", 1)

    def test_factory_picklable(self):
        import pickle
        f = pickle.loads(pickle.dumps(ScenarioFactory(Scenario.load("band"), "initial.h")))
        assert f(0.05).omega0.max() == 0.5


class TestFiles:
    def test_mesh_and_damage_files(self, tmp_path):
        mesh = structured_rect_mesh(1.0, 1.0, 3, 3)
        write_mesh(mesh, tmp_path / "m.txt")
        np.savetxt(tmp_path / "w.txt", np.linspace(0, 0.3, mesh.n_nodes))
        sc = scenario("[mesh]\nkind = file\npath = m.txt\n[initial]\nkind = file\npath = w.txt\n",
                      tmp_path)
        prob = sc.to_problem()
        assert prob.mesh == mesh
        np.testing.assert_allclose(prob.omega0, np.linspace(0, 0.3, mesh.n_nodes))

    def test_damage_file_wrong_length(self, tmp_path):
        np.savetxt(tmp_path / "w.txt", [0.1, 0.2])
        sc = scenario("[mesh]\nnx = 2\nny = 2\n[initial]\nkind = file\npath = w.txt\n", tmp_path)
        with pytest.raises(ConfigError, match="initial.path"):
            sc.to_problem()


class TestBoundary:
    mesh = structured_rect_mesh(2.0, 1.0, 4, 2)

    def test_uniaxial_is_affine(self):
        vals = boundary_pattern(self.mesh, "uniaxial", 1e-3, 0.3)
        x = self.mesh.nodes[self.mesh.boundary_nodes]
        np.testing.assert_allclose(vals, np.column_stack([-0.3e-3 * (x[:, 0] - 1.0), 1e-3 * x[:, 1]]))

    def test_grips(self):
        vals = boundary_pattern(self.mesh, "grips", 1e-3, 0.3)
        x = self.mesh.nodes[self.mesh.boundary_nodes]
        assert np.all(vals[:, 0] == 0)
        np.testing.assert_allclose(vals[x[:, 1] == 1.0, 1], 1e-3)
        np.testing.assert_allclose(vals[x[:, 1] == 0.0, 1], 0.0)
        side = (x[:, 0] == 0) | (x[:, 0] == 2)
        np.testing.assert_allclose(vals[side, 1], 1e-3 * x[side, 1])

    def test_ramp(self):
        sc = scenario("[mesh]\nnx = 2\nny = 2\n[boundary]\nstretch = 2e-3\nstretch_start = 0\n"
                      "ramp_time = 1\n")
        sched = sc.to_problem().dirichlet
        np.testing.assert_allclose(sched(0.5), 0.5 * sched(1.0))
        np.testing.assert_array_equal(sched(3.0), sched(1.0))
        assert not np.any(sched(0.0))

    def test_affine(self):
        sc = scenario("[mesh]\nnx = 2\nny = 2\n[boundary]\nkind = affine\nend = 1e-3 0 0 0 2e-3 0\n")
        prob = sc.to_problem()
        x = prob.mesh.nodes[prob.mesh.boundary_nodes]
        np.testing.assert_allclose(prob.dirichlet(0.0), np.column_stack([1e-3 * x[:, 0], 2e-3 * x[:, 1]]))

    def test_body_load(self):
        prob = scenario("[mesh]\nnx = 2\nny = 2\n[boundary]\nbody_load = 0 -1\n").to_problem()
        np.testing.assert_array_equal(prob.load[:, 1], -1.0)
