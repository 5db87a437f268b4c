import json

import numpy as np
import pytest

from phtshell import cli
from phtshell.cases import BUILTIN_CASES, CaseSpec, load_case
from phtshell.errors import ConfigurationError
from phtshell.export import export_vtk, threshold
from phtshell.phtspace import Field, PhtSpace, refine
from phtshell.shellgeom import builtin_surface
from phtshell.tmesh import HierTMesh


class TestCases:
    def test_all_load(self):
        assert len(BUILTIN_CASES) == 10
        for name in BUILTIN_CASES:
            c = load_case(name)
            c.load_case()
            c.surface(2)
            for (s, t), _ in c.loads:
                assert 0 <= s <= 1 and 0 <= t <= 1

    def test_case1(self):
        c = load_case("case1")
        assert c.loads == [((0.5, 0.5), (0.0, 0.0, -100.0))]
        assert sorted(c.fixed_points) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_case8(self):
        c = load_case("case8")
        assert sorted(p for p, _ in c.loads) == [(0, 0), (0, 1), (0.5, 0.5), (1, 0), (1, 1)]
        assert sorted(c.fixed_points) == [(0, 0.5), (0.5, 0), (0.5, 1), (1, 0.5)]

    def test_case10(self):
        c = load_case("case10")
        assert len(c.loads) == 16
        assert sorted(-g[2] for _, g in c.loads) == [30.0] * 12 + [100.0] * 4
        assert c.fixed_points == [(0.5, 0.5)]

    def test_line_loads(self):
        c = load_case("case3", line_points=11)
        assert len(c.loads) == 22
        assert sum(g[2] for _, g in c.loads) == pytest.approx(-20.0)

    def test_unknown(self):
        with pytest.raises(ConfigurationError, match="case1"):
            load_case("case11")

    def test_copy_is_independent(self):
        load_case("case1").loads.clear()
        assert load_case("case1").loads

    def test_spec_validation(self):
        with pytest.raises(ConfigurationError):
            CaseSpec("x", "flat_plate", {}, [((1.5, 0.5), (0, 0, -1))], [(0, 0)])
        with pytest.raises(ConfigurationError):
            CaseSpec("x", "klein_bottle")


class TestExport:
    def test_threshold(self):
        assert list(threshold([0.49, 0.5, 0.51])) == [0, 1, 1]

    def test_solid_plate(self, tmp_path):
        surf = builtin_surface("flat_plate", 2, size=1.0)
        sp = refine(PhtSpace(HierTMesh(2, 2)), [0])
        rho = Field(sp, np.ones((sp.dim, 1)))
        a, b = export_vtk(sp, surf, rho, tmp_path / "d.vtk")
        text = a.read_text().splitlines()
        npts = int(next(ln for ln in text if ln.startswith("POINTS")).split()[1])
        assert npts == len(sp.elements) * 25
        i = text.index("SCALARS density double 1") + 2
        assert np.allclose([float(x) for x in text[i:i + npts]], 1.0)
        j = text.index("SCALARS thresholded int 1") + 2
        assert set(text[j:j + npts]) == {"1"}
        assert "CELL_DATA" in a.read_text() and b.exists()

    def test_centre_values_match_element_density(self, tmp_path, rng):
        surf = builtin_surface("flat_plate", 2, size=1.0)
        sp = refine(PhtSpace(HierTMesh(2, 2)), [1])
        rho = Field(sp, rng.random((sp.dim, 1)))
        path, _ = export_vtk(sp, surf, rho, tmp_path / "d.vtk", n=2)
        text = path.read_text().splitlines()
        npts = len(sp.elements) * 9
        i = text.index("SCALARS density double 1") + 2
        dens = np.array([float(x) for x in text[i:i + npts]]).reshape(-1, 9)
        assert np.abs(dens[:, 4] - sp.center_matrix() @ rho.coeffs[:, 0]).max() < 1e-12

    def test_bad_resolution(self, tmp_path):
        sp = PhtSpace(HierTMesh(1, 1))
        with pytest.raises(ValueError):
            export_vtk(sp, builtin_surface("flat_plate", 1), Field(sp, np.ones((16, 1))), tmp_path / "x.vtk", n=0)


def write_config(path, **optimizer):
    opt = {"mode": "tensor-global", "max_iters": 40, "record_timing": False}
    opt.update(optimizer)
    body = "\n".join(f"{k} = {json.dumps(v)}" for k, v in opt.items())
    path.write_text(f"""[case]
name = "case1"
[mesh]
nx = 3
ny = 3
[geometry]
nx = 3
ny = 3
[optimizer]
{body}
[output]
dir = "run"
resolution = 2
""")
    return path


@pytest.fixture
def outroot(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ROOT_ENV, str(tmp_path / "out"))
    return tmp_path / "out"


class TestCli:
    def test_cases(self, capsys):
        assert cli.main(["cases"]) == 0
        assert "case10" in capsys.readouterr().out

    def test_run_converges(self, tmp_path, outroot):
        cfg = write_config(tmp_path / "c.toml")
        assert cli.main(["run", str(cfg)]) == cli.EXIT_OK
        run = outroot / "run"
        rows = (run / "log.csv").read_text().splitlines()
        assert rows[0] == "iter,level,C,V,ch,RCC,count,n_basis,n_elements,seconds" and len(rows) > 1
        assert (run / "final.vtk").exists() and (run / "final_mesh.vtk").exists()
        man = json.loads((run / "manifest.json").read_text())
        assert man["config"]["optimizer"]["mode"] == "tensor-global"
        assert man["result"]["converged"]

    def test_manifest_reproduces(self, tmp_path, outroot):
        cfg = write_config(tmp_path / "c.toml", max_iters=8)
        cli.main(["run", str(cfg)])
        first = json.loads((outroot / "run" / "manifest.json").read_text())
        log1 = (outroot / "run" / "log.csv").read_text()
        assert cli.main(["run", "--seed-manifest", str(outroot / "run" / "manifest.json")]) == cli.EXIT_NOT_CONVERGED
        second = json.loads((outroot / "run" / "manifest.json").read_text())
        assert first["result"]["compliance"] == second["result"]["compliance"]
        assert (outroot / "run" / "log.csv").read_text() == log1

    def test_max_iters_one(self, tmp_path, outroot):
        cfg = write_config(tmp_path / "c.toml", max_iters=1)
        assert cli.main(["run", str(cfg)]) == cli.EXIT_NOT_CONVERGED
        assert len((outroot / "run" / "log.csv").read_text().splitlines()) == 2

    def test_unknown_key(self, tmp_path, outroot, capsys):
        cfg = tmp_path / "bad.toml"
        cfg.write_text("[optimizer]\ntol_cc = 0.1\n")
        assert cli.main(["run", str(cfg)]) == cli.EXIT_CONFIG
        assert "optimizer.tol_cc" in capsys.readouterr().err

    def test_bad_toml(self, tmp_path, outroot):
        cfg = tmp_path / "bad.toml"
        cfg.write_text("[optimizer\n")
        assert cli.main(["run", str(cfg)]) == cli.EXIT_CONFIG

    def test_unwritable_output(self, tmp_path, monkeypatch):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        monkeypatch.setenv(cli.OUTPUT_ROOT_ENV, str(blocker))
        assert cli.main(["run", str(write_config(tmp_path / "c.toml"))]) == cli.EXIT_IO

    def test_flags_override(self, tmp_path, outroot):
        cfg = write_config(tmp_path / "c.toml", max_iters=2)
        cli.main(["run", str(cfg), "--mode", "adaptive", "--tol-ref", "0.15", "--rcc-direction", "below",
                  "--inheritance", "reset"])
        opt = json.loads((outroot / "run" / "manifest.json").read_text())["config"]["optimizer"]
        assert (opt["mode"], opt["tol_ref"], opt["rcc_direction"], opt["inheritance"]) == \
            ("adaptive", 0.15, "below", "reset")

    def test_custom_loads(self, tmp_path, outroot):
        cfg = tmp_path / "c.toml"
        cfg.write_text("""[case]
name = "mine"
loads = [[0.25, 0.5, 0.0, 0.0, -10.0], {cross_lines = 10.0}]
fixed = [[0, 0], [1, 1]]
[mesh]
nx = 2
ny = 2
[optimizer]
max_iters = 1
""")
        config = cli.merge_config(cli.DEFAULTS, cli.read_config(cfg))
        case, surf, run = cli.resolve(config)
        assert len(case.loads) == 1 + 66 and run.nx == 2
        assert cli.main(["run", str(cfg)]) == cli.EXIT_NOT_CONVERGED

    def test_export_verb(self, tmp_path, outroot, capsys):
        cli.main(["run", str(write_config(tmp_path / "c.toml", max_iters=2))])
        out = tmp_path / "x.vtk"
        assert cli.main(["export", str(outroot / "run" / "final.txt"), str(out), "--resolution", "1"]) == 0
        assert out.exists() and (tmp_path / "x_mesh.vtk").exists()

    def test_control_net_geometry(self, tmp_path, outroot):
        from phtshell.phtspace import field_to_text
        surf = builtin_surface("saddle", 2, size=100.0)
        net = tmp_path / "net.txt"
        net.write_text(surf.geometry.space.mesh.dump() + field_to_text(surf.geometry))
        config = cli.merge_config(cli.DEFAULTS, {"geometry": {"surface": str(net)}})
        _, s2, _ = cli.resolve(config)
        pts = np.random.default_rng(0).random((10, 2))
        assert np.allclose(s2(pts), surf(pts))
