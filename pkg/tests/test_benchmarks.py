import math
from dataclasses import replace

import numpy as np
import numpy.testing as npt
import pytest

from bandfem.benchmarks import (
    TORUS,
    StudyConfig,
    StudyConfigError,
    band_width_study,
    check_manufactured,
    get_case,
    manufactured_residual,
    mean_order,
    run_study,
    torus_u_angles,
)
from bandfem.cli import EXIT_CONFIG, EXIT_OK, emit_report, format_value, main, parse_config_file, read_report
from bandfem.surface_error import CSV_COLUMNS, SurfaceErrorReport


def _reports(n):
    reps = [SurfaceErrorReport(i, 100 * 4**i, 0.1 / 2**i, 1 / 3 / 4**i, 0.7 / 4**i, 0.01 / 2**i, 7 + i) for i in range(n)]
    for r in reps[1:]:
        r.L2_order = r.Cnorm_order = 2.0 + 1e-7 * r.level
    return reps


class TestCases:
    def test_circle(self):
        c = get_case("circle")
        p = np.array([[1.0, 0.0], [0.0, 1.0], [math.cos(0.3), math.sin(0.3)]])
        npt.assert_allclose(c.u(p[:1]), [1.0])
        npt.assert_allclose(c.f(p[:1]), [26.0])
        npt.assert_allclose(c.f(p) / np.where(c.u(p) == 0, 1, c.u(p)), 26.0)
        assert c.d == 0.05

    def test_sphere(self):
        c = get_case("sphere")
        npt.assert_allclose(c.u([[0.0, 1.0, 0.0]]), [-12.0])
        npt.assert_allclose(c.u([[1.0, 0.0, 0.0]]), [0.0], atol=1e-15)
        p = c.surface.sample_band(20, 0.0 + 1e-9, np.random.default_rng(0))
        npt.assert_allclose(c.f(p), 13 * c.u(p))
        # constant along normals
        npt.assert_allclose(c.u(1.07 * p), c.u(p))

    def test_torus(self):
        c = get_case("torus")
        npt.assert_allclose(c.u(TORUS.point(0.0, math.pi / 6)), [math.sqrt(3) / 2])
        tube = np.linspace(-3, 3, 7)
        npt.assert_allclose(torus_u_angles(tube, 0.0), 0.0, atol=1e-15)
        assert (TORUS.major, TORUS.minor, c.d) == (1.0, 0.6, 0.1)

    def test_unknown(self):
        with pytest.raises(StudyConfigError):
            get_case("klein")


class TestOracle:
    @pytest.mark.parametrize("name", ["circle", "sphere", "torus"])
    def test_passes(self, name):
        assert manufactured_residual(get_case(name)) < 1e-6
        check_manufactured(get_case(name))

    def test_rejects_wrong_reaction_term(self):
        # dropping alpha leaves a residual of size max|u|
        case = get_case("torus")
        wrong = replace(case, alpha=lambda p: np.zeros(len(p)))
        assert manufactured_residual(wrong) > 0.5
        with pytest.raises(StudyConfigError):
            check_manufactured(wrong)

    def test_rejects_wrong_source(self):
        case = get_case("sphere")
        wrong = replace(case, f=lambda p: 12.0 * case.u(p))
        with pytest.raises(StudyConfigError):
            check_manufactured(wrong)


class TestStudy:
    def test_single_level(self):
        res = run_study(StudyConfig(case="circle", levels=1))
        assert len(res.reports) == 1 and not res.aborted
        r = res.reports[0]
        assert r.L2_order is None and r.Cnorm_order is None
        assert r.L2 > 0 and r.Cnorm >= r.L2 / math.sqrt(2 * math.pi)

    def test_two_levels_and_header(self):
        res = run_study(StudyConfig(case="circle", levels=2))
        assert res.reports[1].L2_order is not None and res.reports[1].L2_order > 1.5
        head = res.header()
        assert head[0].startswith("case=circle hessian=exact d=0.05")
        assert head[1].startswith("pde:")

    def test_torus_header_records_convention(self):
        res = run_study(StudyConfig(case="torus", levels=1))
        head = "\n".join(res.header())
        assert "f = closed form (= -lap u) + u" in head
        assert "negative K" in head

    def test_bad_config(self):
        with pytest.raises(StudyConfigError):
            StudyConfig(case="circle", hessian="approx").resolve()
        with pytest.raises(StudyConfigError):
            StudyConfig(case="circle", levels=0).resolve()
        with pytest.raises(StudyConfigError):
            StudyConfig(case="circle", tol=2.0).resolve()

    def test_aborts_on_non_convergence(self):
        res = run_study(StudyConfig(case="circle", levels=3, tol=1e-300))
        assert res.aborted and len(res.reports) == 1
        assert not res.reports[0].converged
        assert res.header()[-1].startswith("ABORTED")

    def test_single_width(self):
        reps = band_width_study("circle", [0.05], h=0.04)
        assert len(reps) == 1 and reps[0].L2 > 0

    def test_recovered_shares_mesh(self):
        a = run_study(StudyConfig(case="circle", levels=1))
        b = run_study(StudyConfig(case="circle", levels=1, hessian="recovered"))
        assert a.reports[0].dofs == b.reports[0].dofs and a.reports[0].h == b.reports[0].h

    def test_mean_order(self):
        reps = _reports(4)
        npt.assert_allclose(mean_order(reps, last=2), 2.0, atol=1e-6)
        assert math.isnan(mean_order(reps[:1]))


class TestReport:
    def test_format_value(self):
        assert format_value(None) == ""
        assert format_value(12) == "12"
        assert format_value(1 / 3) == "0.333333"
        assert format_value(float("nan")) == ""

    def test_empty(self, tmp_path):
        path = tmp_path / "r.csv"
        emit_report([], "csv", path)
        assert path.read_text().splitlines() == [",".join(CSV_COLUMNS)]

    def test_rows(self, tmp_path):
        path = tmp_path / "r.csv"
        emit_report(_reports(3), "csv", path, header=["case=test"])
        lines = path.read_text().splitlines()
        assert lines[0] == "# case=test"
        assert lines[1] == "level,dofs,h,L2,L2_order,Cnorm,Cnorm_order,normal_deriv,iters"
        assert len(lines) == 5
        assert lines[2].split(",")[4] == ""

    def test_round_trip(self, tmp_path):
        path = tmp_path / "r.csv"
        reps = _reports(3)
        text = emit_report(reps, "csv", path)
        back = read_report(path)
        for r, row in zip(reps, back):
            for c in CSV_COLUMNS:
                assert format_value(row[c]) == format_value(getattr(r, c))
        emit_report([_from_row(row) for row in back], "csv", tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text() == text

    def test_markdown(self):
        text = emit_report(_reports(2), "md")
        assert text.splitlines()[0].startswith("| level | #d.o.f. | h | L2-norm | Order | C-norm")
        assert len(text.splitlines()) == 4

    def test_bad_format(self):
        with pytest.raises(StudyConfigError):
            emit_report([], "xlsx")


def _from_row(row):
    r = SurfaceErrorReport(row["level"], row["dofs"], row["h"], row["L2"], row["Cnorm"], row["normal_deriv"], row["iters"])
    r.L2_order, r.Cnorm_order = row["L2_order"], row["Cnorm_order"]
    return r


class TestCli:
    def test_run_csv(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["run", "--case", "circle", "--levels", "2", "--out", str(out)]) == EXIT_OK
        rows = read_report(out)
        assert [r["level"] for r in rows] == [0, 1]
        assert rows[0]["L2_order"] is None and rows[1]["L2_order"] > 1.5

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "study.cfg"
        out = tmp_path / "c.md"
        cfg.write_text(f"# circle smoke run\ncase = circle\nlevels = 3\nformat = md\nout = {out}\n")
        assert parse_config_file(cfg)["levels"] == 3
        assert main(["run", "--config", str(cfg), "--levels", "1"]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[-1].startswith("| 0 |") and not any(line.startswith("| 1 |") for line in lines)

    def test_vtk(self, tmp_path):
        out = tmp_path / "c.csv"
        vtk = tmp_path / "u_{level}.vtk"
        assert main(["run", "--case", "circle", "--levels", "1", "--out", str(out), "--vtk", str(vtk)]) == EXIT_OK
        text = (tmp_path / "u_0.vtk").read_text()
        assert "SCALARS u double" in text and "SCALARS phi double" in text

    def test_config_errors(self, tmp_path):
        out = str(tmp_path / "x.csv")
        bad = tmp_path / "bad.cfg"
        bad.write_text("case = circle\ncolour = red\n")
        assert main(["run", "--config", str(bad), "--out", out]) == EXIT_CONFIG
        assert main(["run", "--config", str(tmp_path / "missing.cfg"), "--out", out]) == EXIT_CONFIG
        assert main(["run", "--case", "circle", "--h0", "0.5", "--out", out]) == EXIT_CONFIG
        assert main(["run", "--case", "circle", "--out", str(tmp_path / "no" / "dir.csv"), "--levels", "1"]) == EXIT_CONFIG
        assert main(["run", "--out", out]) == EXIT_CONFIG
        with pytest.raises(SystemExit) as exc:
            main(["run", "--case", "klein", "--out", out])
        assert exc.value.code == EXIT_CONFIG

    def test_solver_failure_exit(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["run", "--case", "circle", "--levels", "2", "--tol", "1e-300", "--out", str(out)]) == 2
        assert "ABORTED" in out.read_text()

    def test_bandwidth(self, tmp_path):
        out = tmp_path / "bw.csv"
        assert main(["bandwidth", "--case", "circle", "--widths", "0.05,0.1", "--h", "0.04", "--out", str(out)]) == EXIT_OK
        assert len(read_report(out)) == 2
        assert main(["bandwidth", "--widths", "a,b", "--out", str(out)]) == EXIT_CONFIG

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            assert main(["run", "--case", "circle", "--levels", "2", "--out", str(p)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
