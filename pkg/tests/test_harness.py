import json
import math

import pytest

from honeycomb_anyons import harness
from honeycomb_anyons.harness import (
    EXIT_FAIL,
    EXIT_OK,
    EXIT_USAGE,
    Check,
    ConfigError,
    emit_plot_scripts,
    fit_loglog,
    load_config,
    main,
    microscopic_gap,
    ray_monotonicity,
)

SMALL = ["--set", "lattice.nx=2", "--set", "lattice.ny=2"]


def test_defaults_and_overrides(tmp_path):
    cfg = load_config()
    assert cfg["gap_sweep"]["n"] == 11 and cfg["seed"] == 0
    path = tmp_path / "c.yaml"
    path.write_text("spectrum:\n  j: 0.12\nseed: 7\n")
    cfg = load_config(str(path), ["spectrum.k=40", "transport.times=[1, 2]"])
    assert cfg["spectrum"]["j"] == 0.12 and cfg["spectrum"]["k"] == 40
    assert cfg["seed"] == 7 and cfg["transport"]["times"] == [1, 2]
    # untouched defaults survive
    assert cfg["spectrum"]["jz"] == 1.0
    assert load_config()["seed"] == 0


@pytest.mark.parametrize("text,over", [
    ("bogus: 1\n", []),
    ("spectrum: 3\n", []),
    ("- a\n- b\n", []),
    ("", ["spectrum.nope=1"]),
    ("", ["spectrum.j"]),
])
def test_bad_config_raises(tmp_path, text, over):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(str(path), over)


def test_missing_config_file_exits_2(tmp_path):
    assert main(["anyons", "--config", str(tmp_path / "none.yaml"), "--out", str(tmp_path)]) == EXIT_USAGE


def test_unknown_key_exits_2(tmp_path):
    assert main(["spectrum", "--set", "spectrum.zz=1", "--out", str(tmp_path)]) == EXIT_USAGE


def test_bad_subcommand_exits_2(capsys):
    assert main(["nonsense"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_help_shows_defaults(capsys):
    assert main(["spectrum", "--help"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "gap_sweep:" in out and "cluster_tol" in out


def test_check_line():
    assert Check("a", True, 1.5, "> 1").line() == "[PASS] a: 1.5 (> 1)"
    assert Check("b", 0, 2, "== 1").line().startswith("[FAIL]")


def test_ray_monotonicity():
    grid = {(0, 0): 2.0, (1, 0): 1.0, (2, 0): 1.5, (1, 1): 0.5, (0, 1): 1.0, (0, 2): 0.9,
            (2, 2): 0.1, (2, 1): 0.3}
    flags = ray_monotonicity(grid, 4, 1e-9)
    assert flags[(0, 0)] and flags[(1, 0)] and flags[(1, 1)] and flags[(0, 2)]
    assert flags[(2, 0)] is False
    # (2, 1) has primitive direction (2, 1) so its predecessor is the origin
    assert flags[(2, 1)] is True
    # outside the triangle a + b <= n - 1
    assert (2, 2) not in flags


def test_fit_loglog():
    x = [0.05, 0.1, 0.2]
    slope, icpt = fit_loglog(x, [3 * v ** 4 for v in x])
    assert slope == pytest.approx(4) and icpt == pytest.approx(math.log(3))


def test_microscopic_gap_decoupled():
    out = microscopic_gap(2, 2, 0.0, 0.0, 1.0, harness.DEFAULTS["solver"])
    assert out["multiplicity"] == 16 and out["gap"] == pytest.approx(2.0)
    assert out["converged"] and out["error"] == ""


def test_gap_sweep_cli_and_reproducible(tmp_path, capsys):
    args = ["gap-sweep", *SMALL, "--set", "gap_sweep.n=3", "--set", "gap_sweep.max=0.4"]
    code = main([*args, "--out", str(tmp_path / "a")])
    out = capsys.readouterr().out
    assert code in (EXIT_OK, EXIT_FAIL)
    assert out.count("[PASS]") + out.count("[FAIL]") == 5
    assert main([*args, "--out", str(tmp_path / "b")]) == code
    a = (tmp_path / "a" / "gap_sweep.csv").read_bytes()
    assert a == (tmp_path / "b" / "gap_sweep.csv").read_bytes()
    lines = a.decode().splitlines()
    assert lines[0] == "# schema: gap-sweep v1" and len(lines) == 2 + 9
    summary = json.loads((tmp_path / "a" / "gap_sweep_summary.json").read_text())
    assert summary["experiment"] == "gap_sweep"
    assert (tmp_path / "a" / "gap-sweep_config.yaml").exists()


def test_gap_scaling_rejects_large_j(tmp_path):
    assert main(["gap-scaling", "--set", "gap_scaling.js=[0.5]", "--out", str(tmp_path)]) == EXIT_USAGE


def test_spectrum_cli(tmp_path, capsys):
    code = main(["spectrum", *SMALL, "--set", "spectrum.k=12", "--out", str(tmp_path)])
    assert code in (EXIT_OK, EXIT_FAIL)
    s = json.loads((tmp_path / "spectrum_summary.json").read_text())
    names = [c["name"] for c in s["checks"]]
    assert "levels above ground" in names and "converged" in names
    assert "vacuum" in s["flux_centroids"]
    assert (tmp_path / "spectrum.csv").read_text().startswith("# schema:")


def test_anyons_cli_passes(tmp_path, capsys):
    assert main(["anyons", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and out.count("[PASS]") >= 10


def test_anyons_rejects_small_lattice(tmp_path):
    assert main(["anyons", "--set", "anyons.nx=4", "--out", str(tmp_path)]) == EXIT_USAGE


def test_transport_cli_short(tmp_path, capsys):
    code = main(["transport", "--set", "transport.times=[1.0, 4.0]", "--set", "transport.steps=20",
                 "--set", "transport.threshold=0.0", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert "[PASS] zero-hop fidelity" in out and "[PASS] norm drift" in out
    assert code in (EXIT_OK, EXIT_FAIL)
    assert (tmp_path / "transport_T1.csv").exists() and (tmp_path / "transport_T4.csv").exists()
    assert (tmp_path / "transport_fidelity.csv").read_text().splitlines()[0] == "# schema: transport-fidelity v1"


def test_transport_rejects_bad_route(tmp_path):
    assert main(["transport", "--set", "transport.waypoints=[0, 1]", "--out", str(tmp_path)]) == EXIT_USAGE


def test_plot_scripts(tmp_path):
    data = tmp_path / "gap_scaling.csv"
    data.write_text("# schema: gap-scaling v1\nJ,gap,perturbative\n0.1,1,1\n")
    out = tmp_path / "plots"
    out.mkdir()
    (script,) = emit_plot_scripts([str(data)], str(out))
    text = open(script).read()
    assert "../gap_scaling.csv" in text and "savefig" in text
    compile(text, script, "exec")
    with pytest.raises(FileNotFoundError):
        emit_plot_scripts([str(tmp_path / "missing.csv")])
    with pytest.raises(FileNotFoundError):
        emit_plot_scripts([])
    other = tmp_path / "other.csv"
    other.write_text("x\n")
    with pytest.raises(ValueError):
        emit_plot_scripts([str(other)])


def test_plots_cli(tmp_path, capsys):
    assert main(["plots", "--out", str(tmp_path)]) == EXIT_USAGE  # nothing to plot yet
    assert main(["plots", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == EXIT_USAGE
    (tmp_path / "spectrum.csv").write_text("# schema\njx\n")
    assert main(["plots", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "plot_spectrum.py").exists()
    (tmp_path / "weird.csv").write_text("x\n")
    assert main(["plots", str(tmp_path / "weird.csv"), "--out", str(tmp_path)]) == EXIT_USAGE
