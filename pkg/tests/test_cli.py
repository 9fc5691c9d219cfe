import csv
import json
import os
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from zeffrg import __version__
from zeffrg.cli import (FLOW_COLUMNS, ORACLE_COLUMNS, QUADRATURE_COLUMNS, SHELL_COLUMNS,
                        ZEFF_COLUMNS, main, run)
from zeffrg.config import ConfigError, config_from_dict, parse_config, serialize_config

DEMO_CONFIG = Path(__file__).resolve().parents[1] / "demos" / "configs" / "comparison.yaml"

MINIMAL = """\
model:
  z: {polynomial: [1.0]}
  v: {named: harmonic}
grid: {phi_min: -1.0, phi_max: 1.0, n: 11}
methods: [derivative-expansion]
"""

FAST = """\
model:
  z: {named: z-quadratic}
  v: {named: quartic, params: {m2: 1.0, g: 0.5}}
grid: {phi_min: -1.0, phi_max: 1.0, n: 5}
methods: [derivative-expansion, erg-oneloop, ptrg-quadrature, erg-quadrature,
          ptrg-flow, erg-flow, erg-discrete, shell, oracle]
flow: {k_uv: 100.0, k_ir: 0.01, snapshots: 4}
discrete: {phi0: 0.5, n_modes: 2000, epsilon: 0.01, stride: 500}
shell: {phi0: 1.0, k_c: 10.0, dk: 0.01, q: [0.0, 0.005, 0.01, 0.5]}
oracle: {phi0: 0.0, slices: [128, 256]}
"""


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_minimal_config():
    cfg = parse_config(MINIMAL)
    assert cfg.methods == ("derivative-expansion",)
    assert cfg.grid.n == 11 and cfg.model.hbar == 1.0
    assert cfg.formats == ("csv", "json")


def test_unknown_key():
    with pytest.raises(ConfigError, match="unknown key: methodz"):
        parse_config(MINIMAL + "methodz: [oracle]\n")


@pytest.mark.parametrize("old, new", [("v: {named: harmonic}", "v: {named: harmonic}\n  hbar: -1"),
                                      ("n: 11", "n: 2"),
                                      ("phi_max: 1.0", "phi_max: -2.0")])
def test_constraint_violations(old, new):
    with pytest.raises(ConfigError, match="constraint violation"):
        parse_config(MINIMAL.replace(old, new))


def test_syntax_error_has_line():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config(MINIMAL.replace("v: {named: harmonic}", "v: {named: [harmonic}"))


def test_selected_method_needs_section():
    with pytest.raises(ConfigError, match="oracle"):
        parse_config(MINIMAL.replace("[derivative-expansion]", "[oracle]"))


def test_unknown_method_and_empty_methods():
    with pytest.raises(ConfigError):
        parse_config(MINIMAL.replace("[derivative-expansion]", "[magic]"))
    with pytest.raises(ConfigError):
        parse_config(MINIMAL.replace("[derivative-expansion]", "[]"))


@pytest.mark.parametrize("text", [MINIMAL, FAST])
def test_round_trip(text):
    cfg = parse_config(text)
    assert parse_config(serialize_config(cfg)) == cfg
    assert config_from_dict(cfg.to_dict()).digest() == cfg.digest()


@settings(max_examples=25, deadline=None)
@given(hbar=st.floats(1e-3, 1e3), n=st.integers(3, 400), lo=st.floats(-5, 0), w=st.floats(0.1, 5))
def test_round_trip_random(hbar, n, lo, w):
    text = (MINIMAL.replace("phi_min: -1.0, phi_max: 1.0, n: 11",
                            f"phi_min: {lo!r}, phi_max: {lo + w!r}, n: {n}")
            .replace("v: {named: harmonic}", f"v: {{named: harmonic}}\n  hbar: {hbar!r}"))
    cfg = parse_config(text)
    assert cfg.model.hbar == hbar and cfg.grid.n == n
    assert parse_config(serialize_config(cfg)) == cfg


def test_harmonic_constant_z_has_zero_corrections(tmp_path):
    assert run(parse_config(MINIMAL), "zeff", tmp_path) == 0
    rows = read_csv(tmp_path / "zeff.csv")
    assert tuple(rows[0]) == ZEFF_COLUMNS
    assert len(rows) == 12
    for r in rows[1:]:
        assert r[2:6] == ["0", "0", "0", "0"] and r[8] == "0"
        assert r[1] == r[6] == r[7] == "1"


def test_comparison_config_diff_column(tmp_path):
    cfg = parse_config(DEMO_CONFIG.read_text())
    assert run(cfg, "zeff", tmp_path) == 0
    rows = {float(r["phi"]): r for r in csv.DictReader(open(tmp_path / "zeff.csv"))}
    assert float(rows[0.0]["diff"]) == 0.0
    assert float(rows[1.0]["diff"]) == pytest.approx(-0.309359, abs=1e-6)
    assert float(rows[-1.0]["diff"]) == pytest.approx(-0.309359, abs=1e-6)


def test_all_commands_headers_and_determinism(tmp_path):
    cfg = parse_config(FAST)
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        for cmd in ("zeff", "flow", "shell", "oracle"):
            assert run(cfg, cmd, out) == 0
    headers = {"zeff.csv": ZEFF_COLUMNS, "quadrature.csv": QUADRATURE_COLUMNS,
               "flow_ptrg.csv": FLOW_COLUMNS, "flow_erg.csv": FLOW_COLUMNS,
               "flow_discrete.csv": FLOW_COLUMNS, "shell.csv": SHELL_COLUMNS,
               "oracle.csv": ORACLE_COLUMNS}
    for name, cols in headers.items():
        a, b = (out / name for out in outs)
        assert tuple(read_csv(a)[0]) == cols
        assert a.read_bytes() == b.read_bytes()
        assert b"\r" not in a.read_bytes()
    shell = read_csv(outs[0] / "shell.csv")
    assert shell[3][2] == "0" and shell[4][2] == "0"  # q = dk and q in the gap


def test_json_summary(tmp_path):
    cfg = parse_config(FAST)
    assert run(cfg, "oracle", tmp_path) == 0
    s = json.loads((tmp_path / "summary.oracle.json").read_text())
    for key in ("version", "config_hash", "methods", "tolerances"):
        assert key in s
    assert s["version"] == __version__ and s["config_hash"] == cfg.digest()
    assert s["methods"]["oracle"]["status"] == "ok"
    o = s["details"]["oracle"]
    assert o["target_derivative_expansion"] == pytest.approx(0.5)
    assert o["B"] == pytest.approx(0.5, rel=0.05)
    assert o["matched"] in ("derivative-expansion", "erg-oneloop")


def test_domain_error_exit_code(tmp_path):
    text = MINIMAL.replace("{polynomial: [1.0]}", "{polynomial: [0.5, 0.0, -1.0]}")
    assert run(parse_config(text), "zeff", tmp_path) == 2
    s = json.loads((tmp_path / "summary.zeff.json").read_text())
    st_ = s["methods"]["derivative-expansion"]
    assert st_["status"] == "domain-error" and st_["phi0"] == -1.0


def test_unwritable_directory(tmp_path):
    ro = tmp_path / "ro"
    ro.mkdir()
    ro.chmod(0o500)
    # root ignores mode bits, so also try a pseudo-filesystem nobody can write to
    target = ro / "sub" if os.geteuid() != 0 else Path("/proc/zeffrg-out")
    assert run(parse_config(MINIMAL), "zeff", target) == 1


def test_output_path_is_a_file(tmp_path):
    f = tmp_path / "file"
    f.write_text("x")
    assert run(parse_config(MINIMAL), "zeff", f) == 1


def test_main_exit_codes(tmp_path):
    good = tmp_path / "good.yaml"
    good.write_text(MINIMAL)
    bad = tmp_path / "bad.yaml"
    bad.write_text(MINIMAL + "methodz: [x]\n")
    out = tmp_path / "out"
    assert main(["zeff", "--config", str(good), "--out", str(out)]) == 0
    assert main(["zeff", "--config", str(bad), "--out", str(out)]) == 1
    assert main(["zeff", "--config", str(tmp_path / "missing.yaml")]) == 1
    assert main(["bogus"]) == 1
    assert main(["flow", "--config", str(good), "--out", str(out)]) == 1  # selects nothing
    assert main(["report", "--config", str(good), "--out", str(out)]) == 0
    assert "Closed forms" in (out / "report.md").read_text()


def test_report_merges_oracle(tmp_path):
    cfg = parse_config(FAST)
    for cmd in ("zeff", "oracle"):
        run(cfg, cmd, tmp_path)
    from zeffrg.cli import report
    assert report(cfg, tmp_path) == 0
    text = (tmp_path / "report.md").read_text()
    assert "Lattice oracle" in text and "closer to" in text
