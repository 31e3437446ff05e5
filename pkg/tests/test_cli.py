import json
import math

import pytest

from wergodic import cli, io
from wergodic.errors import ConfigError
from wergodic.oracle import FiniteChain

DYADIC_SCENARIO = """\
seed: 7
output: out
kernel: {name: dyadic}
init: {point: 0.0}
reference: {name: lebesgue, atoms: 65536}
estimator: {name: marginal_convergence, t_grid: [1, 2, 3, 4, 5, 6, 7, 8], exact: true}
bounds: {constant: 1.0, rate: 0.6931471805599453}
"""

ZERO_SCENARIO = """\
seed: 1
kernel: {name: dyadic}
init: {point: 0.3}
functions: [{name: constant, c: 0.0}]
estimator: {name: lp_error, t_grid: [4], p: 2, n: 100}
bounds: {ceilings: [0.0]}
"""


def test_dyadic_scenario_passes(tmp_path):
    report = cli.run_scenario(DYADIC_SCENARIO, base_dir=tmp_path)
    assert report.exit_code == cli.EXIT_OK
    assert [v.status for v in report.verdicts] == ["pass"] * 8
    assert (tmp_path / "out" / "curve.csv").exists()
    data = json.loads((tmp_path / "out" / "report.json").read_text())
    assert data["grids"]["t_grid"] == [1, 2, 3, 4, 5, 6, 7, 8]


def test_zero_function_passes_with_zero_margin():
    report = cli.run_scenario(ZERO_SCENARIO)
    (v,) = report.verdicts
    assert v.status == "pass" and v.margin == 0.0


def test_unknown_kernel_names_the_field():
    text = "seed: 1\nkernel:\n  name: brownian\nestimator: {name: lp_error}\n"
    with pytest.raises(ConfigError) as err:
        cli.parse_scenario(text)
    assert err.value.field == "kernel.name"
    assert err.value.line == 3
    assert "brownian" in str(err.value)


@pytest.mark.parametrize("text, field", [
    ("kernel: {name: dyadic}\nestimator: {name: lp_error}\n", "seed"),
    ("seed: 1\nkernel: {name: dyadic}\nestimator: {name: lp_error, colour: 3}\n",
     "estimator.colour"),
    ("seed: 1\nkernel: {name: dyadic}\nestimator: {name: lp_error, n: 0}\n", "estimator.n"),
    ("seed: 1\nkernel: {name: dyadic}\nestimator: {name: nope}\n", "estimator.name"),
    ("seed: 1\nkernel: {name: dyadic}\nestimator: {name: lp_error}\nextra: 2\n", "extra"),
    ("seed: 1\nkernel: {name: dyadic}\nestimator: {name: lp_error}\nbounds: {rate: 1}\n",
     "bounds"),
])
def test_config_validation(text, field):
    with pytest.raises(ConfigError) as err:
        cli.parse_scenario(text)
    assert err.value.field == field


def test_invalid_yaml_reports_line():
    with pytest.raises(ConfigError) as err:
        cli.parse_scenario("seed: 1\nkernel: [unclosed\n")
    assert err.value.line is not None


def test_verdict_logic():
    assert cli.judge("b", 1, 0.4, 0.1, 0.5).status == "pass"
    assert cli.judge("b", 1, 0.7, 0.1, 0.5).status == "fail"
    assert cli.judge("b", 1, 0.45, 0.1, 0.5).status == "inconclusive"


def test_exit_codes(tmp_path):
    fail = ZERO_SCENARIO.replace("constant, c: 0.0", "constant, c: 1.0").replace(
        "lp_error, t_grid: [4], p: 2, n: 100", "lp_error, t_grid: [4], p: 2, n: 100, pi_ref: 0.0")
    assert cli.run_scenario(fail).exit_code == cli.EXIT_FAIL
    path = tmp_path / "s.yaml"
    path.write_text(ZERO_SCENARIO)
    assert cli.main(["run", str(path)]) == cli.EXIT_OK
    path.write_text("seed: 1\n")
    assert cli.main(["run", str(path)]) == cli.EXIT_ERROR


def test_inconclusive_exit_code():
    text = """\
seed: 2
kernel: {name: finite, P: [[0.7, 0.3], [0.6, 0.4]]}
init: {point: 0}
functions: [{name: values, values: [0.0, 1.0]}]
estimator: {name: lp_error, t_grid: [6], p: 2, n: 2000}
bounds: {ceilings: [%r]}
"""
    # a ceiling at the point estimate lies inside the confidence interval
    value = cli.run_scenario(text % 1.0).curve.value[0]
    assert cli.run_scenario(text % float(value)).exit_code == cli.EXIT_INCONCLUSIVE


def test_rate_fit_scenario(tmp_path):
    text = DYADIC_SCENARIO.replace("marginal_convergence", "rate_fit").replace(
        "exact: true}", "exact: true, window: [1, 8]}").replace(
        "rate: 0.6931471805599453}", "rate: 0.6931471805599453, min_rate: 0.68}")
    report = cli.run_scenario(text, base_dir=tmp_path)
    assert report.fit.c == pytest.approx(math.log(2), abs=1e-9)
    assert io.read_fit(tmp_path / "out" / "fit.csv") == report.fit
    assert report.exit_code == cli.EXIT_OK


@pytest.mark.parametrize("estimator", [
    "{name: contraction, t_grid: [1, 2], x2: 1.0}",
    "{name: lipschitz, t_grid: [1], pairs: [[0.0, 1.0]]}",
    "{name: invariance, t_grid: [1], n: 2000}",
    "{name: second_moment, t_grid: [2, 4], n: 200}",
    "{name: uniform_condition, t_grid: [1], s_grid: [0, 2], n_outer: 20, n_inner: 20}",
    "{name: coupling, t_grid: [1, 2], x2: 1.0, n: 50}",
])
def test_every_estimator_runs(estimator):
    text = f"""\
seed: 3
kernel: {{name: dyadic}}
init: {{point: 0.0}}
functions: [{{name: identity}}]
reference: {{atoms: 4096}}
estimator: {estimator}
"""
    report = cli.run_scenario(text)
    assert len(report.curve) >= 1 and report.exit_code == cli.EXIT_OK


def test_finite_chain_from_csv(tmp_path):
    io.save_chain(FiniteChain([[0.7, 0.3], [0.6, 0.4]]), tmp_path / "chain.csv")
    text = """\
seed: 3
kernel: {name: finite, chain_csv: chain.csv}
init: {point: 1}
estimator: {name: marginal_convergence, t_grid: [0, 1, 2], exact: true}
"""
    report = cli.run_scenario(text, base_dir=tmp_path)
    assert report.curve.value[0] == pytest.approx(2 / 3, abs=1e-12)


def test_same_seed_gives_identical_files(tmp_path):
    text = ZERO_SCENARIO.replace("constant, c: 0.0", "square").replace("ceilings: [0.0]",
                                                                         "ceilings: [1.0]")
    text += "output: run\n"
    outputs = []
    for name in ("a", "b"):
        cli.run_scenario(text, base_dir=tmp_path / name)
        outputs.append([(tmp_path / name / "run" / f).read_bytes()
                        for f in ("curve.csv", "report.json")])
    assert outputs[0] == outputs[1]


def test_list_components_default():
    text = cli.list_components()
    for name in ("dyadic", "finite", "ar1", "delay_sde", "lp_error", "marginal_convergence",
                 "uniform_condition", "contraction", "lipschitz", "invariance",
                 "second_moment", "rate_fit"):
        assert f"  {name}:" in text


def test_list_empty_registry(capsys):
    assert cli.list_components(cli.Registry()) == ""
    assert cli.main(["list"], registry=cli.Registry()) == cli.EXIT_OK
    assert capsys.readouterr().out == ""


def test_oracle_check(tmp_path, capsys):
    io.save_chain(FiniteChain([[0.0, 1.0], [1.0, 0.0]]), tmp_path / "swap.csv")
    assert cli.main(["oracle-check", str(tmp_path / "swap.csv")]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "stationary: 0.5 0.5" in out
    (tmp_path / "bad.csv").write_text("1,0\n0.5,0.4\n0,1\n1,0\n")
    assert cli.main(["oracle-check", str(tmp_path / "bad.csv")]) == cli.EXIT_ERROR
