"""Scenario ingestion: bundled configurations, validation, strictness."""

import numpy as np
import pytest

from hgobank.scenario import (
    ScenarioError,
    bundled_scenario_names,
    parse_scenario,
    resolve_scenario,
)

MINIMAL = """
horizon = 1.0

[plant]
kind = "chain"
n = 2
x0 = [0.0, 0.0]

[estimator]
kind = "state_feedback"
"""


class TestBundled:
    def test_all_bundled_parse(self):
        names = bundled_scenario_names()
        assert len(names) >= 10
        for name in names:
            resolve_scenario(name)

    def test_example1_mhgo_parameters(self):
        sc = resolve_scenario("example1_mhgo")
        assert sc.plant.kind == "underwater"
        assert sc.plant.a == 1.0
        assert sc.noise.bound == 0.01
        assert sc.noise.sample_period == 1e-4
        assert sc.estimator.kappa == (2.0, 1.0)
        assert sc.estimator.eps == 0.15
        assert sc.estimator.gamma == 1e3
        assert sc.estimator.inits == ((5.0, 5.0), (-5.0, 5.0), (5.0, -5.0))
        assert sc.estimator.beta0 == (0.0, 0.0)
        assert sc.controller.saturation == 500.0

    def test_example1_switching_parameters(self):
        sc = resolve_scenario("example1_switching")
        assert sc.estimator.kappa_fast == (71.0, 70.0)
        assert sc.estimator.eps_fast == 1e-3
        assert sc.estimator.t_switch == 0.1
        assert sc.estimator.init == (5.0, -5.0)

    def test_example2_grid_81(self):
        sc = resolve_scenario("example2_mhgo_n81")
        inits = np.asarray(sc.estimator.inits)
        assert inits.shape == (81, 2)
        # uniform 9x9 grid over the vertex square
        assert sorted(set(inits[:, 0])) == sorted(np.linspace(-3, 3, 9))
        assert sorted(set(inits[:, 1])) == sorted(np.linspace(-3, 3, 9))
        # the anchor init sits last, so the fused estimate starts from it
        assert tuple(inits[-1]) == (3.0, -3.0)
        assert len(sc.estimator.beta0) == 80

    def test_example2_multiobs_sigma0(self):
        sc3 = resolve_scenario("example2_multiobs_n3")
        assert sc3.estimator.sigma0 == 3
        sc81 = resolve_scenario("example2_multiobs_n81")
        assert sc81.estimator.sigma0 == 81
        assert tuple(np.asarray(sc81.estimator.inits)[-1]) == (3.0, -3.0)

    def test_unknown_name(self):
        with pytest.raises(ScenarioError):
            resolve_scenario("no_such_scenario")


class TestValidation:
    def test_minimal_defaults_applied(self):
        sc = parse_scenario(MINIMAL)
        assert sc.dt_macro == 1e-4
        assert sc.output.stride == 10
        assert sc.noise.bound == 0.0
        assert sc.controller.kind == "zero"

    def test_unknown_key_rejected(self):
        bad = MINIMAL + "\n[output]\nstrideX = 3\n"
        with pytest.raises(ScenarioError, match="strideX"):
            parse_scenario(bad)

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ScenarioError, match="mystery"):
            parse_scenario("mystery = 1\n" + MINIMAL)

    def test_parse_error_carries_position(self):
        with pytest.raises(ScenarioError, match="line"):
            parse_scenario("horizon = [broken\n")

    def test_mhgo_bank_too_small(self):
        text = """
horizon = 1.0

[plant]
kind = "chain"
n = 2
x0 = [0.0, 0.0]

[estimator]
kind = "mhgo"
kappa = [2.0, 1.0]
eps = 0.15
inits = [[1.0, 1.0], [-1.0, 1.0]]
"""
        with pytest.raises(ScenarioError, match=r"N >= n\+1 required"):
            parse_scenario(text)

    def test_bad_horizon(self):
        with pytest.raises(ScenarioError, match="horizon"):
            parse_scenario(MINIMAL.replace("horizon = 1.0", "horizon = -2.0"))

    def test_wrong_x0_length(self):
        with pytest.raises(ScenarioError, match="x0"):
            parse_scenario(MINIMAL.replace("x0 = [0.0, 0.0]", "x0 = [0.0]"))

    def test_non_hurwitz_kappa(self):
        text = MINIMAL.replace(
            'kind = "state_feedback"',
            'kind = "hgo"\nkappa = [-2.0, 1.0]\neps = 0.15\ninit = [0.0, 0.0]',
        )
        with pytest.raises(ScenarioError, match="Hurwitz"):
            parse_scenario(text)

    def test_default_equal_weights(self):
        text = MINIMAL.replace(
            'kind = "state_feedback"',
            'kind = "mhgo"\nkappa = [2.0, 1.0]\neps = 0.15\n'
            "inits = [[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0]]",
        )
        sc = parse_scenario(text)
        assert sc.estimator.beta0 == (1.0 / 3.0, 1.0 / 3.0)

    def test_effective_toml_round_trips(self):
        for name in bundled_scenario_names():
            sc = resolve_scenario(name)
            sc2 = parse_scenario(sc.effective_toml())
            assert sc2 == sc

    def test_load_from_file(self, tmp_path):
        p = tmp_path / "demo.toml"
        p.write_text(MINIMAL)
        sc = resolve_scenario(p)
        assert sc.label == "demo"
