import math

import numpy as np
import pytest

from fpp_local.core.errors import ModelError
from fpp_local.core.rng import RngStream
from fpp_local.stochastic.laws import (
    DegreeModel,
    WeightModel,
    derive,
    is_regular,
    laplace_transform,
    malthusian_lambda,
    offspring_mean,
    size_biased,
    survival_probs,
)

TOL = 1e-10


class TestDegreeModel:
    def test_deterministic(self):
        d = DegreeModel.deterministic(3)
        assert d.mean == 3
        assert d.pmf(3) == 1.0
        assert d.pmf(2) == 0.0

    def test_atoms_are_sorted_and_normalized(self):
        d = DegreeModel.from_atoms({3: 0.25, 1: 0.75})
        assert d.values.tolist() == [1, 3]
        assert d.probs.sum() == pytest.approx(1.0)
        assert d.mean == pytest.approx(1.5)

    def test_atoms_must_sum_to_one(self):
        with pytest.raises(ModelError):
            DegreeModel.from_atoms({1: 0.5, 3: 0.4})

    def test_negative_atom_rejected(self):
        with pytest.raises(ModelError):
            DegreeModel.from_atoms({-1: 0.5, 3: 0.5})

    def test_power_law_tail(self):
        d = DegreeModel.power_law(2.5, k_max=1000)
        assert d.probs.sum() == pytest.approx(1.0)
        assert d.pmf(2) / d.pmf(4) == pytest.approx(2**2.5)
        assert d.pmf(1001) == 0.0

    def test_zero_degree_law_is_allowed(self):
        d = DegreeModel.deterministic(0)
        assert d.mean == 0
        with pytest.raises(ModelError, match="zero-mean"):
            size_biased(d)

    def test_sample_frequencies(self, rng):
        d = DegreeModel.from_atoms({1: 0.5, 3: 0.5})
        x = d.sample(20_000, rng)
        assert set(np.unique(x).tolist()) == {1, 3}
        assert (x == 3).mean() == pytest.approx(0.5, abs=0.02)

    @pytest.mark.parametrize(
        "d",
        [DegreeModel.from_atoms({1: 0.2, 2: 0.3, 5: 0.4, 9: 0.1}), DegreeModel.power_law(2.5, k_max=1000)],
        ids=["pmf", "power-law"],
    )
    def test_million_samples_within_four_standard_errors(self, d, rng):
        draws = 10**6
        x = d.sample(draws, rng)
        for k in d.values[:10].tolist():
            p = d.pmf(k)
            se = math.sqrt(p * (1 - p) / draws)
            assert abs((x == k).mean() - p) < 4 * se


class TestSizeBiased:
    def test_two_point_law(self, two_point_degree):
        off = size_biased(two_point_degree)
        assert off.values.tolist() == [0, 2]
        assert off.probs.tolist() == pytest.approx([0.25, 0.75])
        assert off.mean == pytest.approx(1.5)
        assert offspring_mean(two_point_degree) == pytest.approx(1.5)

    def test_heavy_power_law_flags_infinite_mean(self):
        d = DegreeModel.power_law(2.5, k_max=10**4)
        assert offspring_mean(d) == math.inf
        assert size_biased(d).mean == math.inf
        assert math.isfinite(size_biased(d).truncated_mean)


class TestSurvival:
    def test_two_point_law(self, two_point_degree):
        s = survival_probs(size_biased(two_point_degree), two_point_degree)
        assert s.q_star == pytest.approx(1 / 3, abs=TOL)
        assert s.zeta_star == pytest.approx(2 / 3, abs=TOL)
        assert s.zeta == pytest.approx(22 / 27, abs=TOL)

    def test_subcritical_dies(self):
        d = DegreeModel.deterministic(1)
        s = survival_probs(size_biased(d), d)
        assert s.zeta_star == 0.0
        assert s.zeta == 0.0

    def test_critical_degenerate_line_survives(self):
        d = DegreeModel.deterministic(2)
        s = survival_probs(size_biased(d), d)
        assert s.zeta == pytest.approx(1.0)

    def test_three_regular_always_survives(self):
        d = DegreeModel.deterministic(3)
        assert survival_probs(size_biased(d), d).zeta == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "d",
        [
            DegreeModel.from_atoms({1: 0.5, 3: 0.5}),
            DegreeModel.from_atoms({1: 0.3, 2: 0.2, 4: 0.5}),
            DegreeModel.power_law(2.5, k_max=1000),
        ],
        ids=["two-point", "three-point", "power-law"],
    )
    def test_q_star_is_the_smallest_fixed_point(self, d):
        off = size_biased(d)
        q = survival_probs(off, d).q_star
        assert 0 < q < 1
        assert abs(off.generating_function(q) - q) < TOL
        for s in np.linspace(0.0, q, 50, endpoint=False):
            assert off.generating_function(s) > s

    def test_rejects_nonpositive_tolerance(self, two_point_degree):
        with pytest.raises(ValueError):
            survival_probs(size_biased(two_point_degree), two_point_degree, tol=0)


class TestLaplaceTransform:
    def test_exponential_closed_form(self):
        assert laplace_transform(WeightModel.exponential(2.0), 1.0) == pytest.approx(2 / 3)

    def test_uniform(self):
        assert laplace_transform(WeightModel.uniform(0.0, 1.0), 2.0) == pytest.approx(0.432332, abs=1e-6)

    def test_weibull_shape_one_is_exponential(self):
        w = WeightModel.weibull(1.0, 1.0)
        assert laplace_transform(w, 0.7) == pytest.approx(1 / 1.7, rel=1e-9)

    def test_zero(self):
        assert laplace_transform(WeightModel.uniform(0.5, 2.0), 0.0) == 1.0

    @pytest.mark.parametrize(
        "w",
        [WeightModel.exponential(1.3), WeightModel.uniform(0.2, 1.5), WeightModel.weibull(0.7, 2.0)],
        ids=["exponential", "uniform", "weibull"],
    )
    def test_strictly_decreasing(self, w):
        values = [laplace_transform(w, lam) for lam in np.linspace(0.0, 10.0, 41)]
        assert all(a > b for a, b in zip(values, values[1:], strict=False))
        assert 0 < values[-1] < 1


class TestMalthusianLambda:
    def test_two_point_exponential(self, two_point_degree, exp_weight):
        lam = malthusian_lambda(size_biased(two_point_degree), exp_weight)
        assert lam == pytest.approx(0.5, abs=1e-9)

    def test_mean_two_exponential(self, exp_weight):
        off = size_biased(DegreeModel.deterministic(3))
        assert malthusian_lambda(off, exp_weight) == pytest.approx(1.0, abs=1e-9)

    def test_mean_two_uniform(self):
        off = size_biased(DegreeModel.deterministic(3))
        lam = malthusian_lambda(off, WeightModel.uniform(0.0, 1.0))
        assert lam == pytest.approx(1.59362, abs=1e-5)
        assert 2 * laplace_transform(WeightModel.uniform(0.0, 1.0), lam) == pytest.approx(1.0, abs=1e-10)

    def test_infinite_mean_is_inapplicable(self, exp_weight):
        off = size_biased(DegreeModel.power_law(2.5, k_max=10**4))
        with pytest.raises(ModelError, match="Malthusian regime inapplicable"):
            malthusian_lambda(off, exp_weight)

    def test_critical_has_no_parameter(self, exp_weight):
        with pytest.raises(ModelError, match="not supercritical"):
            malthusian_lambda(size_biased(DegreeModel.deterministic(2)), exp_weight)


class TestWeightModel:
    def test_samples_are_positive(self, rng):
        for w in (WeightModel.exponential(3.0), WeightModel.uniform(0.0, 1.0), WeightModel.weibull(0.5)):
            assert (w.sample(5000, rng) > 0).all()

    def test_ppf_inverts_cdf(self):
        w = WeightModel.weibull(2.0, 1.5)
        q = np.array([0.1, 0.5, 0.9])
        assert w.cdf(w.ppf(q)) == pytest.approx(q)

    def test_invalid_parameters(self):
        with pytest.raises(ModelError):
            WeightModel.exponential(0.0)
        with pytest.raises(ModelError):
            WeightModel.uniform(1.0, 1.0)


class TestDerive:
    def test_reference_model(self, two_point_degree, exp_weight):
        q = derive(two_point_degree, exp_weight)
        assert q.nu == pytest.approx(1.5)
        assert q.malthusian == pytest.approx(0.5, abs=1e-9)
        assert q.zeta_star == pytest.approx(2 / 3, abs=TOL)
        assert q.zeta == pytest.approx(22 / 27, abs=TOL)
        assert q.regular

    def test_explosive_model_reports_why(self, exp_weight):
        q = derive(DegreeModel.power_law(2.5, k_max=10**4), exp_weight)
        assert q.malthusian is None
        assert "inapplicable" in q.malthusian_note

    def test_regularity(self):
        assert is_regular(DegreeModel.from_atoms({1: 0.5, 3: 0.5}))
        assert is_regular(DegreeModel.power_law(2.5, k_max=100))


class TestRngStream:
    def test_same_key_same_draws(self):
        assert RngStream(1, (2, 3)).gen.random(5).tolist() == RngStream(1, (2, 3)).gen.random(5).tolist()

    def test_spawn_matches_direct_key(self):
        assert RngStream(1, (2,)).spawn(3).gen.random(3).tolist() == RngStream(1, (2, 3)).gen.random(3).tolist()

    def test_distinct_keys_differ(self):
        assert RngStream(1, (0,)).gen.random(3).tolist() != RngStream(1, (1,)).gen.random(3).tolist()
