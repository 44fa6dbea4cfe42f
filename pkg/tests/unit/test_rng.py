#!/usr/bin/env python3
"""
Unit tests for DLA-1D random streams and samplers
"""

import math

import numpy as np
import pytest

from src.core.errors import ConfigError, ParameterError
from src.core.rng import (
    GSpec, RandomStream, displacement_sample, exp_sample, g_sample, poisson_sample, substream,
)
from src.core.stats import ks_distance


class TestRandomStream:
    """Test stream determinism and state handling"""

    def test_same_seed_same_draws(self):
        """Test identical (seed, id) reproduces the first 1000 draws"""
        a = substream(7, 3)
        b = substream(7, 3)
        assert [a.uniform() for _ in range(1000)] == [b.uniform() for _ in range(1000)]

    def test_distinct_streams_differ(self):
        """Test different stream ids give different sequences"""
        a = substream(7, 0)
        b = substream(7, 1)
        assert [a.uniform() for _ in range(10)] != [b.uniform() for _ in range(10)]

    @pytest.mark.statistical
    def test_streams_uncorrelated(self):
        """Test paired uniforms from two substreams are uncorrelated"""
        a = substream(11, 0)
        b = substream(11, 1)
        x = np.array([a.uniform() for _ in range(100_000)])
        y = np.array([b.uniform() for _ in range(100_000)])
        assert abs(np.corrcoef(x, y)[0, 1]) < 0.01

    def test_state_round_trip(self):
        """Test a restored stream continues identically"""
        stream = RandomStream(5, 2)
        for _ in range(123):
            stream.uniform()
            stream.standard_exponential()
        restored = RandomStream.from_state(stream.to_state())
        assert [stream.uniform() for _ in range(5000)] == [restored.uniform() for _ in range(5000)]
        assert [stream.standard_exponential() for _ in range(5000)] == \
            [restored.standard_exponential() for _ in range(5000)]
        assert stream.generator.poisson(3.0) == restored.generator.poisson(3.0)

    def test_seed_is_masked(self):
        """Test negative and oversized seeds are folded into 64 bits"""
        stream = RandomStream(-1, 0)
        assert stream.master_seed == (1 << 64) - 1

    def test_index_in_range(self):
        """Test uniform index stays in range(n)"""
        stream = RandomStream(1)
        picks = {stream.index(3) for _ in range(1000)}
        assert picks == {0, 1, 2}


class TestExpSample:
    """Test exponential waiting times"""

    def test_sample_mean(self):
        """Test rate=2 has sample mean 0.5"""
        stream = RandomStream(1)
        draws = [exp_sample(stream, 2.0) for _ in range(100_000)]
        assert abs(np.mean(draws) - 0.5) < 0.01

    def test_strictly_positive(self):
        """Test draws are strictly positive"""
        stream = RandomStream(2)
        assert min(exp_sample(stream, 5.0) for _ in range(10_000)) > 0.0

    @pytest.mark.parametrize("rate", [0.0, -1.0, math.inf, math.nan])
    def test_invalid_rate(self, rate):
        """Test non-positive or non-finite rates are rejected"""
        with pytest.raises(ParameterError):
            exp_sample(RandomStream(1), rate)

    def test_golden_values(self, golden):
        """Test rate=1 draws at seed 42 are frozen"""
        stream = RandomStream(42, 0)
        golden("exp_sample_seed42", [exp_sample(stream, 1.0) for _ in range(8)])

    @pytest.mark.statistical
    def test_memoryless(self):
        """Test P(X > s + t | X > s) matches P(X > t)"""
        stream = RandomStream(3)
        draws = np.array([exp_sample(stream, 1.0) for _ in range(100_000)])
        s, t = 1.0, 0.5
        survivors = draws[draws > s]
        conditional = float((survivors > s + t).mean())
        unconditional = float((draws > t).mean())
        p = math.exp(-t)
        sigma = math.sqrt(p * (1 - p) / survivors.size + p * (1 - p) / draws.size)
        assert abs(conditional - unconditional) < 3 * sigma


class TestPoissonSample:
    """Test Poisson counts"""

    def test_zero_mean(self):
        """Test mean 0 always gives 0"""
        stream = RandomStream(1)
        assert all(poisson_sample(stream, 0.0) == 0 for _ in range(100))

    def test_mean_and_variance(self):
        """Test mean 0.5 draws have mean and variance 0.5"""
        stream = RandomStream(4)
        draws = np.array([poisson_sample(stream, 0.5) for _ in range(100_000)])
        assert abs(draws.mean() - 0.5) < 0.01
        assert abs(draws.var(ddof=1) - 0.5) < 0.02

    @pytest.mark.parametrize("mean", [-0.1, math.nan, math.inf])
    def test_invalid_mean(self, mean):
        """Test negative or non-finite means are rejected"""
        with pytest.raises(ParameterError):
            poisson_sample(RandomStream(1), mean)


class TestDisplacementSample:
    """Test fast-forward displacements"""

    def test_zero_delta(self):
        """Test no elapsed time gives no displacement"""
        stream = RandomStream(1)
        assert all(displacement_sample(stream, 1.0, 0.0) == 0 for _ in range(100))

    def test_symmetric_variance(self):
        """Test D=1, delta=10 has variance D*delta"""
        stream = RandomStream(5)
        draws = np.array([displacement_sample(stream, 1.0, 10.0, 0.5) for _ in range(100_000)])
        assert abs(draws.var(ddof=1) - 10.0) < 0.3
        assert abs(draws.mean()) < 3 * math.sqrt(10.0 / draws.size)

    def test_all_up_jumps(self):
        """Test p_plus=1 makes the displacement the Poisson jump count"""
        stream = RandomStream(6)
        draws = np.array([displacement_sample(stream, 1.0, 5.0, 1.0) for _ in range(100_000)])
        assert (draws >= 0).all()
        assert abs(draws.mean() - 5.0) < 0.1

    def test_negative_delta(self):
        """Test negative elapsed time is rejected"""
        with pytest.raises(ParameterError):
            displacement_sample(RandomStream(1), 1.0, -1.0)

    @pytest.mark.parametrize("D,p_plus", [(0.0, 0.5), (1.0, 1.5), (1.0, -0.1)])
    def test_invalid_parameters(self, D, p_plus):
        """Test D <= 0 and p_plus outside [0, 1] are rejected"""
        with pytest.raises(ParameterError):
            displacement_sample(RandomStream(1), D, 1.0, p_plus)

    @pytest.mark.statistical
    def test_additive_in_time(self):
        """Test displacement over a+b matches the sum over a and b"""
        stream = RandomStream(7)
        whole = [displacement_sample(stream, 1.0, 7.0) for _ in range(100_000)]
        split = [displacement_sample(stream, 1.0, 3.0) + displacement_sample(stream, 1.0, 4.0)
                 for _ in range(100_000)]
        result = ks_distance(whole, split)
        assert result.statistic < result.crit1


class TestGSpec:
    """Test re-entry offset laws"""

    def test_constant(self):
        """Test constant:3 always gives 3"""
        spec = GSpec("constant", (3,))
        stream = RandomStream(1)
        assert all(g_sample(stream, spec) == 3 for _ in range(100))

    def test_geometric_mean(self):
        """Test geometric(0.5) has mean 2"""
        spec = GSpec("geometric", (0.5,))
        stream = RandomStream(8)
        draws = np.array([g_sample(stream, spec) for _ in range(100_000)])
        assert draws.min() >= 1
        assert abs(draws.mean() - 2.0) < 0.05

    def test_zeta_support(self):
        """Test truncated zeta draws stay in 1..n_max"""
        spec = GSpec("zeta-truncated", (2.5, 50))
        stream = RandomStream(9)
        draws = [g_sample(stream, spec) for _ in range(10_000)]
        assert min(draws) >= 1
        assert max(draws) <= 50
        assert draws.count(1) > draws.count(2)

    def test_geometric_moments(self):
        """Test closed-form geometric moments"""
        spec = GSpec("geometric", (0.5,))
        assert spec.moment(1) == pytest.approx(2.0)
        assert spec.moment(2) == pytest.approx(6.0)
        assert spec.mean() == pytest.approx(2.0)
        assert GSpec("geometric", (1.0,)).moment(10) == 1.0

    def test_parse(self):
        """Test parsing family and parameter strings"""
        spec = GSpec.parse("zeta-truncated", "3, 100")
        assert spec.family == "zeta-truncated"
        assert spec.params == (3.0, 100.0)
        assert spec.describe() == "zeta-truncated:3.0,100.0"

    @pytest.mark.parametrize("family,params", [
        ("poisson", (1.0,)),
        ("constant", (0,)),
        ("constant", (1.5,)),
        ("geometric", (0.0,)),
        ("geometric", (1.2,)),
        ("zeta-truncated", (2.0,)),
        ("zeta-truncated", (2.0, 0)),
        ("zeta-truncated", (-1.0, 10)),
    ])
    def test_invalid_specs(self, family, params):
        """Test invalid families and parameters are configuration errors"""
        with pytest.raises(ConfigError) as excinfo:
            GSpec(family, params)
        assert excinfo.value.key in ("g_family", "g_params")

    def test_parse_garbage(self):
        """Test unparsable parameters name g_params"""
        with pytest.raises(ConfigError) as excinfo:
            GSpec.parse("geometric", "half")
        assert excinfo.value.key == "g_params"
