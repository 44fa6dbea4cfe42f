#!/usr/bin/env python3
"""
Unit tests for Caricature I and Caricature II
"""

import math
from unittest.mock import Mock

import pytest

from src.core.caricature import (
    Car1Config, Car1Simulation, Car2Config, Car2State, EventRecord, RedField,
    car1_recruit, car1_run, car2_run, car2_step,
)
from src.core.errors import ConfigError, RedExhausted
from src.core.lyapunov import fkg_violations
from src.core.rng import GSpec, RandomStream, substream


class TestCar1Recruit:
    """Test greedy red recruitment"""

    def test_nearest_first(self):
        """Test reds {4: 1, 6: 3} past front 3 give [4, 6]"""
        reds = RedField.from_mapping({4: 1, 6: 3}, W=10)
        assert car1_recruit(reds, 3, 2) == [4, 6]
        assert reds.remaining(4) == 0
        assert reds.remaining(6) == 2

    def test_several_from_one_site(self):
        """Test one site can supply several recruits"""
        reds = RedField.from_mapping({5: 3}, W=10)
        assert car1_recruit(reds, 2, 2) == [5, 5]
        assert reds.total == 1

    def test_nothing_needed(self):
        """Test m=0 recruits nothing"""
        reds = RedField.from_mapping({4: 1}, W=10)
        assert car1_recruit(reds, 3, 0) == []
        assert reds.total == 1

    def test_exhaustion(self):
        """Test running out of reds inside the window"""
        reds = RedField.from_mapping({4: 1}, W=10)
        with pytest.raises(RedExhausted) as excinfo:
            car1_recruit(reds, 3, 2)
        assert excinfo.value.details["found"] == 1

    def test_negative_request(self):
        """Test a negative count is rejected"""
        with pytest.raises(ConfigError):
            car1_recruit(RedField([1, 1]), 0, -1)

    def test_clear(self):
        """Test blackening a site empties it"""
        reds = RedField([2, 0, 5])
        assert reds.clear(3) == 5
        assert reds.remaining(3) == 0
        assert reds.clear(9) == 0


class TestCar1Config:
    """Test Caricature I configuration"""

    def test_defaults(self):
        """Test whites start at site 1 by default"""
        config = Car1Config(mu=2.0, T=10.0, J=4)
        assert config.x_init == (1, 1, 1, 1)

    def test_window_covers_max_speed(self):
        """Test the red window covers the maximal front speed"""
        config = Car1Config(mu=2.0, T=100.0, J=8)
        assert config.window() >= 8 * 100 / 2

    @pytest.mark.parametrize("kwargs,key", [
        ({"J": 0}, "J"),
        ({"mu": -1.0}, "mu"),
        ({"x_init": (1, 2)}, "x_init"),
        ({"x_init": (0, 1, 1, 1)}, "x_init"),
        ({"p_plus": 0.0}, "p_plus"),
    ])
    def test_invalid(self, kwargs, key):
        """Test invalid settings name their key"""
        args = {"mu": 1.0, "T": 10.0, "J": 4}
        args.update(kwargs)
        with pytest.raises(ConfigError) as excinfo:
            Car1Config(**args)
        assert excinfo.value.key == key


class TestCar1Run:
    """Test Caricature I dynamics"""

    def test_red_exhausted(self, scripted_stream):
        """Test a lone white at 1 with no reds advances once and then aborts"""
        config = Car1Config(mu=0.0, T=100.0, J=1, x_init=(1,), p_plus=0.2)
        with pytest.raises(RedExhausted) as excinfo:
            car1_run(config, scripted_stream, run_id=3, red_field=RedField([]))
        details = excinfo.value.details
        assert details["R"] == 1
        assert details["tau_log"] == [1.0]
        assert details["run_id"] == 3

    def test_advance_replaces_blackened(self, scripted_stream):
        """Test every white at the new front is replaced by a recruited red"""
        config = Car1Config(mu=0.0, T=100.0, J=3, x_init=(1, 1, 4), debug_invariants=True)
        simulation = Car1Simulation(config, scripted_stream, red_field=RedField.from_mapping({2: 1, 5: 4}, W=20))
        assert simulation.apply_jump(1.0)
        state = simulation.state
        assert state.R == 1
        assert sorted(state.whites) == [2, 4, 5]
        assert state.blackened == state.recruited == 2

    def test_reds_at_front_are_blackened(self, scripted_stream):
        """Test reds on the new front site are removed, not recruited"""
        config = Car1Config(mu=0.0, T=100.0, J=1, x_init=(1,))
        simulation = Car1Simulation(config, scripted_stream, red_field=RedField.from_mapping({1: 3, 2: 1}, W=20))
        simulation.apply_jump(1.0)
        assert simulation.state.red_blackened == 3
        assert simulation.state.whites == [2]

    def test_invariants(self, car1_config):
        """Test J whites stay ahead of the front with recruited equal to blackened"""
        trajectory = car1_run(car1_config, RandomStream(11))
        assert trajectory.extra["recruited"] == trajectory.extra["blackened"]
        assert trajectory.R_end == len(trajectory.tau_log)
        assert trajectory.values == sorted(trajectory.values)

    def test_rate_bound(self, car1_config):
        """Test the advance rate stays within JD/2 up to Poisson noise"""
        bound = car1_config.J * car1_config.D / 2.0
        for seed in range(5):
            trajectory = car1_run(car1_config, substream(12, seed), run_id=seed)
            assert trajectory.extra["rate_bound"] == bound
            noise = 3.0 * math.sqrt(bound / car1_config.T)
            assert trajectory.extra["advance_rate"] <= bound + noise

    def test_deterministic(self, car1_config):
        """Test identical seeds give identical runs"""
        a = car1_run(car1_config, substream(5, 2))
        b = car1_run(car1_config, substream(5, 2))
        assert a.tau_log == b.tau_log


class TestCar2Config:
    """Test Caricature II configuration"""

    def test_defaults(self):
        """Test alpha defaults to J and walkers start at 1"""
        config = Car2Config(J=4, G=GSpec("constant", (2,)), T=10.0)
        assert config.alpha == 4.0
        assert config.x_init == (1, 1, 1, 1)

    @pytest.mark.parametrize("kwargs,key", [
        ({"x_init": (1, 2)}, "x_init"),
        ({"q_list": (0,)}, "q_list"),
        ({"q_list": (6,)}, "q_list"),
        ({"q_list": ()}, "q_list"),
        ({"J": 0, "x_init": ()}, "J"),
    ])
    def test_invalid(self, kwargs, key):
        """Test invalid settings name their key"""
        args = {"J": 3, "G": GSpec("constant", (1,)), "T": 10.0}
        args.update(kwargs)
        with pytest.raises(ConfigError) as excinfo:
            Car2Config(**args)
        assert excinfo.value.key == key


class TestCar2Step:
    """Test single Caricature II events"""

    @pytest.fixture
    def offsets(self, scripted_stream):
        scripted_stream.generator = Mock()
        return scripted_stream

    def test_re_entry(self, offsets):
        """Test X=(1,1,5), r=1, Y=(4,2) gives (4,2,4)"""
        offsets.generator.geometric.side_effect = [4, 2]
        config = Car2Config(J=3, G=GSpec("geometric", (0.5,)), T=10.0, x_init=(1, 1, 5),
                            q_list=(1, 2), debug_invariants=True)
        state = car2_step(Car2State.initial(config), offsets)
        assert state.X == [4, 2, 4]
        record = state.last_record
        assert record.k == 1
        assert record.r == 1
        assert record.U == (1, 1, 5)
        assert record.adjustments == (4, 1, -1)
        assert record.L_tilde == 6
        assert record.Q_tilde == {1: 6, 2: 26}
        assert record.L_post == sum(state.X) == 10
        assert record.in_lambda is False
        assert state.ledger_holds()

    def test_no_event(self, offsets):
        """Test X=(2,5) with walker 1 stepping down is not an event"""
        config = Car2Config(J=2, G=GSpec("constant", (1,)), T=10.0, x_init=(2, 5))
        state = car2_step(Car2State.initial(config), offsets)
        assert state.X == [1, 5]
        assert state.last_record is None
        assert state.k == 0
        assert state.walk == [-1, 0]

    def test_constant_offsets(self, offsets):
        """Test constant G re-enters the jumper and sitters at 1 at the same offset"""
        config = Car2Config(J=3, G=GSpec("constant", (3,)), T=10.0, x_init=(1, 1, 2))
        state = car2_step(Car2State.initial(config), offsets)
        assert state.X == [3, 3, 1]
        assert state.last_record.in_lambda is True

    def test_long_trace(self, car2_config):
        """Test 10^4 events keep the state on the lattice with the ledger intact"""
        state = Car2State.initial(car2_config)
        stream = RandomStream(17)
        records = []
        while len(records) < 10_000:
            car2_step(state, stream)
            if state.last_record is not None:
                records.append(state.last_record)
        assert [rec.k for rec in records] == list(range(1, 10_001))
        assert all(rec.U[rec.r - 1] == 1 and min(rec.U) == 1 for rec in records)
        assert all(rec.L_tilde >= car2_config.J - 1 for rec in records)
        assert min(state.X) >= 1
        assert state.ledger_holds()
        assert fkg_violations(records[:500]) == 0


class TestCar2Run:
    """Test Caricature II traces"""

    def test_trace(self, car2_config):
        """Test event indices are consecutive and times increase"""
        trajectory, records = car2_run(car2_config, RandomStream(18))
        assert records
        assert [rec.k for rec in records] == list(range(1, len(records) + 1))
        assert all(a.tau < b.tau for a, b in zip(records, records[1:]))
        assert records[-1].tau <= car2_config.T
        assert trajectory.values == sorted(trajectory.values)
        assert trajectory.R_end == len(records)
        assert trajectory.extra["ledger_ok"]

    def test_record_defaults(self):
        """Test EventRecord defaults for synthetic traces"""
        record = EventRecord(k=1, tau=0.5, U=(1, 2), r=1, L_tilde=2)
        assert record.Q_tilde == {}
        assert record.in_lambda is False
