"""Topology gain formulas, component counts and sweep behavior.

Gain values at D = 0.6 frozen from hand evaluation:
boost 2.5, (2+D)/(1-D) = 6.5, (1+2D)/(1-D) = 5.5, 2/(1-D)+nD = 6.2 (n=2),
(1+nD)/(1-D) = 5.5 (n=2), 1/(1-D)^2 = 6.25, proposed (n+2D)/(1-D) = 8.
"""

import numpy as np
import pytest

from zetastep.comparison import (
    TOPOLOGIES, count_table, gain_of, sweep_gain, sweep_to_csv,
)


class TestGainFormulas:
    @pytest.mark.parametrize("tid,expected", [
        ("boost", 2.5),
        ("ref5", 6.5),
        ("ref14", 5.5),
        ("ref15", 6.2),
        ("ref16", 5.5),
        ("quadratic", 6.25),
        ("proposed", 8.0),
    ])
    def test_reference_duty(self, tid, expected):
        assert gain_of(TOPOLOGIES[tid], 0.6, 2.0) == pytest.approx(
            expected, rel=1e-12)

    def test_quadratic_half_duty(self):
        assert gain_of(TOPOLOGIES["quadratic"], 0.5) == pytest.approx(
            4.0, rel=1e-12)

    def test_low_duty_limits(self):
        d = 1e-9
        assert gain_of(TOPOLOGIES["boost"], d) == pytest.approx(1.0, rel=1e-6)
        assert gain_of(TOPOLOGIES["quadratic"], d) == pytest.approx(
            1.0, rel=1e-6)
        for n in (1.0, 2.0, 3.0):
            assert gain_of(TOPOLOGIES["proposed"], d, n) == pytest.approx(
                n, rel=1e-6)

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            gain_of(TOPOLOGIES["boost"], 1.0)
        with pytest.raises(ValueError):
            gain_of(TOPOLOGIES["proposed"], 0.5, 0.0)


class TestSweep:
    def test_cardinality(self):
        grid = [round(0.1 * k, 3) for k in range(1, 10)]
        rows = sweep_gain(TOPOLOGIES.values(), grid, 2.0)
        assert len(rows) == 9 * len(TOPOLOGIES)
        per_topology = {}
        for _, tid, _ in rows:
            per_topology[tid] = per_topology.get(tid, 0) + 1
        assert set(per_topology.values()) == {9}

    def test_dominance_over_basic_competitors(self):
        # strict dominance of the coupled-inductor converter (n = 2) over
        # the boost, ref5 and ref14 laws across the entire duty grid
        grid = [0.05 + 0.05 * k for k in range(19)]
        for d in grid:
            gp = gain_of(TOPOLOGIES["proposed"], d, 2.0)
            for tid in ("boost", "ref5", "ref14"):
                assert gp > gain_of(TOPOLOGIES[tid], d, 2.0)

    def test_quadratic_crossover_is_data(self):
        # the quadratic law overtakes near D = 1/sqrt(2); report, not assert
        d_lo, d_hi = 0.70, 0.72
        assert gain_of(TOPOLOGIES["proposed"], d_lo, 2.0) > gain_of(
            TOPOLOGIES["quadratic"], d_lo)
        assert gain_of(TOPOLOGIES["proposed"], d_hi, 2.0) < gain_of(
            TOPOLOGIES["quadratic"], d_hi)

    def test_csv_format(self):
        rows = sweep_gain([TOPOLOGIES["boost"]], [0.5], 2.0)
        text = sweep_to_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == "duty,topology,gain"
        d, tid, g = lines[1].split(",")
        assert float(d) == 0.5 and tid == "boost" and float(g) == 2.0


class TestCounts:
    def test_proposed_row(self):
        t = TOPOLOGIES["proposed"]
        assert (t.switches, t.diodes, t.capacitors, t.inductors) == (1, 3, 4, 1)
        assert t.coupled_inductor is True

    def test_boost_row(self):
        t = TOPOLOGIES["boost"]
        assert (t.switches, t.diodes, t.capacitors, t.inductors) == (1, 1, 1, 1)
        assert t.coupled_inductor is False

    def test_table_complete(self):
        table = count_table()
        assert len(table) == 7
        assert {row["id"] for row in table} == set(TOPOLOGIES)
        for row in table:
            for key in ("switches", "diodes", "capacitors", "inductors"):
                assert row[key] >= 1

    def test_n_dependence_flags(self):
        assert TOPOLOGIES["ref15"].uses_n and TOPOLOGIES["ref16"].uses_n
        assert TOPOLOGIES["proposed"].uses_n
        for tid in ("boost", "ref5", "ref14", "quadratic"):
            assert not TOPOLOGIES[tid].uses_n
