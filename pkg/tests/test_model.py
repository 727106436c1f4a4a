import numpy as np
import pytest
from hypothesis import given, strategies as st

from sensorkeys.model import (
    ConfigError, InvariantError, SimConfig, check_invariants, derive_rep_seed, init_state,
)

from conftest import make_state


def test_node_count_below_cluster_size_is_rejected():
    with pytest.raises(ConfigError, match="node_count below target_cluster_size") as err:
        init_state(SimConfig(node_count=0))
    assert err.value.field == "node_count"


@pytest.mark.parametrize("field,value", [
    ("p_target", 0.0), ("p_target", 1.0), ("target_cluster_size", 1), ("short_range", -1.0),
])
def test_invalid_fields_are_named(field, value):
    with pytest.raises(ConfigError) as err:
        SimConfig(**{field: value}).validate()
    assert err.value.field == field


def test_init_is_deterministic():
    cfg = SimConfig(node_count=4, target_cluster_size=2, seed=7)
    a, b = init_state(cfg), init_state(cfg)
    assert np.array_equal(a.pos, b.pos)
    assert np.array_equal(a.waypoint, b.waypoint)
    assert np.array_equal(a.speed, b.speed)
    assert [r.base_key for r in a.rings] == [r.base_key for r in b.rings]


def test_positions_inside_area_and_base_keys_unique():
    st_ = init_state(SimConfig(node_count=1000, area=(1000.0, 1000.0)))
    assert st_.pos.min() >= 0 and st_.pos.max() <= 1000
    keys = [r.base_key for r in st_.rings]
    assert len(set(keys)) == 1000
    assert all(0 <= k < 2**64 for k in keys)
    assert st_.step == 0 and not st_.clusters


@given(st.integers(0, 2**64 - 1))
def test_rep_seed_mixes_rep_index(seed):
    assert derive_rep_seed(seed, 0) != derive_rep_seed(seed, 1)
    assert derive_rep_seed(seed, 3) == derive_rep_seed(seed, 3)
    assert 0 <= derive_rep_seed(seed, 5) < 2**64


def test_thirty_rep_seeds_distinct():
    seeds = [derive_rep_seed(42, i) for i in range(30)]
    assert len(set(seeds)) == 30


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(
        'node_count = 500\narea = [300, 200]\np_target = 0.3\n'
        'compromise_fractions = [0, 0.5]\n"mobility.speed_max" = 4.0\n'
        '[energy_costs]\nlong_tx = 9\n'
    )
    cfg = SimConfig.from_file(path)
    assert cfg.node_count == 500 and cfg.area == (300.0, 200.0)
    assert cfg.compromise_fractions == (0.0, 0.5)
    assert cfg.mobility.speed_max == 4.0 and cfg.mobility.speed_min == 0.5
    assert cfg.energy_costs.long_tx == 9


def test_config_unknown_key(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("nodes = 3\n")
    with pytest.raises(ConfigError) as err:
        SimConfig.from_file(path)
    assert err.value.field == "nodes"


def test_shipped_configs_load():
    from pathlib import Path
    root = Path(__file__).parents[1] / "configs"
    for f in root.glob("*.toml"):
        SimConfig.from_file(f)


def test_invariant_checker_flags_asymmetry():
    s = make_state([(0, 0), (1, 0), (2, 0)], edges=[(0, 1)])
    check_invariants(s)
    s.rings[1].pairwise[0] = 999
    with pytest.raises(InvariantError, match="asymmetric"):
        check_invariants(s)


def test_node_view():
    s = make_state([(0, 0), (3, 4)], edges=[(0, 1)])
    node = s.node(1)
    assert tuple(node.pos) == (3.0, 4.0)
    assert node.cluster == 0 and node.key_ring.pairwise == {0: 1}
    assert node.status.name == "ACTIVE" and node.radio.name == "SHORT"
    assert s.node(0).radio.name == "LONG"
