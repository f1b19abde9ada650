import numpy as np
import pytest

from pinchcast import SystemConfig, Topology


@pytest.fixture
def small_config() -> SystemConfig:
    return SystemConfig(waveguide_length_m=10.0, grid_points=50, num_antennas=2)


def make_topology(rng: np.random.Generator, config: SystemConfig, groups: list[int]) -> Topology:
    """Random uniform drop with the given per-group user counts."""
    k = sum(groups)
    xy = rng.random((k, 2)) * [config.waveguide_length_m, config.region_depth_m]
    xyz = np.column_stack([xy, np.zeros(k)])
    members = []
    idx = 0
    for size in groups:
        members.append(tuple(range(idx, idx + size)))
        idx += size
    return Topology(groups=tuple(members), user_xyz_m=xyz, noise_w=np.full(k, config.noise_w))
