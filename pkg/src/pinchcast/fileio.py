"""YAML readers for system configs, topologies and experiment specs.

Config files use the :class:`SystemConfig` field names; ``power_budget_dbm``
and ``noise_dbm`` are accepted as dBm aliases and converted at parse time.

Topology files list one entry per group, each a list of users given as
``[x, y]`` or ``[x, y, noise_dbm]`` (meters; dBm overrides the default noise):

    groups:
      - [[3.2, 1.0], [14.0, 5.2]]
      - [[8.0, 3.0, -85.0]]
    noise_dbm: -90     # optional file-wide default
"""
from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .config import CONFIG_FIELD_NAMES, SystemConfig, dbm_to_watts
from .errors import ConfigError, TopologyError
from .topology import Topology


def _load_yaml(path: str | Path) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return data


def config_from_dict(data: dict[str, Any]) -> SystemConfig:
    data = dict(data)
    if "power_budget_dbm" in data:
        if "power_budget_w" in data:
            raise ConfigError("give power_budget_dbm or power_budget_w, not both")
        data["power_budget_w"] = dbm_to_watts(float(data.pop("power_budget_dbm")))
    if "noise_dbm" in data:
        if "noise_w" in data:
            raise ConfigError("give noise_dbm or noise_w, not both")
        data["noise_w"] = dbm_to_watts(float(data.pop("noise_dbm")))
    unknown = set(data) - set(CONFIG_FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return SystemConfig(**data)


def load_config(path: str | Path) -> SystemConfig:
    return config_from_dict(_load_yaml(path))


def topology_from_dict(data: dict[str, Any], default_noise_w: float) -> Topology:
    if "groups" not in data:
        raise TopologyError("topology file needs a 'groups' key")
    file_noise = data.get("noise_dbm")
    base_noise = dbm_to_watts(float(file_noise)) if file_noise is not None else default_noise_w
    xyz: list[list[float]] = []
    noise: list[float] = []
    groups: list[tuple[int, ...]] = []
    idx = 0
    for gi, users in enumerate(data["groups"]):
        members = []
        for entry in users:
            if len(entry) not in (2, 3):
                raise TopologyError(
                    f"group {gi}: user entries must be [x, y] or [x, y, noise_dbm], got {entry}"
                )
            xyz.append([float(entry[0]), float(entry[1]), 0.0])
            noise.append(dbm_to_watts(float(entry[2])) if len(entry) == 3 else base_noise)
            members.append(idx)
            idx += 1
        groups.append(tuple(members))
    return Topology(groups=tuple(groups), user_xyz_m=np.array(xyz), noise_w=np.array(noise))


def load_topology(path: str | Path, config: SystemConfig | None = None) -> Topology:
    default_noise = (config or SystemConfig()).noise_w
    return topology_from_dict(_load_yaml(path), default_noise)


def topology_to_dict(topology: Topology) -> dict[str, Any]:
    groups = []
    for members in topology.groups:
        users = []
        for k in members:
            x, y, _ = topology.user_xyz_m[k]
            users.append([float(x), float(y)])
        groups.append(users)
    noise = topology.noise_w
    out: dict[str, Any] = {"groups": groups}
    if not np.allclose(noise, noise[0]):
        # per-user noise: re-emit as triples
        out["groups"] = [
            [
                [float(topology.user_xyz_m[k][0]), float(topology.user_xyz_m[k][1]),
                 float(10.0 * np.log10(noise[k]) + 30.0)]
                for k in members
            ]
            for members in topology.groups
        ]
    return out


def save_topology(topology: Topology, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(topology_to_dict(topology), fh, sort_keys=False)
