"""Scenario builders shared by several test modules."""

from __future__ import annotations

import dataclasses

from hems.cli import shipped_scenario
from hems.domain import Profile, ScenarioConfig, TimeGrid
from hems.ingestion import load_scenario


def shipped(name: str) -> ScenarioConfig:
    return load_scenario(shipped_scenario(name))


def truncated(config: ScenarioConfig, horizon: int, start: int = 1) -> ScenarioConfig:
    """Window ``start .. start+horizon-1`` of ``config`` renumbered from 1.

    Appliance windows and storage availability are clipped to the window;
    devices left with nothing to do are dropped, as are precedences that
    lose an appliance.
    """
    offset = start - 1
    keep = range(start, start + horizon)

    def shift(ts):
        return tuple(t - offset for t in ts if t in keep)

    profiles = {
        k: Profile(k, p.values[offset: offset + horizon]) for k, p in config.profiles.items()
    }
    apps = []
    for app in config.appliances:
        window = shift(app.allowed_window)
        if len(window) >= app.required_runtime:
            apps.append(dataclasses.replace(app, allowed_window=window))
    names = {a.name for a in apps}
    precs = tuple(p for p in config.precedences if p.first in names and p.second in names)
    storages = []
    for dev in config.storages:
        avail = shift(dev.availability)
        if not avail:
            continue
        deadline = dev.full_charge_deadline
        deadline = deadline - offset if deadline is not None and deadline in keep else None
        storages.append(dataclasses.replace(dev, availability=avail, full_charge_deadline=deadline))
    return dataclasses.replace(
        config,
        name=f"{config.name}_h{horizon}",
        grid=TimeGrid(horizon, config.grid.interval_hours),
        profiles=profiles,
        appliances=tuple(apps),
        precedences=precs,
        storages=tuple(storages),
    )
