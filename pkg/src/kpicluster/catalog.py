"""KPI identifiers and the default 11-metric catalog."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path


class Category(str, Enum):
    CPU_USAGE = "CpuUsage"
    NETWORK_TRAFFIC = "NetworkTraffic"
    IPMI = "Ipmi"
    SYSTEM_LOAD = "SystemLoad"
    MEMORY_USAGE = "MemoryUsage"


@dataclass(frozen=True, order=True)
class KpiId:
    name: str
    category: Category

    def to_dict(self) -> dict:
        return {"name": self.name, "category": self.category.value}


DEFAULT_CATALOG: tuple[KpiId, ...] = (
    KpiId("aggregation.cpu-average.percent.idle", Category.CPU_USAGE),
    KpiId("aggregation.cpu-average.percent.system", Category.CPU_USAGE),
    KpiId("aggregation.cpu-average.percent.wait", Category.CPU_USAGE),
    KpiId("interface.bond0.if_octets.rx", Category.NETWORK_TRAFFIC),
    KpiId("interface.bond0.if_octets.tx", Category.NETWORK_TRAFFIC),
    KpiId("ipmi.CPU1_Temp", Category.IPMI),
    KpiId("ipmi.CPU2_Temp", Category.IPMI),
    KpiId("ipmi.PW_consumption", Category.IPMI),
    KpiId("ipmi.System_Temp", Category.IPMI),
    KpiId("load.load.shortterm", Category.SYSTEM_LOAD),
    KpiId("memory.cached.memory", Category.MEMORY_USAGE),
)

_CANONICAL = {k.name: k.category for k in DEFAULT_CATALOG}


def validate_catalog(catalog) -> list[KpiId]:
    """Check names are unique and canonical names carry their canonical category."""
    catalog = list(catalog)
    seen = set()
    for kpi in catalog:
        if kpi.name in seen:
            raise ValueError(f"duplicate KPI name in catalog: {kpi.name}")
        seen.add(kpi.name)
        expected = _CANONICAL.get(kpi.name)
        if expected is not None and kpi.category is not expected:
            raise ValueError(
                f"KPI {kpi.name} must have category {expected.value}, "
                f"got {kpi.category.value}"
            )
    return catalog


def load_catalog(path) -> list[KpiId]:
    with open(path) as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise ValueError("catalog JSON must be an array of {name, category}")
    return validate_catalog(
        KpiId(str(e["name"]), Category(e["category"])) for e in entries
    )


def save_catalog(catalog, path) -> None:
    Path(path).write_text(json.dumps([k.to_dict() for k in catalog], indent=2) + "\n")
