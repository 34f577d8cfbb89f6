"""Named costmap configurations for the ablation and live-replay tables.

Ablation table (reference ``Base``):

    Base  L+S    fixed radius
    A1    L+S    corridor-width radius
    A2    L+S+D  fixed radius
    A3    L+S+D  corridor-width radius
    A4    D      corridor-width radius
    A5    L+S+D  class-aware radii
    A6    D      class-aware radii

Live-replay table (reference ``L``, all fixed radius unless noted):

    L        LiDAR only
    L+S      LiDAR + gated ToF
    L+D      LiDAR + gated ToF + learned depth on ToF-rejected pixels
    D        calibrated learned depth at every pixel, nothing else
    L+D+dyn  as L+D with class-aware radii and an enlarged person radius

Table names describe the learned-depth contribution, so ``L+D`` keeps the
gated ToF points; ``D`` replaces all depth sensing with the prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..costmap import Sources, Strategy
from ..errors import ConfigurationError

LS = Sources.L | Sources.S
LSD = Sources.L | Sources.S | Sources.D


@dataclass(frozen=True)
class NamedConfig:
    name: str
    sources: Sources
    strategy: Strategy
    reference: str


CONFIGURATIONS: dict[str, NamedConfig] = {
    c.name: c
    for c in (
        NamedConfig("Base", LS, Strategy.FIXED, "Base"),
        NamedConfig("A1", LS, Strategy.CORRIDOR_WIDTH, "Base"),
        NamedConfig("A2", LSD, Strategy.FIXED, "Base"),
        NamedConfig("A3", LSD, Strategy.CORRIDOR_WIDTH, "Base"),
        NamedConfig("A4", Sources.D, Strategy.CORRIDOR_WIDTH, "Base"),
        NamedConfig("A5", LSD, Strategy.CLASS_AWARE, "Base"),
        NamedConfig("A6", Sources.D, Strategy.CLASS_AWARE, "Base"),
        NamedConfig("L", Sources.L, Strategy.FIXED, "L"),
        NamedConfig("L+S", LS, Strategy.FIXED, "L"),
        NamedConfig("L+D", LSD, Strategy.FIXED, "L"),
        NamedConfig("D", Sources.D, Strategy.FIXED, "L"),
        NamedConfig("L+D+dyn", LSD, Strategy.DYNAMIC, "L"),
    )
}

# Sources used when a frame's scale estimate is rejected.
FALLBACK_SOURCES = LS


def resolve(name: str) -> NamedConfig:
    try:
        return CONFIGURATIONS[name]
    except KeyError:
        raise ConfigurationError(f"unknown configuration {name!r}; known: {', '.join(CONFIGURATIONS)}") from None


def parse_list(text: str) -> list[str]:
    names = [n.strip() for n in text.split(",") if n.strip()]
    if not names:
        raise ConfigurationError("empty configuration list")
    for n in names:
        resolve(n)
    return names


def help_table() -> str:
    rows = []
    for c in CONFIGURATIONS.values():
        src = "+".join(s.name for s in (Sources.L, Sources.S, Sources.D) if s in c.sources)
        rows.append(f"  {c.name:<8} sources={src:<6} inflation={c.strategy.value:<15} reference={c.reference}")
    return "\n".join(rows)
