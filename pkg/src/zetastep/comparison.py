"""Voltage-gain and component-count comparison across step-up topologies.

Each competitor is modeled only by its ideal CCM gain formula and its
part count; internals are out of scope.  Turns-ratio-dependent formulas
receive the same n as the proposed converter when sweeping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence


@dataclass(frozen=True)
class TopologyModel:
    """One converter family: gain law and component counts."""

    id: str
    label: str
    gain_fn: Callable[[float, float], float]
    uses_n: bool
    switches: int
    diodes: int
    capacitors: int
    inductors: int
    coupled_inductor: bool


def _check_domain(duty: float, n: float, uses_n: bool) -> None:
    if not 0.0 < duty < 1.0:
        raise ValueError(f"duty={duty!r} out of (0,1)")
    if uses_n and not n > 0.0:
        raise ValueError(f"n={n!r} out of (0, inf)")


TOPOLOGIES: dict[str, TopologyModel] = {
    "boost": TopologyModel(
        id="boost", label="conventional boost",
        gain_fn=lambda d, n: 1.0 / (1.0 - d), uses_n=False,
        switches=1, diodes=1, capacitors=1, inductors=1,
        coupled_inductor=False),
    "ref5": TopologyModel(
        id="ref5", label="high-gain boost, continuous in/out current",
        gain_fn=lambda d, n: (2.0 + d) / (1.0 - d), uses_n=False,
        switches=1, diodes=2, capacitors=2, inductors=2,
        coupled_inductor=False),
    "ref14": TopologyModel(
        id="ref14", label="hybrid switched-inductor",
        gain_fn=lambda d, n: (1.0 + 2.0 * d) / (1.0 - d), uses_n=False,
        switches=1, diodes=4, capacitors=5, inductors=1,
        coupled_inductor=False),
    "ref15": TopologyModel(
        id="ref15", label="interleaved boost with coupled windings",
        gain_fn=lambda d, n: 2.0 / (1.0 - d) + n * d, uses_n=True,
        switches=2, diodes=4, capacitors=3, inductors=3,
        coupled_inductor=True),
    "ref16": TopologyModel(
        id="ref16", label="zero-bias coupled-inductor step-up",
        gain_fn=lambda d, n: (1.0 + n * d) / (1.0 - d), uses_n=True,
        switches=2, diodes=4, capacitors=4, inductors=3,
        coupled_inductor=False),
    "quadratic": TopologyModel(
        id="quadratic", label="quadratic boost",
        gain_fn=lambda d, n: 1.0 / (1.0 - d) ** 2, uses_n=False,
        switches=2, diodes=2, capacitors=2, inductors=2,
        coupled_inductor=False),
    "proposed": TopologyModel(
        id="proposed", label="coupled-inductor step-up (this toolkit)",
        gain_fn=lambda d, n: (n + 2.0 * d) / (1.0 - d), uses_n=True,
        switches=1, diodes=3, capacitors=4, inductors=1,
        coupled_inductor=True),
}


def gain_of(t: TopologyModel, duty: float, n: float = 1.0) -> float:
    """Ideal CCM gain of one topology at (duty, n)."""
    _check_domain(duty, n, t.uses_n)
    return t.gain_fn(duty, n)


def sweep_gain(topologies: Iterable[TopologyModel],
               duty_grid: Sequence[float],
               n: float) -> list[tuple[float, str, float]]:
    """Dense (duty, topology, gain) table for plotting gain-vs-duty curves."""
    rows = []
    for d in duty_grid:
        for t in topologies:
            rows.append((float(d), t.id, gain_of(t, float(d), n)))
    return rows


def sweep_to_csv(rows: list[tuple[float, str, float]]) -> str:
    lines = ["duty,topology,gain"]
    for d, tid, g in rows:
        lines.append(f"{d:.12g},{tid},{g:.12g}")
    return "\n".join(lines) + "\n"


def count_table() -> list[dict]:
    """Component counts and gain laws of every modeled topology."""
    out = []
    for t in TOPOLOGIES.values():
        out.append({
            "id": t.id,
            "label": t.label,
            "switches": t.switches,
            "diodes": t.diodes,
            "capacitors": t.capacitors,
            "inductors": t.inductors,
            "coupled_inductor": t.coupled_inductor,
        })
    return out
