"""Shared electrical model types for the step-up converter toolkit.

All quantities are stored in SI base units (V, A, H, F, Hz, s, Ω); no
scaled units appear anywhere internally.  Every type is immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields
from typing import Mapping, Optional


class ParameterError(ValueError):
    """Raised when converter parameters violate their physical bounds.

    ``violations`` holds one human-readable message per offending field.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


PARAM_FIELDS = ("vin", "duty", "n", "l1", "lm", "lk",
                "c1", "c2", "c3", "c4", "rl", "fs")


@dataclass(frozen=True)
class ConverterParams:
    """Full electrical parameter set of the converter.

    vin   source voltage, V (> 0)
    duty  switch duty ratio, dimensionless, open interval (0, 1)
    n     coupled-inductor turns ratio, secondary volts per primary volt (> 0)
    l1    filter inductor, H (> 0)
    lm    magnetizing inductance, H (> 0)
    lk    leakage inductance, H (>= 0)
    c1..c4  capacitances, F (> 0)
    rl    load resistance, Ω (> 0)
    fs    switching frequency, Hz (> 0)
    """

    vin: float
    duty: float
    n: float
    l1: float
    lm: float
    lk: float
    c1: float
    c2: float
    c3: float
    c4: float
    rl: float
    fs: float

    def __post_init__(self):
        violations = []
        positive = ("vin", "n", "l1", "lm", "c1", "c2", "c3", "c4", "rl", "fs")
        for name in positive:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0.0):
                violations.append(f"{name}={v!r} out of (0, inf)")
        if not (isinstance(self.lk, (int, float)) and self.lk >= 0.0):
            violations.append(f"lk={self.lk!r} out of [0, inf)")
        if not (isinstance(self.duty, (int, float)) and 0.0 < self.duty < 1.0):
            violations.append(f"duty={self.duty!r} out of (0,1)")
        if violations:
            raise ParameterError(violations)

    @property
    def period(self) -> float:
        """Switching period T = 1/fs, seconds."""
        return 1.0 / self.fs

    @property
    def coupling(self) -> float:
        """Coupling coefficient k = lm/(lm+lk); equals 1 exactly when lk = 0."""
        return self.lm / (self.lm + self.lk)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def validate_params(raw: Mapping[str, float]) -> ConverterParams:
    """Validate a flat field map and build ConverterParams.

    Raises ParameterError listing every violation: unknown keys, missing
    keys, and per-field range violations.  Out-of-range values are never
    silently clamped.
    """
    violations = []
    unknown = sorted(set(raw) - set(PARAM_FIELDS))
    missing = sorted(set(PARAM_FIELDS) - set(raw))
    for k in unknown:
        violations.append(f"unknown field {k!r}")
    for k in missing:
        violations.append(f"missing field {k!r}")
    if violations:
        raise ParameterError(violations)
    return ConverterParams(**{k: float(raw[k]) for k in PARAM_FIELDS})


@dataclass(frozen=True)
class StateVector:
    """Continuous state of the converter at one instant.

    t      time, s
    i_l1   filter inductor current, A
    i_lk   coupled-inductor primary current (through the leakage), A
    i_lm   magnetizing current, A
    v_c1..v_c4  capacitor voltages, V
    """

    t: float
    i_l1: float
    i_lk: float
    i_lm: float
    v_c1: float
    v_c2: float
    v_c3: float
    v_c4: float

    @property
    def v_o(self) -> float:
        """Output voltage across the series pair (C2, C3)."""
        return self.v_c2 + self.v_c3

    def i_s(self, n: float) -> float:
        """Secondary winding current, (i_lk - i_lm)/n."""
        return (self.i_lk - self.i_lm) / n

    def i_o(self, rl: float) -> float:
        """Load current v_o/rl."""
        return self.v_o / rl


class Mode(enum.Enum):
    """The five conduction intervals of one CCM switching cycle.

    Pattern columns: (switch on, D1 on, D2 on, D3 on).  The legal
    transitions form the single cycle M1 -> M2 -> M3 -> M4 -> M5 -> M1.
    """

    M1 = 1
    M2 = 2
    M3 = 3
    M4 = 4
    M5 = 5

    @property
    def pattern(self) -> tuple[bool, bool, bool, bool]:
        return _MODE_PATTERNS[self]

    @property
    def s_on(self) -> bool:
        return self.pattern[0]

    @property
    def d1_on(self) -> bool:
        return self.pattern[1]

    @property
    def d2_on(self) -> bool:
        return self.pattern[2]

    @property
    def d3_on(self) -> bool:
        return self.pattern[3]

    @property
    def next(self) -> "Mode":
        return Mode(self.value % 5 + 1)


_MODE_PATTERNS = {
    Mode.M1: (True, False, True, False),
    Mode.M2: (True, False, False, True),
    Mode.M3: (False, True, False, True),
    Mode.M4: (False, True, True, False),
    Mode.M5: (False, False, True, False),
}


@dataclass(frozen=True)
class SteadyStateReport:
    """Closed-form steady-state quantities for one parameter set.

    Voltages in V, currents in A, inductances in H, capacitances in F.
    ``estimate`` fields carry closed forms whose derivations are coarse;
    the simulator is the authority for them and the cross-validation
    report shows both values side by side.
    """

    v_c1: float
    v_c2: float
    v_c3: float
    v_c4: float
    v_o: float
    m: float
    v_s_stress: float
    v_d1_stress: float
    v_d2_stress: float
    v_d3_stress: float
    stress_polarity_note: str
    i_o: float
    i_lm_avg: float          # estimate
    di_l1: float
    di_lm: float
    i_d1_peak: float         # estimate
    i_d2_peak: float         # estimate
    i_d3_peak: float         # estimate
    i_s_peak: float          # estimate (equals i_d1_peak)
    d34: float               # estimate
    lm_min: float
    ccm: bool
    c1_min: Optional[float] = None
    c2_min: Optional[float] = None
    c3_min: Optional[float] = None
    c4_min: Optional[float] = None

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class SimMetrics:
    """Quantities measured over exactly one converged switching period.

    Shaped for field-by-field comparison against SteadyStateReport.
    Fractions d1..d5 are named-interval durations over the period;
    commutation_fraction collects the short intervals where the
    secondary is open while energy transfers between the multiplier
    diodes; coast_fraction is the all-off interval characteristic of
    discontinuous conduction.
    """

    regime: str
    v_c1_avg: float
    v_c2_avg: float
    v_c3_avg: float
    v_c4_avg: float
    v_o_avg: float
    gain: float
    i_l1_avg: float
    i_lk_avg: float
    i_lm_avg: float
    i_o_avg: float
    di_l1: float
    di_lm: float
    dv_c1: float
    dv_c2: float
    dv_c3: float
    dv_c4: float
    i_sw_peak: float
    i_d1_peak: float
    i_d2_peak: float
    i_d3_peak: float
    i_d1_avg: float
    i_d2_avg: float
    i_d3_avg: float
    i_c1_avg: float
    i_c2_avg: float
    i_c3_avg: float
    i_c4_avg: float
    i_c1_peak: float
    i_c2_peak: float
    i_c3_peak: float
    i_c4_peak: float
    v_l1_avg: float
    v_lk_avg: float
    v_lm_avg: float
    d1: float
    d2: float
    d3: float
    d4: float
    d5: float
    commutation_fraction: float
    coast_fraction: float
    d34: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
