"""Component sizing from user requirements, with simulation verification.

Given a source voltage, output target, load, switching frequency and
ripple limits, the sizing procedure produces duty/turns-ratio candidates,
minimum magnetizing inductance and capacitances (with explicit safety
margins), device stress ratings, and optionally a time-domain check of
each candidate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .model import ConverterParams
from . import analytics
from . import simulator

D_MAX_DEFAULT = 0.9
LM_MARGIN = 2.0          # chosen lm = margin * lm_min
CAP_MARGIN = 2.0         # chosen capacitors = margin * minimum
LEAKAGE_RATIO = 1.0 / 300.0   # lk = lm * ratio for verification candidates


@dataclass(frozen=True)
class DesignSpec:
    """Requirements for the sizing procedure.

    vin           source voltage, V
    v_o_target    output voltage target, V (must exceed vin)
    rl / p_o      load: resistance (Ω) or output power (W); exactly one
    fs            switching frequency, Hz
    v_ppc         allowed peak-to-peak capacitor ripple, V
    ripple_fraction  allowed filter-inductor current ripple as a fraction
                     of the average input current
    n_candidates  turns ratios to evaluate
    d_max         duty-cycle cap (extreme duty degrades switching)
    """

    vin: float
    v_o_target: float
    fs: float
    v_ppc: float
    rl: Optional[float] = None
    p_o: Optional[float] = None
    ripple_fraction: float = 0.4
    n_candidates: tuple[float, ...] = (1.0, 2.0, 3.0)
    d_max: float = D_MAX_DEFAULT

    def __post_init__(self):
        problems = []
        if not self.vin > 0:
            problems.append(f"vin={self.vin!r} out of (0, inf)")
        if not self.v_o_target > self.vin:
            problems.append(
                f"v_o_target={self.v_o_target!r} must exceed vin (step-up)")
        if not self.fs > 0:
            problems.append(f"fs={self.fs!r} out of (0, inf)")
        if not self.v_ppc > 0:
            problems.append(f"v_ppc={self.v_ppc!r} out of (0, inf)")
        if (self.rl is None) == (self.p_o is None):
            problems.append("specify exactly one of rl or p_o")
        elif self.rl is not None and not self.rl > 0:
            problems.append(f"rl={self.rl!r} out of (0, inf)")
        elif self.p_o is not None and not self.p_o > 0:
            problems.append(f"p_o={self.p_o!r} out of (0, inf)")
        if not 0 < self.ripple_fraction:
            problems.append("ripple_fraction must be positive")
        if not 0 < self.d_max < 1:
            problems.append("d_max must lie in (0,1)")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def load_resistance(self) -> float:
        if self.rl is not None:
            return self.rl
        return self.v_o_target ** 2 / self.p_o

    @property
    def i_o(self) -> float:
        return self.v_o_target / self.load_resistance


def solve_duty(m_target: float, n: float, d_max: float = D_MAX_DEFAULT) -> float:
    """Invert the gain law: D = (M - n)/(M + 2).

    Raises ValueError when the required duty falls outside (0, d_max].
    """
    if not n > 0:
        raise ValueError(f"n={n!r} out of (0, inf)")
    d = (m_target - n) / (m_target + 2.0)
    if d <= 0.0:
        raise ValueError(
            f"infeasible: target gain {m_target!r} needs duty {d:.4f} <= 0 "
            f"at n={n!r}")
    if d > d_max:
        raise ValueError(
            f"infeasible: target gain {m_target!r} needs duty {d:.4f} > "
            f"d_max={d_max!r} at n={n!r}")
    return d


@dataclass(frozen=True)
class DesignCandidate:
    """Sizing outcome for one turns ratio."""

    n: float
    feasible: bool
    reason: str = ""
    duty: Optional[float] = None
    i_o: Optional[float] = None
    lm_min: Optional[float] = None
    lm_chosen: Optional[float] = None
    lk_chosen: Optional[float] = None
    l1_min: Optional[float] = None
    l1_chosen: Optional[float] = None
    c1_min: Optional[float] = None
    c2_min: Optional[float] = None
    c3_min: Optional[float] = None
    c4_min: Optional[float] = None
    c1_chosen: Optional[float] = None
    c2_chosen: Optional[float] = None
    c3_chosen: Optional[float] = None
    c4_chosen: Optional[float] = None
    v_s_stress: Optional[float] = None
    v_d1_stress: Optional[float] = None
    v_d2_stress: Optional[float] = None
    v_d3_stress: Optional[float] = None
    i_d1_peak: Optional[float] = None
    i_d2_peak: Optional[float] = None
    i_d3_peak: Optional[float] = None
    ccm_margin: Optional[float] = None

    def to_params(self, spec: DesignSpec) -> ConverterParams:
        if not self.feasible:
            raise ValueError(f"candidate n={self.n} is infeasible: {self.reason}")
        return ConverterParams(
            vin=spec.vin, duty=self.duty, n=self.n,
            l1=self.l1_chosen, lm=self.lm_chosen, lk=self.lk_chosen,
            c1=self.c1_chosen, c2=self.c2_chosen,
            c3=self.c3_chosen, c4=self.c4_chosen,
            rl=spec.load_resistance, fs=spec.fs)


@dataclass(frozen=True)
class DesignResult:
    spec: DesignSpec
    candidates: tuple[DesignCandidate, ...]

    @property
    def feasible(self) -> bool:
        return any(c.feasible for c in self.candidates)


def size_converter(spec: DesignSpec) -> DesignResult:
    """Size every turns-ratio candidate against the requirements.

    Margins: lm = 2x its CCM minimum, capacitors = 2x their ripple minima.
    The filter inductor is chosen so its current ripple stays below
    ripple_fraction of the average input current (a toolkit rule; only the
    magnetizing inductance and capacitors have first-principles minima).
    """
    m_target = spec.v_o_target / spec.vin
    rl = spec.load_resistance
    candidates = []
    for n in spec.n_candidates:
        try:
            d = solve_duty(m_target, n, spec.d_max)
        except ValueError as e:
            candidates.append(DesignCandidate(n=n, feasible=False,
                                              reason=str(e)))
            continue
        # lm sizing needs the full parameter set only for bookkeeping;
        # evaluate the closed forms through a provisional parameter object
        lm_min = d ** 2 * spec.vin / (2.0 * (2.0 * d + n - 1.0)
                                      * spec.i_o * spec.fs)
        lm_chosen = LM_MARGIN * lm_min
        i_in_avg = spec.v_o_target * spec.i_o / spec.vin
        l1_min = d * spec.vin / (spec.fs * spec.ripple_fraction * i_in_avg)
        l1_chosen = l1_min
        p = ConverterParams(
            vin=spec.vin, duty=d, n=n, l1=l1_chosen, lm=lm_chosen,
            lk=lm_chosen * LEAKAGE_RATIO,
            c1=1.0, c2=1.0, c3=1.0, c4=1.0,    # placeholders for the c-minima
            rl=rl, fs=spec.fs)
        cmins = analytics.min_capacitances(p, analytics.DesignRipple(spec.v_ppc))
        stresses = analytics.device_stresses(p)
        peaks = analytics.peak_currents(p)
        candidates.append(DesignCandidate(
            n=n, feasible=True, duty=d, i_o=spec.i_o,
            lm_min=lm_min, lm_chosen=lm_chosen,
            lk_chosen=lm_chosen * LEAKAGE_RATIO,
            l1_min=l1_min, l1_chosen=l1_chosen,
            c1_min=cmins["c1_min"], c2_min=cmins["c2_min"],
            c3_min=cmins["c3_min"], c4_min=cmins["c4_min"],
            c1_chosen=CAP_MARGIN * cmins["c1_min"],
            c2_chosen=CAP_MARGIN * cmins["c2_min"],
            c3_chosen=CAP_MARGIN * cmins["c3_min"],
            c4_chosen=CAP_MARGIN * cmins["c4_min"],
            v_s_stress=stresses["v_s"], v_d1_stress=stresses["v_d1"],
            v_d2_stress=stresses["v_d2"], v_d3_stress=stresses["v_d3"],
            i_d1_peak=peaks["i_d1_peak"], i_d2_peak=peaks["i_d2_peak"],
            i_d3_peak=peaks["i_d3_peak"],
            ccm_margin=lm_chosen / lm_min,
        ))
    return DesignResult(spec=spec, candidates=tuple(candidates))


@dataclass(frozen=True)
class VerificationEntry:
    n: float
    ok: bool
    error: str = ""
    regime: str = ""
    gain_target: Optional[float] = None
    gain_measured: Optional[float] = None
    gain_error_rel: Optional[float] = None
    cap_ripples: Optional[dict] = None
    v_ppc_target: Optional[float] = None
    ccm: Optional[bool] = None


def verify_design(result: DesignResult,
                  cfg: simulator.SimConfig = simulator.SimConfig()
                  ) -> list[VerificationEntry]:
    """Simulate each feasible candidate and compare against the targets.

    Per-candidate simulator failures are reported, never raised, so one
    bad candidate cannot abort the others.
    """
    spec = result.spec
    m_target = spec.v_o_target / spec.vin
    entries = []
    for cand in result.candidates:
        if not cand.feasible:
            entries.append(VerificationEntry(n=cand.n, ok=False,
                                             error="infeasible: " + cand.reason))
            continue
        try:
            p = cand.to_params(spec)
            res = simulator.run_to_steady_state(p, cfg)
        except simulator.SimulationError as e:
            entries.append(VerificationEntry(n=cand.n, ok=False, error=str(e)))
            continue
        m = res.metrics
        ripples = {"c1": m.dv_c1, "c2": m.dv_c2, "c3": m.dv_c3, "c4": m.dv_c4}
        entries.append(VerificationEntry(
            n=cand.n, ok=True, regime=res.regime,
            gain_target=m_target, gain_measured=m.gain,
            gain_error_rel=abs(m.gain - m_target) / m_target,
            cap_ripples=ripples, v_ppc_target=spec.v_ppc,
            ccm=res.regime == "CCM",
        ))
    return entries
