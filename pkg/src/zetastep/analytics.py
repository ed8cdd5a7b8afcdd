"""Closed-form steady-state analysis and design bounds.

Every function evaluates an algebraic expression of the converter
parameters under the ripple-free idealization (capacitor voltages and
inductor currents treated as constant within a switching interval, all
elements lossless).  Quantities whose derivations are coarse are marked
"estimate" and are cross-checked against the time-domain simulator
rather than trusted outright.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import ConverterParams, SteadyStateReport

STRESS_POLARITY_NOTE = (
    "stresses reported as magnitudes; the blocking voltage of the switch "
    "and each diode is negative in the device reference direction"
)


@dataclass(frozen=True)
class DesignRipple:
    """Allowed peak-to-peak capacitor voltage ripple, volts (> 0)."""

    v_ppc: float

    def __post_init__(self):
        if not self.v_ppc > 0.0:
            raise ValueError(f"v_ppc={self.v_ppc!r} out of (0, inf)")


def gain(duty: float, n: float) -> float:
    """Ideal CCM voltage gain M = (n + 2*duty)/(1 - duty)."""
    if not 0.0 < duty < 1.0:
        raise ValueError(f"duty={duty!r} out of (0,1)")
    if not n > 0.0:
        raise ValueError(f"n={n!r} out of (0, inf)")
    return (n + 2.0 * duty) / (1.0 - duty)


def cap_voltages(p: ConverterParams) -> dict:
    """Steady capacitor voltages and output voltage.

    v_c1 = v_c4 = D/(1-D)*vin, v_c2 = (n+2)*D/(1-D)*vin, v_c3 = n*vin,
    v_o = v_c2 + v_c3.
    """
    d, nn, vin = p.duty, p.n, p.vin
    ratio = d / (1.0 - d)
    v_c4 = ratio * vin
    v_c1 = ratio * vin
    v_c2 = (nn + 2.0) * ratio * vin
    v_c3 = nn * vin
    return {
        "v_c1": v_c1,
        "v_c2": v_c2,
        "v_c3": v_c3,
        "v_c4": v_c4,
        "v_o": v_c2 + v_c3,
    }


def device_stresses(p: ConverterParams) -> dict:
    """Peak blocking-voltage magnitudes of the switch and diodes.

    |V_S| = |V_D1| = vin/(1-D); |V_D2| = (1+n)*vin/(1-D);
    |V_D3| = n*vin/(1-D).
    """
    base = p.vin / (1.0 - p.duty)
    return {
        "v_s": base,
        "v_d1": base,
        "v_d2": (1.0 + p.n) * base,
        "v_d3": p.n * base,
        "polarity": STRESS_POLARITY_NOTE,
    }


def load_current(p: ConverterParams) -> float:
    """Average load current i_o = v_o/rl with v_o from the gain formula."""
    return gain(p.duty, p.n) * p.vin / p.rl


def avg_magnetizing_current(p: ConverterParams) -> float:
    """Average magnetizing current, I_o*(2D + n - 1)/D.  Estimate:
    the simulator is the authority; the cross-validation report carries
    the measured value alongside this one."""
    i_o = load_current(p)
    return i_o * (2.0 * p.duty + p.n - 1.0) / p.duty


def inductor_ripples(p: ConverterParams) -> dict:
    """Peak-to-peak current ripples di_l1 = D*vin/(l1*fs),
    di_lm = D*vin/(lm*fs)."""
    vs = p.duty * p.vin / p.fs
    return {"di_l1": vs / p.l1, "di_lm": vs / p.lm}


def peak_currents(p: ConverterParams) -> dict:
    """Peak device currents (estimates, cross-checked by simulation).

    i_d3_peak = 2*I_o/D
    i_d2_peak = 2*I_o*n/(D*(n+1))
    i_d1_peak = i_s_peak = 2*n*I_o/D + D*vin/(fs*lm) + D*vin/(l1*fs)
    """
    i_o = load_current(p)
    d, nn = p.duty, p.n
    ripple_terms = d * p.vin / (p.fs * p.lm) + d * p.vin / (p.l1 * p.fs)
    i_d1 = 2.0 * nn * i_o / d + ripple_terms
    return {
        "i_d3_peak": 2.0 * i_o / d,
        "i_d2_peak": 2.0 * i_o * nn / (d * (nn + 1.0)),
        "i_d1_peak": i_d1,
        "i_s_peak": i_d1,
    }


def clamp_interval_fraction(p: ConverterParams) -> float:
    """Combined duration fraction of the clamp intervals (estimate).

    d34 = 2 / ( 2n/D + D*rl*(1-D)/(fs*(lm||l1)*(n+D)) ), with lm||l1 the
    parallel combination lm*l1/(lm+l1).
    """
    d, nn = p.duty, p.n
    l_par = p.lm * p.l1 / (p.lm + p.l1)
    denom = 2.0 * nn / d + d * p.rl * (1.0 - d) / (p.fs * l_par * (nn + d))
    return 2.0 / denom


def ccm_min_Lm(p: ConverterParams) -> float:
    """Minimum magnetizing inductance for continuous conduction.

    lm_min = D^2*vin / (2*(2D+n-1)*I_o*fs).  Raises on zero load current
    (no finite bound exists at no load).
    """
    i_o = load_current(p)
    if i_o <= 0.0:
        raise ValueError("no finite CCM bound at zero load current")
    return p.duty ** 2 * p.vin / (2.0 * (2.0 * p.duty + p.n - 1.0) * i_o * p.fs)


def min_capacitances(p: ConverterParams, r: DesignRipple) -> dict:
    """Worst-case minimum capacitances for a peak-to-peak ripple v_ppc.

    c1_min = c4_min = (1/(v_ppc*fs)) * ( D^2/(lm*fs) + 2n(n+2D)/(rl*(1-D)) )
    c2_min = 2n(n+2D)/(v_ppc*fs*rl*D*(1+n))
    c3_min = 2(n+2D)/(v_ppc*fs*rl*(1-D))
    """
    d, nn, v = p.duty, p.n, r.v_ppc
    c14 = (1.0 / (v * p.fs)) * (d ** 2 / (p.lm * p.fs)
                                + 2.0 * nn * (nn + 2.0 * d) / (p.rl * (1.0 - d)))
    c2 = 2.0 * nn * (nn + 2.0 * d) / (v * p.fs * p.rl * d * (1.0 + nn))
    c3 = 2.0 * (nn + 2.0 * d) / (v * p.fs * p.rl * (1.0 - d))
    return {"c1_min": c14, "c2_min": c2, "c3_min": c3, "c4_min": c14}


def full_report(p: ConverterParams,
                r: Optional[DesignRipple] = None) -> SteadyStateReport:
    """Aggregate every closed-form quantity into one report.

    Capacitor minima are included only when a ripple target is given.
    """
    caps = cap_voltages(p)
    stresses = device_stresses(p)
    ripples = inductor_ripples(p)
    peaks = peak_currents(p)
    lm_min = ccm_min_Lm(p)
    cmins = min_capacitances(p, r) if r is not None else {}
    return SteadyStateReport(
        v_c1=caps["v_c1"],
        v_c2=caps["v_c2"],
        v_c3=caps["v_c3"],
        v_c4=caps["v_c4"],
        v_o=caps["v_o"],
        m=gain(p.duty, p.n),
        v_s_stress=stresses["v_s"],
        v_d1_stress=stresses["v_d1"],
        v_d2_stress=stresses["v_d2"],
        v_d3_stress=stresses["v_d3"],
        stress_polarity_note=STRESS_POLARITY_NOTE,
        i_o=load_current(p),
        i_lm_avg=avg_magnetizing_current(p),
        di_l1=ripples["di_l1"],
        di_lm=ripples["di_lm"],
        i_d1_peak=peaks["i_d1_peak"],
        i_d2_peak=peaks["i_d2_peak"],
        i_d3_peak=peaks["i_d3_peak"],
        i_s_peak=peaks["i_s_peak"],
        d34=clamp_interval_fraction(p),
        lm_min=lm_min,
        ccm=p.lm >= lm_min,
        c1_min=cmins.get("c1_min"),
        c2_min=cmins.get("c2_min"),
        c3_min=cmins.get("c3_min"),
        c4_min=cmins.get("c4_min"),
    )
