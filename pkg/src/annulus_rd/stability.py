"""Linear stability of the uniform steady state of the activator-depleted model.

Kinetics: f = alpha - u + u^2 v, g = beta - u^2 v, with reaction scaling
gamma and diffusion ratio d. The uniform steady state is
(u_s, v_s) = (alpha+beta, beta/(alpha+beta)^2). Linearizing about it and
projecting on an eigenmode with eigenvalue eta^2 gives the 2x2 matrix

    [ gamma (beta-alpha)/s - eta^2      gamma s^2          ]
    [ -2 gamma beta / s                 -gamma s^2 - d eta^2 ]

with s = alpha + beta. Its trace is
T = gamma (beta - alpha - s^3)/s - (d+1) eta^2 and its determinant is
computed here in two switchable forms: `consistent` takes the second
factor's diffusion term from the matrix (d eta^2), `paper-literal`
reproduces a printed variant with (d+1) eta^2 in that slot. The two agree
exactly at eta^2 = 0 and define slightly different partitions otherwise;
both are first-class so their predictions can be compared.

Growth rates are the printed root formula sigma = (T +- sqrt(T^2-4D))/2,
so sigma1+sigma2 = T and sigma1*sigma2 = D.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .spectrum import ModeIndex, eigenvalue_via_weighting

FORMS = ("consistent", "paper-literal")


class StabilityError(ValueError):
    """Invalid kinetic parameters or classification inputs."""


@dataclass(frozen=True)
class KineticParams:
    """Kinetic constants: feed rates alpha, beta; scaling gamma; ratio d."""

    alpha: float
    beta: float
    gamma: float
    d: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "d"):
            if not (getattr(self, name) > 0.0):
                raise StabilityError(f"{name} must be strictly positive, got {getattr(self, name)}")


def reaction_terms(params: KineticParams, u, v):
    """Kinetic right-hand sides (f, g) = (alpha - u + u^2 v, beta - u^2 v)."""
    uuv = u * u * v
    return params.alpha - u + uuv, params.beta - uuv


@dataclass(frozen=True)
class SteadyState:
    """The positive uniform steady state."""

    u_s: float
    v_s: float


def steady_state(params: KineticParams) -> SteadyState:
    """(u_s, v_s) = (alpha+beta, beta/(alpha+beta)^2); kills both kinetics."""
    s = params.alpha + params.beta
    if s <= 0.0:
        raise StabilityError("alpha + beta must be positive")
    return SteadyState(s, params.beta / (s * s))


def trace_det(params: KineticParams, eta_sq: float, form: str = "consistent") -> tuple[float, float]:
    """Trace and determinant of the linearization at the steady state.

    form selects how the (2,2) entry's diffusion term enters the
    determinant: 'consistent' uses d eta^2 (the matrix entry),
    'paper-literal' uses (d+1) eta^2 (the printed expression).
    """
    if form not in FORMS:
        raise StabilityError(f"form must be one of {FORMS}, got {form!r}")
    if not (eta_sq >= 0.0):
        raise StabilityError(f"eta_sq must be non-negative, got {eta_sq}")
    a, b, g, d = params.alpha, params.beta, params.gamma, params.d
    s = a + b
    T = g * (b - a - s**3) / s - (d + 1.0) * eta_sq
    diffusion = d * eta_sq if form == "consistent" else (d + 1.0) * eta_sq
    D = (g * (b - a) / s - eta_sq) * (-g * s * s - diffusion) + 2.0 * g * g * b * s
    return T, D


def roots(T: float, D: float) -> tuple[complex, complex]:
    """Growth rates sigma_{1,2} = (T +- sqrt(T^2 - 4D)) / 2."""
    disc = T * T - 4.0 * D
    if disc >= 0.0:
        sq = np.sqrt(disc)
        return complex((T + sq) / 2.0), complex((T - sq) / 2.0)
    sq = np.sqrt(-disc)
    return complex(T / 2.0, sq / 2.0), complex(T / 2.0, -sq / 2.0)


class StabilityLabel(str, Enum):
    STABLE_NODE = "StableNode"
    STABLE_SPIRAL = "StableSpiral"
    TURING = "TuringInstability"
    HOPF = "HopfInstability"
    TRANSCRITICAL_CURVE = "TranscriticalCurve"
    DISCRIMINANT_CURVE = "DiscriminantCurve"


@dataclass(frozen=True)
class StabilityVerdict:
    """Classification of one (params, eta^2) point."""

    trace: float
    determinant: float
    discriminant: float
    sigma1: complex
    sigma2: complex
    label: StabilityLabel


def _label_from_signs(T: float, D: float, disc: float, tol: float, scale: float) -> StabilityLabel:
    # disc has the dimensions of T^2, so its band is tol*scale
    if disc < -tol * scale:
        if T < -tol:
            return StabilityLabel.STABLE_SPIRAL
        if T > tol:
            return StabilityLabel.HOPF
        # on the trace-zero curve with complex roots; D > T^2/4 >= 0 holds
        return StabilityLabel.TRANSCRITICAL_CURVE
    if disc > tol * scale:
        if T < 0.0 and D > 0.0:
            return StabilityLabel.STABLE_NODE
        return StabilityLabel.TURING
    return StabilityLabel.DISCRIMINANT_CURVE


def classify_point(params: KineticParams, eta_sq: float, form: str = "consistent",
                   tol_curve: float | None = None) -> StabilityVerdict:
    """Classify the steady state for one eigenvalue eta^2.

    The two partitioning curves (trace zero with positive determinant, and
    discriminant zero) have measure zero, so membership is decided within a
    band: tol_curve defaults to 1e-6 * max(1, |T|, sqrt(|D|)). The label is
    a pure function of the signs of (discriminant, T, D) relative to that
    band.
    """
    T, D = trace_det(params, eta_sq, form)
    disc = T * T - 4.0 * D
    scale = max(1.0, abs(T), np.sqrt(abs(D)))
    tol = 1e-6 * scale if tol_curve is None else float(tol_curve)
    s1, s2 = roots(T, D)
    return StabilityVerdict(T, D, disc, s1, s2, _label_from_signs(T, D, disc, tol, scale))


@dataclass(frozen=True)
class MultimodeResult:
    """Most unstable verdict over modes k = 0..k_max at fixed order l."""

    selected_k: int
    verdict: StabilityVerdict
    per_mode: tuple[tuple[int, StabilityVerdict], ...]


def classify_multimode(params: KineticParams, l: float, k_max: int, a: float,
                       rho: float, form: str = "consistent") -> MultimodeResult:
    """Classify each mode k <= k_max and select the fastest-growing one.

    The selected verdict is the one whose largest real part of sigma is
    maximal; a point is unstable if any admitted mode destabilizes it, and
    the winning mode is the pattern one expects to see first.
    """
    if k_max < 0:
        raise StabilityError(f"k_max must be non-negative, got {k_max}")
    entries = []
    best = None
    best_growth = -np.inf
    for k in range(k_max + 1):
        eta_sq = eigenvalue_via_weighting(ModeIndex(k, l), a, rho)
        verdict = classify_point(params, eta_sq, form)
        entries.append((k, verdict))
        growth = max(verdict.sigma1.real, verdict.sigma2.real)
        if growth > best_growth:
            best_growth = growth
            best = (k, verdict)
    return MultimodeResult(best[0], best[1], tuple(entries))


# ---------------------------------------------------------------------------
# thickness thresholds
# ---------------------------------------------------------------------------

def _bound(factor: float, d: float, gamma: float, mode: ModeIndex, a: float) -> float:
    k, l = mode.k, mode.l
    num = factor * (d + 1.0) * (2 * k + 1) * (l + 2 * k + 1) * (l + 4 * k) \
        - gamma * a * a * (l + 4 * k + 2)
    return num / (gamma * a * (l + 4 * k + 2))


@dataclass(frozen=True)
class HopfAdmissibility:
    """Two predicates for temporal (Hopf/transcritical) bifurcation.

    paper_threshold is the quoted thickness threshold
    [8(d+1)(2k+1)(l+2k+1)(l+4k) - gamma a^2 (l+4k+2)] / (gamma a (l+4k+2)),
    and paper_admissible tests rho >= threshold. exact_admissible evaluates
    the operative inequality gamma > (d+1) eta^2(a, a+rho) with the true
    eigenvalue instead of its supremum bound. Because the quoted threshold
    uses a loose supremum, the two predicates can disagree near the
    boundary; both are reported.
    """

    paper_threshold: float
    paper_admissible: bool
    exact_admissible: bool


def hopf_admissibility(d: float, gamma: float, mode: ModeIndex, a: float,
                       rho: float) -> HopfAdmissibility:
    """Check thickness admissibility for temporal bifurcation, both ways."""
    threshold = _bound(8.0, d, gamma, mode, a)
    exact = gamma > (d + 1.0) * eigenvalue_via_weighting(mode, a, rho)
    return HopfAdmissibility(threshold, rho >= threshold, exact)


@dataclass(frozen=True)
class ThicknessBound:
    """A thickness bound with its feasibility flag (negative = no rho)."""

    bound: float
    feasible: bool


def turing_only_bound(d: float, gamma: float, mode: ModeIndex, a: float) -> ThicknessBound:
    """Thickness bound below which instability is restricted to Turing type.

    rho < [4(d+1)(2k+1)(l+2k+1)(l+4k) - gamma a^2 (l+4k+2)]/(gamma a (l+4k+2)).
    A negative bound means no thickness satisfies the condition; it is
    returned as-is with feasible=False.
    """
    value = _bound(4.0, d, gamma, mode, a)
    return ThicknessBound(value, value > 0.0)


def negative_l_bound(d: float, gamma: float, mode: ModeIndex, a: float) -> ThicknessBound:
    """Factor-8 variant of the thickness bound, used on the l < 0 branch."""
    value = _bound(8.0, d, gamma, mode, a)
    return ThicknessBound(value, value > 0.0)


@dataclass(frozen=True)
class RepeatedRootThreshold:
    """Thickness threshold for a stable repeated root, with its restriction.

    rho_stable_below is
    [8 or 4](d+1)(beta+alpha)(2k+1)(l+2k+1)(l+4k)
    / (gamma a (beta-alpha-(beta+alpha)^3)(l+4k+2)) - a.
    The threshold only applies when beta > alpha + (beta+alpha)^3
    (restriction_ok); otherwise it is NaN.
    """

    rho_stable_below: float
    restriction_ok: bool


def repeated_root_thresholds(params: KineticParams, mode: ModeIndex, a: float,
                             branch: str) -> RepeatedRootThreshold:
    """Thickness threshold for a stable repeated root on the given branch."""
    if branch == "negative-l":
        factor = 8.0
    elif branch == "positive-l":
        factor = 4.0
    else:
        raise StabilityError(f"branch must be 'negative-l' or 'positive-l', got {branch!r}")
    al, be, g = params.alpha, params.beta, params.gamma
    s = al + be
    margin = be - al - s**3
    if margin <= 0.0:
        return RepeatedRootThreshold(float("nan"), False)
    k, l = mode.k, mode.l
    num = factor * (params.d + 1.0) * s * (2 * k + 1) * (l + 2 * k + 1) * (l + 4 * k)
    den = g * a * margin * (l + 4 * k + 2)
    return RepeatedRootThreshold(num / den - a, True)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

VERDICT_CSV_HEADER = "alpha,beta,gamma,d,k,l,eta_sq,T,D,re_sigma1,im_sigma1,label"


def verdict_csv_row(params: KineticParams, mode: ModeIndex, eta_sq: float,
                    verdict: StabilityVerdict) -> str:
    """One CSV row matching VERDICT_CSV_HEADER."""
    cells = [params.alpha, params.beta, params.gamma, params.d, mode.k, mode.l,
             eta_sq, verdict.trace, verdict.determinant,
             verdict.sigma1.real, verdict.sigma1.imag]
    text = ",".join(format(c, ".10g") for c in cells)
    return f"{text},{verdict.label.value}"
