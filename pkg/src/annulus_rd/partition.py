"""Classification of the (alpha, beta) parameter plane into stability regions.

A sweep evaluates the trace/determinant classification of `stability` on a
rectangular grid and returns an integer-coded region map. The boundaries
between regions are the two partitioning curves:

* discriminant zero, T^2 = 4D, separating real from complex growth rates;
* trace zero with positive determinant, the temporal-instability onset.

Both curves are extracted per alpha sample by two genuinely different
methods and cross-checked: clearing the (beta+alpha) denominators turns
T^2 - 4D into a degree-6 polynomial in beta (and T into a cubic), whose
roots come from the companion matrix; independently, sign changes of the
defining function along a fine beta grid are refined by bisection. The two
root sets must agree to 1e-8; a polynomial root with no sign-change partner
is accepted only if the defining equation is satisfied there (a tangency,
where bisection is blind), and any other disagreement aborts the run.

The sweep oracle `first_principles_labels` classifies every cell from the
eigenvalues of the assembled 2x2 linearization matrix instead of the closed
trace/determinant formulas, giving an independent code path that must match
the sweep cell for cell.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .geometry import AnnulusGeometry
from .spectrum import ModeIndex, eigenvalue
from .stability import FORMS, StabilityLabel

LABEL_CODES = {
    StabilityLabel.STABLE_NODE: 0,
    StabilityLabel.STABLE_SPIRAL: 1,
    StabilityLabel.TURING: 2,
    StabilityLabel.HOPF: 3,
    StabilityLabel.TRANSCRITICAL_CURVE: 4,
    StabilityLabel.DISCRIMINANT_CURVE: 5,
}
CODE_LABELS = {v: k for k, v in LABEL_CODES.items()}


class PartitionError(RuntimeError):
    """Sweep or curve extraction failed its internal cross-checks."""


@dataclass(frozen=True)
class SweepSpec:
    """A rectangular (alpha, beta) sweep at fixed (gamma, d, mode, geometry).

    Grid nodes are linspace(min, max, n) inclusive of both ends; window
    minima must be strictly positive (the kinetics are only defined there).
    """

    alpha_min: float
    alpha_max: float
    beta_min: float
    beta_max: float
    n_alpha: int
    n_beta: int
    gamma: float
    d: float
    mode: ModeIndex
    geom: AnnulusGeometry
    form: str = "consistent"

    def __post_init__(self):
        if not (0.0 < self.alpha_min < self.alpha_max):
            raise PartitionError(f"need 0 < alpha_min < alpha_max, got [{self.alpha_min}, {self.alpha_max}]")
        if not (0.0 < self.beta_min < self.beta_max):
            raise PartitionError(f"need 0 < beta_min < beta_max, got [{self.beta_min}, {self.beta_max}]")
        if self.n_alpha < 2 or self.n_beta < 2:
            raise PartitionError(f"grid counts must be at least 2, got {self.n_alpha}x{self.n_beta}")
        if not (self.gamma > 0.0 and self.d > 0.0):
            raise PartitionError(f"gamma and d must be positive, got {self.gamma}, {self.d}")
        if self.form not in FORMS:
            raise PartitionError(f"form must be one of {FORMS}, got {self.form!r}")

    @property
    def alphas(self) -> np.ndarray:
        return np.linspace(self.alpha_min, self.alpha_max, self.n_alpha)

    @property
    def betas(self) -> np.ndarray:
        return np.linspace(self.beta_min, self.beta_max, self.n_beta)

    @property
    def eta_sq(self) -> float:
        return eigenvalue(self.mode, self.geom)


@dataclass(frozen=True)
class RegionMap:
    """Integer-coded classification grid; labels[j, i] is cell (alpha_i, beta_j)."""

    spec: SweepSpec
    labels: np.ndarray

    def counts(self) -> dict[str, int]:
        """Number of cells per label name."""
        return {label.value: int(np.sum(self.labels == code))
                for label, code in LABEL_CODES.items()}


def _trace_det_grid(A, B, gamma, d, eta_sq, form):
    s = A + B
    T = gamma * (B - A - s**3) / s - (d + 1.0) * eta_sq
    diffusion = d * eta_sq if form == "consistent" else (d + 1.0) * eta_sq
    D = (gamma * (B - A) / s - eta_sq) * (-gamma * s * s - diffusion) + 2.0 * gamma * gamma * B * s
    return T, D


def _labels_from_trace_det(T: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Vectorized version of the sign table in stability.classify_point."""
    disc = T * T - 4.0 * D
    scale = np.maximum(1.0, np.maximum(np.abs(T), np.sqrt(np.abs(D))))
    tol = 1e-6 * scale
    band = tol * scale
    out = np.full(T.shape, LABEL_CODES[StabilityLabel.DISCRIMINANT_CURVE], dtype=np.int8)
    complex_pair = disc < -band
    real_pair = disc > band
    out[complex_pair & (T < -tol)] = LABEL_CODES[StabilityLabel.STABLE_SPIRAL]
    out[complex_pair & (T > tol)] = LABEL_CODES[StabilityLabel.HOPF]
    out[complex_pair & (np.abs(T) <= tol)] = LABEL_CODES[StabilityLabel.TRANSCRITICAL_CURVE]
    out[real_pair & (T < 0.0) & (D > 0.0)] = LABEL_CODES[StabilityLabel.STABLE_NODE]
    out[real_pair & ~((T < 0.0) & (D > 0.0))] = LABEL_CODES[StabilityLabel.TURING]
    return out


def sweep_classify(spec: SweepSpec, threads: int = 1) -> RegionMap:
    """Classify every grid cell; optionally share rows across worker threads.

    Results are gathered by row index, so the map is identical for any
    thread count.
    """
    A = spec.alphas[None, :]
    eta_sq = spec.eta_sq
    betas = spec.betas

    def rows(j0: int, j1: int) -> np.ndarray:
        B = betas[j0:j1, None]
        T, D = _trace_det_grid(A, B, spec.gamma, spec.d, eta_sq, spec.form)
        return _labels_from_trace_det(T, D)

    if threads <= 1:
        labels = rows(0, spec.n_beta)
    else:
        bounds = np.linspace(0, spec.n_beta, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda ij: rows(*ij), zip(bounds[:-1], bounds[1:])))
        labels = np.vstack(chunks)
    labels.setflags(write=False)
    return RegionMap(spec, labels)


def first_principles_labels(spec: SweepSpec) -> np.ndarray:
    """Independent classification from eigenvalues of the assembled matrix.

    Builds the 2x2 linearization for every cell, takes its eigenvalues,
    reconstructs trace and determinant from them, and applies the same sign
    table. Only meaningful for the 'consistent' form, which is the one the
    matrix defines.
    """
    if spec.form != "consistent":
        raise PartitionError("first-principles oracle is defined by the matrix, i.e. the 'consistent' form")
    A = spec.alphas[None, :] + np.zeros((spec.n_beta, 1))
    B = spec.betas[:, None] + np.zeros((1, spec.n_alpha))
    s = A + B
    g, d, eta_sq = spec.gamma, spec.d, spec.eta_sq
    M = np.empty(s.shape + (2, 2))
    M[..., 0, 0] = g * (B - A) / s - eta_sq
    M[..., 0, 1] = g * s * s
    M[..., 1, 0] = -2.0 * g * B / s
    M[..., 1, 1] = -g * s * s - d * eta_sq
    sigma = np.linalg.eigvals(M)
    T = sigma.sum(axis=-1).real
    D = (sigma[..., 0] * sigma[..., 1]).real
    return _labels_from_trace_det(T, D)


# ---------------------------------------------------------------------------
# partitioning curves
# ---------------------------------------------------------------------------

def _cleared_polynomials(alpha: float, gamma: float, d: float, eta_sq: float,
                         form: str) -> tuple[Polynomial, Polynomial]:
    """(P, G): s*T = P(beta) cubic, and s^2*(T^2-4D) = G(beta) degree 6.

    Multiplying T by s = beta + alpha and T^2 - 4D by s^2 clears every
    denominator; since s > 0 on the admissible plane the roots are
    unchanged.
    """
    beta = Polynomial([0.0, 1.0])
    s = beta + alpha
    c = d if form == "consistent" else d + 1.0
    P = gamma * (beta - alpha - s**3) - (d + 1.0) * eta_sq * s
    # s * D, from D = (gamma (beta-alpha)/s - eta^2)(-gamma s^2 - c eta^2) + 2 gamma^2 beta s
    sD = (gamma * (beta - alpha) - eta_sq * s) * (-gamma * s**2 - c * eta_sq) \
        + 2.0 * gamma * gamma * beta * s**2
    G = P**2 - 4.0 * s * sD
    return P, G


def _real_roots_in(poly: Polynomial, lo: float, hi: float) -> np.ndarray:
    roots = poly.roots()
    real = roots[np.abs(roots.imag) < 1e-9 * np.maximum(1.0, np.abs(roots.real))].real
    real = real[(real >= lo) & (real <= hi)]
    return np.sort(real)


def _merge_close(values: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    if len(values) == 0:
        return values
    out = [values[0]]
    for v in values[1:]:
        if v - out[-1] > tol:
            out.append(v)
    return np.array(out)


def _bisect_roots(fn, lo: float, hi: float, samples: int = 2001) -> np.ndarray:
    """All simple roots of fn on [lo, hi] via sign-change bracketing."""
    grid = np.linspace(lo, hi, samples)
    vals = fn(grid)
    roots = []
    sign = np.sign(vals)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        x0, x1 = grid[i], grid[i + 1]
        f0 = vals[i]
        for _ in range(200):
            xm = 0.5 * (x0 + x1)
            fm = fn(np.array([xm]))[0]
            if fm == 0.0 or (x1 - x0) < 1e-15 * max(1.0, abs(xm)):
                x0 = x1 = xm
                break
            if (f0 < 0) == (fm < 0):
                x0, f0 = xm, fm
            else:
                x1 = xm
        roots.append(0.5 * (x0 + x1))
    for i in np.nonzero(vals == 0.0)[0]:
        roots.append(grid[i])
    return _merge_close(np.sort(np.array(roots))) if roots else np.empty(0)


def _cross_checked_roots(poly_roots: np.ndarray, bisect_roots: np.ndarray,
                         residual, alpha: float, what: str) -> np.ndarray:
    """Reconcile the two root sets; abort loudly if they disagree."""
    matched = np.zeros(len(poly_roots), dtype=bool)
    for r in bisect_roots:
        if len(poly_roots) == 0:
            raise PartitionError(
                f"{what}: bisection found beta={r!r} at alpha={alpha!r} "
                f"but the polynomial has no root there")
        i = int(np.argmin(np.abs(poly_roots - r)))
        gap = abs(poly_roots[i] - r)
        if gap > 1e-6:
            raise PartitionError(
                f"{what}: methods disagree at alpha={alpha!r}: polynomial "
                f"beta={poly_roots[i]!r} vs bisection beta={r!r} (gap {gap:.3e})")
        matched[i] = True
    for i in np.nonzero(~matched)[0]:
        res = residual(poly_roots[i])
        if abs(res) > 1e-8:
            raise PartitionError(
                f"{what}: polynomial root beta={poly_roots[i]!r} at "
                f"alpha={alpha!r} has no bisection partner and residual "
                f"{res!r} is too large for a tangency")
    return poly_roots


def discriminant_curve(spec: SweepSpec, alpha_samples) -> np.ndarray:
    """(alpha, beta) points with T^2 = 4D inside the sweep window.

    Dual-method per alpha: degree-6 companion roots cross-checked against
    bisection (agreement 1e-8, tangencies admitted by residual); returns an
    (n, 2) array sorted by (alpha, beta).
    """
    eta_sq = spec.eta_sq
    points = []
    for alpha in np.atleast_1d(np.asarray(alpha_samples, dtype=np.float64)):
        if not (spec.alpha_min <= alpha <= spec.alpha_max):
            raise PartitionError(f"alpha sample {alpha!r} outside the sweep window")
        _, G = _cleared_polynomials(alpha, spec.gamma, spec.d, eta_sq, spec.form)

        def g(beta, alpha=alpha):
            T, D = _trace_det_grid(alpha, np.asarray(beta), spec.gamma, spec.d, eta_sq, spec.form)
            return T * T - 4.0 * D

        def scaled_residual(beta, alpha=alpha):
            T, D = _trace_det_grid(alpha, beta, spec.gamma, spec.d, eta_sq, spec.form)
            return (T * T - 4.0 * D) / (1.0 + T * T)

        proots = _merge_close(_real_roots_in(G, spec.beta_min, spec.beta_max))
        broots = _bisect_roots(g, spec.beta_min, spec.beta_max)
        for beta in _cross_checked_roots(proots, broots, scaled_residual, float(alpha),
                                         "discriminant curve"):
            points.append((float(alpha), float(beta)))
    return np.array(sorted(points)).reshape(-1, 2)


def transcritical_curve(spec: SweepSpec, alpha_samples) -> np.ndarray:
    """(alpha, beta) points with T = 0 and D > 0 inside the sweep window.

    Cubic companion roots cross-checked against bisection; roots where the
    determinant is not positive are discarded (they are not temporal-onset
    points).
    """
    eta_sq = spec.eta_sq
    points = []
    for alpha in np.atleast_1d(np.asarray(alpha_samples, dtype=np.float64)):
        if not (spec.alpha_min <= alpha <= spec.alpha_max):
            raise PartitionError(f"alpha sample {alpha!r} outside the sweep window")
        P, _ = _cleared_polynomials(alpha, spec.gamma, spec.d, eta_sq, spec.form)

        def t_of(beta, alpha=alpha):
            T, _ = _trace_det_grid(alpha, np.asarray(beta), spec.gamma, spec.d, eta_sq, spec.form)
            return T

        def t_residual(beta, alpha=alpha):
            T, _ = _trace_det_grid(alpha, beta, spec.gamma, spec.d, eta_sq, spec.form)
            return T / (1.0 + abs(T))

        proots = _merge_close(_real_roots_in(P, spec.beta_min, spec.beta_max))
        broots = _bisect_roots(t_of, spec.beta_min, spec.beta_max)
        for beta in _cross_checked_roots(proots, broots, t_residual, float(alpha),
                                         "transcritical curve"):
            _, D = _trace_det_grid(float(alpha), float(beta), spec.gamma, spec.d,
                                   eta_sq, spec.form)
            if D > 0.0:
                points.append((float(alpha), float(beta)))
    return np.array(sorted(points)).reshape(-1, 2)


@dataclass(frozen=True)
class CurveSet:
    """Both partitioning curves for one (gamma, d) configuration."""

    gamma: float
    d: float
    discriminant: np.ndarray
    transcritical: np.ndarray


def build_curves(spec: SweepSpec, alpha_samples) -> CurveSet:
    """Extract both curves over the same alpha samples."""
    return CurveSet(spec.gamma, spec.d,
                    discriminant_curve(spec, alpha_samples),
                    transcritical_curve(spec, alpha_samples))


# ---------------------------------------------------------------------------
# export / import
# ---------------------------------------------------------------------------

REGION_CSV_HEADER = "alpha,beta,label"
CURVE_CSV_HEADER = "curve,alpha,beta"

# gray levels for the indexed raster, one per label code
_RASTER_LEVELS = {code: 40 * (code + 1) for code in CODE_LABELS}


def export_region_map(region: RegionMap, csv_path, raster_path=None,
                      legend_path=None) -> None:
    """Write the map as CSV (one row per cell) and optionally a PGM raster.

    The raster has one pixel per cell, rows running from beta_max (top) to
    beta_min (bottom); the legend file maps each label to its gray level.
    """
    from ._util import fmt, write_text

    spec = region.spec
    alphas, betas = spec.alphas, spec.betas
    lines = [REGION_CSV_HEADER + "\n"]
    for j in range(spec.n_beta):
        for i in range(spec.n_alpha):
            label = CODE_LABELS[int(region.labels[j, i])].value
            lines.append(f"{fmt(alphas[i])},{fmt(betas[j])},{label}\n")
    write_text(csv_path, "".join(lines))

    if raster_path is not None:
        img = np.zeros((spec.n_beta, spec.n_alpha), dtype=np.uint8)
        for code, level in _RASTER_LEVELS.items():
            img[region.labels == code] = level
        img = img[::-1]  # beta_max on top
        with open(raster_path, "wb") as f:
            f.write(f"P5\n{spec.n_alpha} {spec.n_beta}\n255\n".encode("ascii"))
            f.write(img.tobytes())
    if legend_path is not None:
        rows = [f"{_RASTER_LEVELS[code]} {CODE_LABELS[code].value}\n"
                for code in sorted(CODE_LABELS)]
        write_text(legend_path, "".join(rows))


def import_region_labels(csv_path, n_alpha: int, n_beta: int) -> np.ndarray:
    """Re-read the label grid from a region CSV written by export_region_map."""
    labels = np.empty((n_beta, n_alpha), dtype=np.int8)
    by_name = {label.value: code for label, code in LABEL_CODES.items()}
    with open(csv_path, encoding="utf-8") as f:
        header = f.readline().strip()
        if header != REGION_CSV_HEADER:
            raise PartitionError(f"unexpected region CSV header: {header!r}")
        idx = 0
        for line in f:
            if not line.strip():
                continue
            _, _, name = line.strip().split(",")
            labels[idx // n_alpha, idx % n_alpha] = by_name[name]
            idx += 1
    if idx != n_alpha * n_beta:
        raise PartitionError(f"region CSV has {idx} rows, expected {n_alpha * n_beta}")
    return labels


def export_curves(curves: CurveSet, path) -> None:
    """Write both curves as CSV rows `curve,alpha,beta` (header-only if empty)."""
    from ._util import fmt, write_text

    lines = [CURVE_CSV_HEADER + "\n"]
    for name, pts in (("discriminant", curves.discriminant),
                      ("transcritical", curves.transcritical)):
        for alpha, beta in pts:
            lines.append(f"{name},{fmt(alpha)},{fmt(beta)}\n")
    write_text(path, "".join(lines))
