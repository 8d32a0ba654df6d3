"""
Standalone numerical verifiers for the scalar/vector inequalities that feed
the energy estimates: the sharp interpolation bound x^2 <= 2c + alpha x^(beta-1),
monotonicity of the damping nonlinearity, a sampled Gronwall lemma, and the
envelope conditions on the damping modifiers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .damping import DampingFunction, F_CATALOG

MARGIN_TOL = 1e-12
SHARPNESS_TOL = 1e-10


@dataclass
class LemmaReport:
    lemma_id: str
    samples: int
    worst_margin: float
    worst_location: tuple | float | None
    status: str  # PASS | FAIL | NOT-APPLICABLE
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    @property
    def acceptable(self) -> bool:
        return self.status in ("PASS", "NOT-APPLICABLE")


def interpolation_constant(alpha: float, beta: float) -> float:
    """Sharp constant in x^2 <= 2 c + alpha x^(beta-1) over x >= 0.

        c = 1/2 * (beta-3)/(beta-1) * (alpha (beta-1) / 2)^(-2/(beta-3))

    Defined for alpha > 0, beta > 3 only.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if beta <= 3:
        raise ValueError("the interpolation constant requires beta > 3")
    base = alpha * (beta - 1.0) / 2.0
    return 0.5 * (beta - 3.0) / (beta - 1.0) * base ** (-2.0 / (beta - 3.0))


def interpolation_minimizer(alpha: float, beta: float) -> float:
    """Argmin x* = (2 / (alpha (beta-1)))^(1/(beta-3)) of the margin; the
    inequality holds with equality there."""
    if alpha <= 0 or beta <= 3:
        raise ValueError("requires alpha > 0 and beta > 3")
    return (2.0 / (alpha * (beta - 1.0))) ** (1.0 / (beta - 3.0))


def check_interpolation_bound(alpha: float, beta: float, x_grid: np.ndarray) -> LemmaReport:
    """Margins of the interpolation bound over a grid, plus sharpness at x*."""
    if beta <= 3:
        return LemmaReport(
            "interpolation",
            0,
            np.nan,
            None,
            "NOT-APPLICABLE",
            {"reason": "beta <= 3"},
        )
    x = np.asarray(x_grid, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("x_grid must lie in [0, inf)")
    c = interpolation_constant(alpha, beta)
    margins = 2.0 * c + alpha * x ** (beta - 1.0) - x**2
    x_star = interpolation_minimizer(alpha, beta)
    margin_star = 2.0 * c + alpha * x_star ** (beta - 1.0) - x_star**2
    i = int(np.argmin(margins))
    ok = margins[i] >= -MARGIN_TOL and abs(margin_star) <= SHARPNESS_TOL
    return LemmaReport(
        "interpolation",
        x.size,
        float(min(margins[i], margin_star)),
        float(x[i]),
        "PASS" if ok else "FAIL",
        {
            "alpha": alpha,
            "beta": beta,
            "c": c,
            "x_star": x_star,
            "margin_at_x_star": float(margin_star),
        },
    )


def monotonicity_gap(x: np.ndarray, y: np.ndarray, fn: DampingFunction | str) -> float:
    """<f(|x|^2)|x|^2 x - f(|y|^2)|y|^2 y, x - y>; nonnegative for every
    strictly increasing f."""
    if isinstance(fn, str):
        fn = F_CATALOG[fn]
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    qx = float(np.dot(x, x))
    qy = float(np.dot(y, y))
    fx = fn.f(qx) * qx
    fy = fn.f(qy) * qy
    return float(np.dot(fx * x - fy * y, x - y))


def monotonicity_suite(
    fn: DampingFunction | str,
    n_pairs: int = 100_000,
    seed: int = 0,
    scale_range: tuple[float, float] = (1e-3, 1e3),
) -> LemmaReport:
    """Vectorized sampling of the monotonicity gap over random vector pairs
    drawn at log-uniform scales."""
    if isinstance(fn, str):
        fn = F_CATALOG[fn]
    rng = np.random.default_rng(seed)
    lo, hi = np.log(scale_range[0]), np.log(scale_range[1])
    sx = np.exp(rng.uniform(lo, hi, size=n_pairs))
    sy = np.exp(rng.uniform(lo, hi, size=n_pairs))
    x = rng.standard_normal((n_pairs, 3)) * sx[:, None]
    y = rng.standard_normal((n_pairs, 3)) * sy[:, None]
    qx = np.sum(x * x, axis=1)
    qy = np.sum(y * y, axis=1)
    ax = fn.f(qx) * qx
    ay = fn.f(qy) * qy
    gaps = np.sum((ax[:, None] * x - ay[:, None] * y) * (x - y), axis=1)
    i = int(np.argmin(gaps))
    status = "PASS" if gaps[i] >= -MARGIN_TOL else "FAIL"
    return LemmaReport(
        "monotonicity",
        n_pairs,
        float(gaps[i]),
        (tuple(x[i]), tuple(y[i])),
        status,
        {"f_id": fn.f_id},
    )


def gronwall_check(
    t: np.ndarray,
    f: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    bound: float,
    tol: float = 1e-9,
) -> LemmaReport:
    """Sampled Gronwall lemma with trapezoidal integrals.

    Hypothesis (verified first): f(t) + int_0^t g <= bound + int_0^t h f at
    every sample.  If it fails the report is NOT-APPLICABLE.  Otherwise the
    conclusion f(t) + int_0^t g <= bound * exp(int_0^t h) is checked with
    tolerance ``tol`` on the margins.
    """
    t = np.asarray(t, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if not (t.shape == f.shape == g.shape == h.shape):
        raise ValueError("series must share one shape")
    if np.any(f < 0) or np.any(g < 0) or np.any(h < 0):
        raise ValueError("series must be nonnegative")

    def running_trapezoid(y: np.ndarray) -> np.ndarray:
        out = np.zeros_like(y)
        if y.size > 1:
            out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
        return out

    int_g = running_trapezoid(g)
    int_hf = running_trapezoid(h * f)
    int_h = running_trapezoid(h)

    hyp_margins = bound + int_hf - f - int_g
    scale = max(bound, float(np.max(f + int_g)), 1.0)
    if float(np.min(hyp_margins)) < -1e-12 * scale:
        i = int(np.argmin(hyp_margins))
        return LemmaReport(
            "gronwall",
            t.size,
            float(hyp_margins[i]),
            float(t[i]),
            "NOT-APPLICABLE",
            {"reason": "hypothesis fails on the sampled series"},
        )

    margins = bound * np.exp(int_h) - f - int_g
    i = int(np.argmin(margins))
    status = "PASS" if margins[i] >= -tol * scale else "FAIL"
    return LemmaReport("gronwall", t.size, float(margins[i]), float(t[i]), status)


@dataclass
class ModifierEnvelopeReport:
    """Tightest envelope constants of a damping modifier over a z-grid.

    The admissibility conditions ask for constants a, b > 0 with
    a z^2 <= f(z) <= b z^(beta-1) on z >= 1.  For the log catalog the lower
    ratio f(z)/z^2 tends to zero, so no positive a exists over unbounded
    ranges; this report states where the ratio degenerates instead of
    forcing a verdict.
    """

    f_id: str
    beta: float
    a_star: float        # min f(z)/z^2
    a_argmin: float
    b_star: float        # max f(z)/z^(beta-1)
    b_argmax: float
    f_at_zero: float
    lower_bound_degenerate: bool
    detail: str


def modifier_envelope_report(
    fn: DampingFunction | str, beta: float, z_grid: np.ndarray
) -> ModifierEnvelopeReport:
    if isinstance(fn, str):
        fn = F_CATALOG[fn]
    z = np.asarray(z_grid, dtype=np.float64)
    if np.any(z < 1):
        raise ValueError("z_grid must lie in [1, inf)")
    fz = fn.f(z)
    lower_ratio = fz / z**2
    upper_ratio = fz / z ** (beta - 1.0)
    ia = int(np.argmin(lower_ratio))
    ib = int(np.argmax(upper_ratio))
    a_star = float(lower_ratio[ia])
    degenerate = a_star < 1e-6
    detail = (
        f"lower ratio f(z)/z^2 falls to {a_star:.3e} at z={z[ia]:.6g}; "
        "no positive lower constant over the sampled range"
        if degenerate
        else "both envelope constants positive over the sampled range"
    )
    return ModifierEnvelopeReport(
        f_id=fn.f_id,
        beta=beta,
        a_star=a_star,
        a_argmin=float(z[ia]),
        b_star=float(upper_ratio[ib]),
        b_argmax=float(z[ib]),
        f_at_zero=fn.f_at_zero,
        lower_bound_degenerate=degenerate,
        detail=detail,
    )
