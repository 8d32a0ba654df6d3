"""
Twin-run experiments: evolve two nearby trajectories and measure the growth
of their L2 separation d(t) = ||u_A - u_B||^2 + ||b_A - b_B||^2.

The difference system is realized literally as the difference of two solver
trajectories advanced in lockstep, so no re-derivation of the coupled
difference equations is involved.  Two exponential rates are reported: the
least-squares slope of log d over the fit window, and the certified rate
max_t log(d(t)/d(0))/t for which d(t) <= d(0) exp(rate * t) holds on the
window by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .damping import DampingSpec, damping_term
from .fields import PhysicalVectorField, SpectralVectorField
from .integrator import (
    SolverConfig,
    _StepWork,
    _random_divfree_pair,
    config_hash,
    make_initial_from_config,
)
from .operators import sobolev_norm

NOISE_SEED_OFFSET = 7919


@dataclass
class TwinRunResult:
    t: np.ndarray
    d: np.ndarray
    d0: float
    c_hat: float          # least-squares slope of log d over the fit window
    c_bound: float        # certified rate: max log(d/d0)/t over the window
    window_end: int       # index of the last row inside the fit window
    eps: float
    blown_up: bool
    config_hash: str
    identical: bool = False  # bitwise-equal trajectories (eps = 0 case)
    extra: dict = field(default_factory=dict)

    def bound_series(self) -> np.ndarray:
        if self.d0 == 0.0:
            return np.zeros_like(self.t)
        return self.d0 * np.exp(self.c_bound * self.t)

    def bound_satisfied(self, slack: float = 1e-6) -> bool:
        """d(t) <= d(0) exp(c_bound t) (1 + slack) over the fit window."""
        if self.d0 == 0.0:
            return bool(np.all(self.d == 0.0))
        window = slice(0, self.window_end + 1)
        return bool(np.all(self.d[window] <= self.bound_series()[window] * (1.0 + slack)))

    def to_csv(self, path) -> None:
        bound = self.bound_series()
        with open(path, "w", newline="") as fh:
            fh.write("t,d,bound\n")
            for i in range(self.t.size):
                fh.write(
                    f"{format(self.t[i], '.17g')},{format(self.d[i], '.17g')},"
                    f"{format(bound[i], '.17g')}\n"
                )

    def summary_dict(self) -> dict:
        return {
            "c_hat": self.c_hat,
            "c_bound": self.c_bound,
            "d0": self.d0,
            "eps": self.eps,
            "blown_up": self.blown_up,
            "identical": self.identical,
            "config_hash": self.config_hash,
            "window_end_index": self.window_end,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _separation(u_a, b_a, u_b, b_b, volume: float) -> float:
    du = u_a - u_b
    db = b_a - b_b
    return volume * float(
        np.sum(du.real**2 + du.imag**2) + np.sum(db.real**2 + db.imag**2)
    )


def _fit_window(d: np.ndarray) -> int:
    """Last index of the fit window: from t = 0 to the first local maximum
    of d, or the end of the series when d never stops growing (or never
    grows at all)."""
    n = d.size
    if n <= 2 or d[1] < d[0]:
        return n - 1
    for i in range(1, n - 1):
        if d[i + 1] < d[i]:
            return i
    return n - 1


def _fit_rates(t: np.ndarray, d: np.ndarray, window_end: int) -> tuple[float, float]:
    window = slice(0, window_end + 1)
    tw = t[window]
    dw = d[window]
    positive = dw > 0
    if positive.sum() < 2:
        return 0.0, 0.0
    logd = np.log(dw[positive])
    slope, _ = np.polyfit(tw[positive], logd, 1)
    later = (tw > 0) & positive
    if later.any():
        c_bound = float(np.max((np.log(dw[later]) - np.log(dw[0])) / tw[later]))
    else:
        c_bound = 0.0
    return float(slope), c_bound


def perturbation_fields(config: SolverConfig):
    """Unit-H1 divergence-free noise pair used to displace the twin state."""
    grid = config.grid
    du_c, db_c = _random_divfree_pair(grid, config.seed + NOISE_SEED_OFFSET)
    du = SpectralVectorField(du_c, grid)
    db = SpectralVectorField(db_c, grid)
    du.coeffs /= sobolev_norm(du, 1.0)
    db.coeffs /= sobolev_norm(db, 1.0)
    return du, db


def twin_run(config: SolverConfig, perturbation_scale: float) -> TwinRunResult:
    """Evolve the configured state and an eps-perturbed copy in lockstep.

    With eps = 0 the copy is bit-identical by construction and d(t) must be
    identically zero.  Blow-up in either trajectory truncates the series at
    the last common recorded time and flags the result.
    """
    if perturbation_scale < 0:
        raise ValueError("perturbation scale must be >= 0")
    eps = float(perturbation_scale)
    state = make_initial_from_config(config)
    span = config.t_end - state.t
    if span < -1e-12:
        raise ValueError(f"t_end = {config.t_end} precedes the state time {state.t}")
    n_steps = max(round(span / config.dt), 0)
    if abs(n_steps * config.dt - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError("t_end - t0 must be an integer multiple of dt")
    u_a = state.u.coeffs.copy()
    b_a = state.b.coeffs.copy()
    if eps == 0.0:
        u_b = u_a.copy()
        b_b = b_a.copy()
    else:
        du, db = perturbation_fields(config)
        u_b = u_a + eps * du.coeffs
        b_b = b_a + eps * db.coeffs

    work = _StepWork(config)
    volume = config.grid.volume
    times = [state.t]
    seps = [_separation(u_a, b_a, u_b, b_b, volume)]
    blown = False
    for i in range(1, n_steps + 1):
        u_a, b_a, _ = work.advance(u_a, b_a, want_diag=False)
        u_b, b_b, _ = work.advance(u_b, b_b, want_diag=False)
        finite = (
            np.all(np.isfinite(u_a))
            and np.all(np.isfinite(b_a))
            and np.all(np.isfinite(u_b))
            and np.all(np.isfinite(b_b))
        )
        if not finite:
            blown = True
            break
        if i % config.ledger_stride == 0 or i == n_steps:
            times.append(state.t + i * config.dt)
            seps.append(_separation(u_a, b_a, u_b, b_b, volume))

    t = np.asarray(times)
    d = np.asarray(seps)
    identical = bool(
        np.array_equal(u_a, u_b) and np.array_equal(b_a, b_b) and np.all(d == 0.0)
    )
    window_end = _fit_window(d)
    c_hat, c_bound = _fit_rates(t, d, window_end)
    return TwinRunResult(
        t=t,
        d=d,
        d0=float(d[0]),
        c_hat=c_hat,
        c_bound=c_bound,
        window_end=window_end,
        eps=eps,
        blown_up=blown,
        config_hash=config_hash(config),
        identical=identical,
    )


def damping_contraction_pointwise(
    u_values: np.ndarray, s_values: np.ndarray, damping: DampingSpec
) -> np.ndarray:
    """Pointwise integrand <F(u) - F(s), u - s> on the collocation grid."""
    fu = damping_term(u_values, damping)
    fs = damping_term(s_values, damping)
    diff = u_values - s_values
    return np.sum((fu - fs) * diff, axis=0)


def damping_contraction_check(
    u_field: PhysicalVectorField, s_field: PhysicalVectorField, damping: DampingSpec
) -> float:
    """Quadrature of <F(u) - F(s), u - s> over the box.

    Nonnegative for both damping families (the damping map is monotone), so
    the difference-energy contribution of the damping term has a sign.
    """
    if u_field.grid.n_modes != s_field.grid.n_modes:
        raise ValueError("fields must share one grid")
    integrand = damping_contraction_pointwise(u_field.values, s_field.values, damping)
    return float(np.sum(integrand)) * u_field.grid.cell_volume
