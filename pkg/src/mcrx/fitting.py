"""Damped least-squares (Levenberg-Marquardt) fits of the binding models.

Three built-in models:

``isotherm``
    plateau current vs. concentration; parameters ``K_D`` (nM) and
    ``delta_I_sat`` (µA); x is concentration in nM.
``kinetics``
    association for ``0 <= t <= t_d`` then washout; parameters ``k_on``
    (M⁻¹s⁻¹), ``k_off`` (s⁻¹), ``delta_I_eq`` (µA); x is time in s.
``pulse-kT``
    finite-pulse response with every parameter fixed except ``k_T_star``.

The Jacobian is always taken by central differences so user models need
only a forward function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import FitProblemError
from .kinetics import BindingKinetics
from .pulse import PulseModelParams, pulse_response

__all__ = [
    "Model", "FitProblem", "FitResult", "fit", "finite_difference_jacobian",
    "isotherm_model", "kinetics_model", "pulse_kt_model",
]

XTOL = 1e-10
GTOL = 1e-12
_LAMBDA0 = 1e-3
_LAMBDA_MAX = 1e16


@dataclass(frozen=True)
class Model:
    name: str
    param_names: tuple
    units: tuple
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    default_bounds: tuple
    guess: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __call__(self, params, x):
        return self.fn(np.asarray(params, dtype=float), np.asarray(x, dtype=float))


@dataclass
class FitProblem:
    model: Model
    x: np.ndarray
    y: np.ndarray
    initial_guess: Sequence[float] | None = None
    bounds: Sequence[tuple] | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        npar = len(self.model.param_names)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise FitProblemError("x and y must be 1-D arrays of equal length")
        if self.y.size < npar + 2:
            raise FitProblemError(
                f"{self.model.name} fit needs at least {npar + 2} points, got {self.y.size}"
            )
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise FitProblemError("fit data contain non-finite values")
        bounds = self.model.default_bounds if self.bounds is None else self.bounds
        bounds = np.asarray(bounds, dtype=float)
        if bounds.shape != (npar, 2) or not np.all(np.isfinite(bounds)) \
                or np.any(bounds[:, 0] >= bounds[:, 1]):
            raise FitProblemError(f"bounds must be {npar} finite (lo, hi) pairs with lo < hi")
        self.bounds = bounds
        if self.weights is None:
            self.weights = np.ones_like(self.y)
        else:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != self.y.shape or np.any(self.weights < 0):
                raise FitProblemError("weights must be non-negative, one per point")
        if self.initial_guess is None:
            if self.model.guess is None:
                raise FitProblemError(f"model {self.model.name} needs an initial guess")
            self.initial_guess = self.model.guess(self.x, self.y)
        guess = np.asarray(self.initial_guess, dtype=float)
        if guess.shape != (npar,):
            raise FitProblemError(f"initial guess must have {npar} entries")
        self.initial_guess = guess


@dataclass
class FitResult:
    names: tuple
    units: tuple
    values: np.ndarray
    residual_norm: float
    covariance_diag: np.ndarray
    iterations: int
    converged: bool
    gradient_norm: float
    message: str = ""
    cost_history: list = field(default_factory=list, repr=False)
    residuals: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self):
        return dict(zip(self.names, (float(v) for v in self.values)))

    def __getitem__(self, name):
        return float(self.values[self.names.index(name)])

    def report_lines(self):
        lines = []
        for n, u, v, var in zip(self.names, self.units, self.values, self.covariance_diag):
            sd = math.sqrt(var) if np.isfinite(var) and var >= 0 else float("nan")
            lines.append(f"{n} = {v:.10g} {u} (sd {sd:.3g})")
        lines += [
            f"residual_norm = {self.residual_norm:.6g}",
            f"iterations = {self.iterations}",
            f"converged = {str(self.converged).lower()}",
            f"gradient_norm = {self.gradient_norm:.3g}",
        ]
        if self.message:
            lines.append(f"message = {self.message}")
        return lines


def finite_difference_jacobian(model_fn, params, x, names=None) -> np.ndarray:
    """Central-difference Jacobian, one column per parameter.

    Step for parameter j is ``max(1e-8, 1e-6 * |p_j|)``.
    """
    params = np.asarray(params, dtype=float)
    x = np.asarray(x, dtype=float)
    jac = np.empty((x.size, params.size))
    if x.size == 0:
        return jac
    for j in range(params.size):
        h = max(1e-8, 1e-6 * abs(params[j]))
        up = params.copy()
        dn = params.copy()
        up[j] += h
        dn[j] -= h
        f_up = np.asarray(model_fn(up, x), dtype=float)
        f_dn = np.asarray(model_fn(dn, x), dtype=float)
        if not (np.all(np.isfinite(f_up)) and np.all(np.isfinite(f_dn))):
            label = names[j] if names is not None else f"#{j}"
            raise FitProblemError(
                f"model output is non-finite when perturbing parameter {label} "
                f"around {params[j]!r}"
            )
        jac[:, j] = (f_up - f_dn) / (2.0 * h)
    return jac


def _gradient_measure(jac, r):
    """Largest cosine between a Jacobian column and the residual vector."""
    rn = np.linalg.norm(r)
    if rn == 0:
        return 0.0
    cn = np.linalg.norm(jac, axis=0)
    g = np.abs(jac.T @ r)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(cn > 0, g / (cn * rn), 0.0)
    return float(np.max(cos)) if cos.size else 0.0


def fit(problem: FitProblem, max_iterations: int = 200, xtol: float = XTOL,
        gtol: float = GTOL) -> FitResult:
    """Minimise the weighted squared residual of ``problem``.

    Converges when the relative parameter step drops below ``xtol`` or the
    residual becomes orthogonal to every Jacobian column to within ``gtol``.
    Hitting the damping ceiling ends the run unconverged instead of raising.
    """
    model = problem.model
    names = model.param_names
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    w = problem.weights
    x, y = problem.x, problem.y

    def residual(p):
        return w * (model(p, x) - y)

    p = np.clip(problem.initial_guess, lo, hi)
    r = residual(p)
    if not np.all(np.isfinite(r)):
        raise FitProblemError("model is non-finite at the initial guess")
    cost = 0.5 * float(r @ r)
    history = [cost]
    lam = _LAMBDA0
    converged = False
    message = "maximum iterations reached"
    jac = None
    gnorm = float("inf")
    it = 0
    for it in range(1, max_iterations + 1):
        jac = w[:, None] * finite_difference_jacobian(model, p, x, names)
        g = jac.T @ r
        a = jac.T @ jac
        gnorm = _gradient_measure(jac, r)
        if cost == 0.0 or gnorm <= gtol:
            converged, message = True, "gradient below tolerance"
            break
        diag = np.diag(a).copy()
        floor = max(float(diag.max()) * 1e-30, 1e-300) if diag.size else 1e-300
        diag = np.maximum(diag, floor)
        accepted = False
        small_step = False
        while lam <= _LAMBDA_MAX:
            try:
                delta = np.linalg.solve(a + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_new = np.clip(p + delta, lo, hi)
            step = np.max(np.abs(p_new - p) / np.maximum(np.abs(p_new), 1e-300))
            r_new = residual(p_new)
            cost_new = 0.5 * float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            if cost_new < cost:
                p, r, cost = p_new, r_new, cost_new
                history.append(cost)
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                small_step = step < xtol
                break
            if step < xtol:
                small_step = True
                break
            lam *= 10.0
        if small_step:
            converged, message = True, "relative step below tolerance"
            break
        if not accepted:
            message = "damping limit reached without reducing the residual"
            break

    jac = w[:, None] * finite_difference_jacobian(model, p, x, names)
    gnorm = _gradient_measure(jac, r)
    dof = max(y.size - p.size, 1)
    try:
        cov = np.linalg.pinv(jac.T @ jac) * (2.0 * cost / dof)
        cov_diag = np.diag(cov).copy()
    except np.linalg.LinAlgError:
        cov_diag = np.full(p.size, np.nan)
    return FitResult(
        names=names, units=model.units, values=p, residual_norm=math.sqrt(2.0 * cost),
        covariance_diag=cov_diag, iterations=it, converged=converged,
        gradient_norm=gnorm, message=message, cost_history=history,
        residuals=model(p, x) - y,
    )


# ---------------------------------------------------------------- models

def _isotherm_fn(params, c_nM):
    k_d, sat = params
    return sat * c_nM / (c_nM + k_d)


def _isotherm_guess(c_nM, y):
    order = np.argsort(c_nM)
    c, yy = c_nM[order], y[order]
    sat = 1.1 * yy[np.argmax(np.abs(yy))]
    frac = yy / sat
    # first crossing of half saturation, interpolated in log concentration
    above = np.flatnonzero(frac >= 0.5)
    if above.size == 0:
        k_d = c[-1]
    elif above[0] == 0:
        k_d = c[0]
    else:
        i = above[0]
        lc0, lc1 = np.log(c[i - 1]), np.log(c[i])
        f0, f1 = frac[i - 1], frac[i]
        k_d = math.exp(lc0 + (0.5 - f0) * (lc1 - lc0) / (f1 - f0))
    return np.array([k_d, sat])


def isotherm_model() -> Model:
    return Model(
        name="isotherm",
        param_names=("K_D", "delta_I_sat"),
        units=("nM", "uA"),
        fn=_isotherm_fn,
        default_bounds=((1e-3, 1e8), (-1e3, 1e3)),
        guess=_isotherm_guess,
    )


def kinetics_model(c_in: float, t_d: float) -> Model:
    """Association at ``c_in`` (M) on ``[0, t_d]`` followed by dissociation."""

    def fn(params, t):
        k_on, k_off, d_eq = params
        rate = k_on * c_in + k_off
        at_td = d_eq * -math.expm1(-rate * t_d)
        assoc = d_eq * -np.expm1(-rate * np.clip(t, 0.0, t_d))
        dissoc = at_td * np.exp(-k_off * np.maximum(t - t_d, 0.0))
        return np.where(t <= t_d, assoc, dissoc)

    def guess(t, y):
        assoc = t <= t_d
        ta, ya = t[assoc], y[assoc]
        tail = ya[ta >= t_d - max(0.02 * t_d, 3 * np.median(np.diff(ta)))]
        y_td = float(np.mean(tail)) if tail.size else float(ya[-1])
        sign = 1.0 if y_td >= 0 else -1.0

        # washout rate: log-linear regression over the dissociation segment
        k_off = 1e-3
        td, yd = t[~assoc] - t_d, sign * y[~assoc]
        keep = yd > 0.2 * abs(y_td)
        if np.count_nonzero(keep) >= 3:
            slope = np.polyfit(td[keep], np.log(yd[keep]), 1)[0]
            if slope < 0:
                k_off = -slope

        # association rate from the early slope relative to the level at t_d
        early = ta <= ta[0] + 0.1 * (t_d - ta[0])
        rate = None
        if np.count_nonzero(early) >= 3:
            slope0 = np.polyfit(ta[early], ya[early], 1)[0]
            if slope0 * sign > 0:
                target = y_td / slope0  # = (1 - exp(-rate t_d)) / rate, decreasing in rate
                lo_r, hi_r = 1e-9, 1e3
                if target < t_d:
                    for _ in range(200):
                        mid = math.sqrt(lo_r * hi_r)
                        if -math.expm1(-mid * t_d) / mid > target:
                            lo_r = mid
                        else:
                            hi_r = mid
                    rate = math.sqrt(lo_r * hi_r)
        if rate is None:
            rate = 3.0 / t_d
        k_on = max(rate - k_off, 0.05 * rate) / c_in
        d_eq = y_td / -math.expm1(-rate * t_d)
        return np.array([k_on, k_off, d_eq])

    return Model(
        name="kinetics",
        param_names=("k_on", "k_off", "delta_I_eq"),
        units=("1/(M s)", "1/s", "uA"),
        fn=fn,
        default_bounds=((1e-3, 1e9), (1e-8, 10.0), (-1e3, 1e3)),
        guess=guess,
    )


def pulse_kt_model(template: PulseModelParams) -> Model:
    """Only the transport parameter is free; everything else comes from ``template``."""
    from dataclasses import replace

    def fn(params, t):
        return pulse_response(t, replace(template, k_T_star=float(params[0])))

    def guess(t, y):
        grid = np.logspace(5, 16, 45)
        sse = [float(np.sum((fn(np.array([g]), t) - y) ** 2)) for g in grid]
        return np.array([grid[int(np.argmin(sse))]])

    return Model(
        name="pulse-kT",
        param_names=("k_T_star",),
        units=("1/(M s)",),
        fn=fn,
        default_bounds=((1e3, 1e20),),
        guess=guess,
    )


def kinetics_from_fit(result: FitResult, label: str = "fit") -> BindingKinetics:
    return BindingKinetics(result["k_on"], result["k_off"], label)
