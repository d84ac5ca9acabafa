"""Coupled time marching: staggered fixed-point iteration per step.

Each step alternates an equilibrium solve at fixed internal variables with an
integration of the internal variables at fixed displacement, until the
displacement stops changing. The observed ratio of successive displacement
updates is reported as the contraction ratio of the step.
"""
from __future__ import annotations

import enum
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import fem, spaces
from .errors import (DomainError, PicardDiverged, RuptureImminent, SingularityError,
                     SolverError)
from .evolution import EvolveConfig, adapt_dt, evolve_fields
from .geometry import Mesh
from .material import MaterialParams, von_mises

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    """Run control. ``damage_ceiling=None`` derives it from beta1 and omega_crit."""

    dt_init: float = 1e-3
    dt_min: float = 1e-14
    dt_max: float = 0.05
    max_domega: float = 0.01
    growth: float = 1.5
    method: str = "rk4"
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    p: float = 4.0
    beta1: float = 0.05
    beta2: float = 100.0
    damage_ceiling: Optional[float] = None
    max_steps: int = 200_000

    def __post_init__(self):
        self.norm_config()
        if self.picard_tol <= 0 or self.picard_max_iters < 1:
            raise DomainError("picard_tol must be positive and picard_max_iters >= 1")

    def norm_config(self) -> spaces.NormConfig:
        return spaces.NormConfig(self.p, self.beta1, self.beta2)

    def ceiling(self, params: MaterialParams) -> float:
        if self.damage_ceiling is not None:
            return self.damage_ceiling
        # halfway between omega_crit and 1 when that lies above 1 - beta1/2
        return max(1.0 - 0.5 * self.beta1, 1.0 - 0.5 * (1.0 - params.omega_crit))

    def evolve_config(self, params: MaterialParams) -> EvolveConfig:
        return EvolveConfig(self.dt_init, self.dt_min, self.dt_max, self.max_domega,
                            self.method, self.ceiling(params), self.growth)

    def replace(self, **changes) -> "SimConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class State:
    t: float
    u: np.ndarray
    eps_cr: np.ndarray
    omega: np.ndarray


@dataclass(frozen=True)
class Diagnostics:
    max_omega: float
    min_one_minus_omega: float
    grad_omega_lp: float
    lambda_: float
    max_vm_stress: float
    w1p_omega: float
    sup_eps_cr: float
    sup_to_w1p: float


@dataclass(frozen=True)
class StepReport:
    t: float
    dt: float
    picard_iters: int
    contraction_ratios: tuple
    max_domega: float
    diagnostics: Diagnostics

    @property
    def contraction_ratio(self) -> float:
        """Ratio of the last two displacement updates (0 when fewer than two)."""
        return self.contraction_ratios[-1] if self.contraction_ratios else 0.0

    @property
    def first_ratio(self) -> Optional[float]:
        return self.contraction_ratios[0] if self.contraction_ratios else None


class Termination(str, enum.Enum):
    REACHED_T = "ReachedT"
    RUPTURE = "Rupture"
    PICARD_DIVERGED = "PicardDiverged"
    SINGULAR_SYSTEM = "SingularSystem"
    STEP_LIMIT = "StepLimit"


@dataclass
class RunResult:
    initial: StepReport
    steps: list
    termination: Termination
    t_final: float
    final_state: State
    t_star: Optional[float] = None
    critical_node: Optional[int] = None
    message: str = ""
    states: list = field(default_factory=list, repr=False)
    initial_state: Optional[State] = field(default=None, repr=False)

    @property
    def reports(self) -> list:
        """Initial record followed by one record per accepted step."""
        return [self.initial] + list(self.steps)

    @property
    def ruptured(self) -> bool:
        return self.termination is Termination.RUPTURE

    def series(self, name: str) -> np.ndarray:
        if name in ("t", "dt", "picard_iters", "max_domega", "contraction_ratio"):
            return np.array([getattr(r, name) for r in self.reports], dtype=float)
        return np.array([getattr(r.diagnostics, name) for r in self.reports], dtype=float)

    def lambda_at(self, t: float) -> float:
        """Localization measure at time ``t``, linear between recorded steps."""
        ts, lam = self.series("t"), self.series("lambda_")
        if not ts[0] <= t <= ts[-1]:
            raise DomainError(f"t={t} outside the recorded interval [{ts[0]}, {ts[-1]}]")
        return float(np.interp(t, ts, lam))

    @property
    def empirical_imbedding_constant(self) -> float:
        """Running max of sup|omega| / ||omega||_{1,p}; an empirical C_I estimate."""
        return float(self.series("sup_to_w1p").max())


def diagnostics(mesh: Mesh, params: MaterialParams, state: State, p: float) -> Diagnostics:
    w = state.omega
    psi = float(np.min(1.0 - w))
    grad = spaces.grad_lp_norm(mesh, w, p)
    lam = spaces.localization_measure(mesh, w, p)
    sig = fem.stress_field(mesh, params, state.u, state.eps_cr, np.clip(w, 0.0, 1.0))
    sup, ratio = spaces.sup_norm_check(mesh, w, p)
    return Diagnostics(
        max_omega=float(np.max(w)),
        min_one_minus_omega=psi,
        grad_omega_lp=grad,
        lambda_=lam,
        max_vm_stress=float(np.max(von_mises(sig))),
        w1p_omega=spaces.w1p_norm(mesh, w, p),
        sup_eps_cr=float(np.max(np.abs(state.eps_cr))) if state.eps_cr.size else 0.0,
        sup_to_w1p=ratio,
    )


def _max_norm(du: np.ndarray) -> float:
    return float(np.max(np.hypot(du[:, 0], du[:, 1]))) if len(du) else 0.0


def equilibrium(mesh, params, eps_cr, omega, load, dirichlet) -> np.ndarray:
    return fem.solve(fem.assemble(mesh, params, omega, eps_cr, load, dirichlet))


def picard_step(state: State, mesh: Mesh, params: MaterialParams, load, dirichlet,
                dt: float, tol: float = 1e-10, max_iters: int = 50, *,
                method: str = "rk4", damage_ceiling: float = 1.0, p: float = 4.0):
    """Advance ``state`` by ``dt`` with the staggered fixed-point iteration.

    ``load`` and ``dirichlet`` are the body load and boundary displacements at
    the end of the step. Within an integration sweep the displacement varies
    linearly from ``state.u`` to the current iterate. Iteration stops once
    the max nodal displacement update falls below ``tol`` times the max nodal
    displacement. Returns ``(new_state, report)``.
    """
    u_k = equilibrium(mesh, params, state.eps_cr, state.omega, load, dirichlet)
    fields_k = (state.eps_cr, state.omega)
    updates = []
    for k in range(1, max_iters + 1):
        ec, om, dmax = evolve_fields(mesh, params, state.u, state.eps_cr, state.omega, dt,
                                     u_end=u_k, end_fields=fields_k, method=method,
                                     damage_ceiling=damage_ceiling)
        u_next = equilibrium(mesh, params, ec, om, load, dirichlet)
        fields_k = (ec, om)
        du = _max_norm(u_next - u_k)
        updates.append(du)
        u_k = u_next
        scale = _max_norm(u_k)
        if du <= tol * (scale if scale > 0 else 1.0):
            break
    else:
        raise PicardDiverged(f"no convergence within {max_iters} iterations at t={state.t + dt:.6g}",
                             ratios=_ratios(updates))
    new = State(state.t + dt, u_k, ec, om)
    report = StepReport(new.t, dt, k, tuple(_ratios(updates)), dmax,
                        diagnostics(mesh, params, new, p))
    return new, report


def _ratios(updates):
    return [b / a for a, b in zip(updates[:-1], updates[1:]) if a > 0]


def _as_schedule(value):
    if value is None:
        return lambda t: None
    if callable(value):
        return value
    arr = np.asarray(value, dtype=float)
    return lambda t: arr


def run(mesh: Mesh, params: MaterialParams, omega0, dirichlet, t_end: float,
        config: SimConfig = SimConfig(), *, eps_cr0=None, load=None, t0: float = 0.0,
        keep_states: bool = False, observer: Optional[Callable[[State, StepReport], Any]] = None
        ) -> RunResult:
    """March from ``t0`` until ``t_end`` or until some node reaches ``omega_crit``.

    ``dirichlet`` and ``load`` are arrays or callables of time (see
    :func:`fem.assemble` for shapes). The rupture time is the earliest nodal
    crossing of ``omega_crit``, interpolated linearly within the final step.
    """
    omega0 = np.asarray(omega0, dtype=float).reshape(mesh.n_nodes).copy()
    eps_cr0 = (np.zeros((mesh.n_nodes, 3)) if eps_cr0 is None
               else np.asarray(eps_cr0, dtype=float).reshape(mesh.n_nodes, 3).copy())
    bc = _as_schedule(dirichlet)
    q = _as_schedule(load)
    ecfg = config.evolve_config(params)
    member = spaces.membership_Y(mesh, omega0, config.norm_config())
    if not member:
        warnings.warn(f"initial damage outside the admissible set ({member.reason}); continuing",
                      RuntimeWarning, stacklevel=2)

    try:
        u0 = equilibrium(mesh, params, eps_cr0, omega0, q(t0), bc(t0))
    except SolverError as exc:
        zero = np.zeros((mesh.n_nodes, 2))
        st = State(t0, zero, eps_cr0, omega0)
        init = StepReport(t0, 0.0, 0, (), 0.0, diagnostics(mesh, params, st, config.p))
        return RunResult(init, [], Termination.SINGULAR_SYSTEM, t0, st, message=str(exc),
                         initial_state=st)
    state = State(t0, u0, eps_cr0, omega0)
    initial = StepReport(t0, 0.0, 0, (), 0.0, diagnostics(mesh, params, state, config.p))
    result = RunResult(initial, [], Termination.REACHED_T, t0, state, initial_state=state)
    if keep_states:
        result.states.append(state)
    if omega0.max() >= params.omega_crit:
        result.termination, result.t_star = Termination.RUPTURE, t0
        result.critical_node = int(np.argmax(omega0))
        return result

    dt = ecfg.dt_init
    eps_t = 1e-12 * max(1.0, abs(t_end))
    while state.t < t_end - eps_t:
        if len(result.steps) >= config.max_steps:
            result.termination = Termination.STEP_LIMIT
            break
        dt_try = min(dt, t_end - state.t)
        try:
            new, report = picard_step(state, mesh, params, q(state.t + dt_try), bc(state.t + dt_try),
                                      dt_try, config.picard_tol, config.picard_max_iters,
                                      method=ecfg.method, damage_ceiling=ecfg.damage_ceiling,
                                      p=config.p)
        except (SingularityError, PicardDiverged) as exc:
            if dt_try <= ecfg.dt_min:
                kind = (Termination.RUPTURE if isinstance(exc, SingularityError)
                        else Termination.PICARD_DIVERGED)
                result.termination, result.message = kind, str(exc)
                if kind is Termination.RUPTURE:
                    result.t_star = state.t
                    result.critical_node = getattr(exc, "node", None)
                break
            dt = max(ecfg.dt_min, 0.5 * dt_try)
            continue
        except SolverError as exc:
            result.termination, result.message = Termination.SINGULAR_SYSTEM, str(exc)
            break
        try:
            accepted, dt_next = adapt_dt(dt_try, report.max_domega, ecfg)
        except RuptureImminent as exc:
            result.termination, result.message = Termination.RUPTURE, str(exc)
            result.t_star = state.t
            result.critical_node = int(np.argmax(new.omega - state.omega))
            break
        if not accepted:
            dt = dt_next
            continue
        # keep the proposal based on the unclipped step when the end time truncated it
        dt = dt_next if dt_try == dt else max(dt, dt_next)
        old = state
        state = new
        result.steps.append(report)
        if keep_states:
            result.states.append(state)
        if observer is not None:
            observer(state, report)
        crossing = (old.omega < params.omega_crit) & (state.omega >= params.omega_crit)
        if np.any(crossing):
            idx = np.nonzero(crossing)[0]
            frac = (params.omega_crit - old.omega[idx]) / (state.omega[idx] - old.omega[idx])
            j = int(np.argmin(frac))
            result.termination = Termination.RUPTURE
            result.t_star = float(old.t + frac[j] * report.dt)
            result.critical_node = int(idx[j])
            break
    result.final_state = state
    result.t_final = state.t
    log.debug("run finished: %s at t=%.6g after %d steps", result.termination.value,
              state.t, len(result.steps))
    return result


@dataclass(frozen=True)
class Problem:
    """Everything :func:`run` needs, bundled so sweeps can build it per value."""

    mesh: Mesh
    params: MaterialParams
    omega0: np.ndarray
    dirichlet: Any
    t_end: float
    config: SimConfig = SimConfig()
    eps_cr0: Optional[np.ndarray] = None
    load: Any = None

    def run(self, **kwargs) -> RunResult:
        return run(self.mesh, self.params, self.omega0, self.dirichlet, self.t_end, self.config,
                   eps_cr0=self.eps_cr0, load=self.load, **kwargs)


@dataclass(frozen=True)
class SweepRow:
    value: float
    t_star: float
    lambda0: float
    lambda_late: float
    picard_mean_iters: float
    termination: str
    error: Optional[str] = None
    lambda_final: float = math.nan
    t_final: float = math.nan


def summarize(value: float, result: RunResult) -> SweepRow:
    t_star = result.t_star if result.t_star is not None else math.nan
    lam0 = result.initial.diagnostics.lambda_
    lam_late = math.nan
    if result.t_star is not None and result.t_star > result.initial.t:
        lam_late = result.lambda_at(result.initial.t + 0.95 * (result.t_star - result.initial.t))
    iters = [r.picard_iters for r in result.steps]
    return SweepRow(float(value), t_star, lam0, lam_late,
                    float(np.mean(iters)) if iters else 0.0, result.termination.value,
                    lambda_final=result.reports[-1].diagnostics.lambda_, t_final=result.t_final)


def _sweep_one(factory, value):
    try:
        return summarize(value, factory(value).run())
    except Exception as exc:  # recorded per row, the sweep continues
        return SweepRow(float(value), math.nan, math.nan, math.nan, math.nan, "Error",
                        f"{type(exc).__name__}: {exc}")


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("CREEPDAM_THREADS", "1")))
    except ValueError:
        return 1


def lifetime_sweep(factory: Callable[[float], Problem], values: Sequence[float],
                   workers: Optional[int] = None) -> list:
    """Run ``factory(value)`` for each value; one :class:`SweepRow` per value, sorted.

    Rows may run in separate processes (``CREEPDAM_THREADS`` caps the count);
    ``factory`` must then be picklable.
    """
    values = [float(v) for v in values]
    workers = worker_count() if workers is None else max(1, workers)
    if workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(values))) as pool:
            rows = list(pool.map(_sweep_one, [factory] * len(values), values))
    else:
        rows = [_sweep_one(factory, v) for v in values]
    return sorted(rows, key=lambda r: r.value)
