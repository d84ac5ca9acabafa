"""Time integration of the nodal creep strain and damage at given displacements."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, RuptureImminent, SingularityError
from .fem import nodal_strain, recovered_strain
from .geometry import Mesh
from .material import SINGULARITY_FLOOR, MaterialParams

METHODS = {"euler": kernels.EULER, "rk4": kernels.RK4}


@dataclass(frozen=True)
class EvolveConfig:
    """Step-size control for the internal-variable integration.

    ``max_domega_per_step`` bounds the nodal damage increment of an accepted
    step. ``damage_ceiling`` is the largest damage any integration stage may
    reach; past it the step is refused.
    """

    dt_init: float = 1e-3
    dt_min: float = 1e-14
    dt_max: float = 0.05
    max_domega_per_step: float = 0.01
    method: str = "rk4"
    damage_ceiling: float = 0.975
    growth: float = 1.5

    def __post_init__(self):
        if not 0.0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise DomainError("need 0 < dt_min <= dt_init <= dt_max")
        if not 0.0 < self.max_domega_per_step < 1.0:
            raise DomainError("max_domega_per_step must lie in (0, 1)")
        if self.method not in METHODS:
            raise DomainError(f"unknown integrator {self.method!r}; use 'euler' or 'rk4'")
        if not 0.0 < self.damage_ceiling <= 1.0:
            raise DomainError("damage_ceiling must lie in (0, 1]")
        if self.growth <= 1.0:
            raise DomainError("growth factor must exceed 1")


def material_tuple(params: MaterialParams) -> tuple:
    return (params.E, params.nu, params.A, params.n, params.B, params.m, params.qd,
            params.omega_crit, params.fully_coupled)


def evolve_fields(mesh: Mesh, params: MaterialParams, u, eps_cr, omega, dt: float, *,
                  u_end=None, end_fields=None, method: str = "rk4",
                  damage_ceiling: float = 1.0, floor: float = SINGULARITY_FLOOR,
                  recovery: str = "stress"):
    """Integrate ``d(eps_cr)/dt = R(rho)``, ``d(omega)/dt = S(rho)`` over one step.

    Each node is advanced independently with its recovered total strain
    (``recovery="stress"``: see :func:`fem.recovered_strain`; ``"strain"``:
    plain area-weighted strain averaging). The displacement is frozen at
    ``u``, or varies linearly to ``u_end`` across the step when that is
    given; ``end_fields=(eps_cr, omega)`` are the internal variables ``u_end``
    is in equilibrium with (default: the start fields). Returns ``(eps_cr, omega, max_domega)``.
    Raises :class:`SingularityError` if any stage takes a node's damage past
    ``damage_ceiling`` or within ``floor`` of 1.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    omega = np.asarray(omega, dtype=float)
    eps_cr = np.asarray(eps_cr, dtype=float)
    if recovery == "stress":
        eps0 = recovered_strain(mesh, params, u, eps_cr, omega)
        if u_end is not None:
            ec_end, om_end = (eps_cr, omega) if end_fields is None else end_fields
            eps1 = recovered_strain(mesh, params, u_end, ec_end, om_end)
    elif recovery == "strain":
        eps0 = nodal_strain(mesh, u)
        if u_end is not None:
            eps1 = nodal_strain(mesh, u_end)
    else:
        raise DomainError(f"unknown recovery {recovery!r}; use 'stress' or 'strain'")
    if u_end is None:
        eps1 = eps0
    ec, om, bad = kernels.integrate_nodes(
        material_tuple(params), eps0, eps1, eps_cr, omega,
        float(dt), METHODS[method], float(damage_ceiling), float(floor))
    if bad >= 0:
        raise SingularityError(
            f"node {bad}: damage reached the ceiling {damage_ceiling:g} or the update "
            f"was not finite within the step",
            node=bad)
    return ec, om, float(np.max(om - omega)) if len(om) else 0.0


def adapt_dt(prev_dt: float, max_domega: float, config: EvolveConfig):
    """Decide whether a step is accepted and propose the next step size.

    Returns ``(accepted, new_dt)``. A step whose damage increment exceeds the
    cap is rejected and retried with at most half the step. Well below the cap
    (under half of it) the step grows by ``config.growth`` up to ``dt_max``.
    Raises :class:`RuptureImminent` when a step at ``dt_min`` is rejected.
    """
    cap = config.max_domega_per_step
    if max_domega > cap:
        if prev_dt <= config.dt_min:
            raise RuptureImminent(
                f"damage increment {max_domega:.3g} exceeds the cap {cap:g} at dt_min")
        shrink = min(0.5, 0.9 * cap / max_domega)
        return False, max(config.dt_min, prev_dt * shrink)
    if max_domega < 0.5 * cap:
        return True, min(config.growth * prev_dt, config.dt_max)
    return True, min(max(prev_dt, config.dt_min), config.dt_max)
