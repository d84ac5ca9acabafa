"""Pointwise Kachanov-Rabotnov creep-damage constitutive model (plane stress).

All tensors are stored in Voigt order ``(11, 22, 12)`` with the *tensorial*
shear component. The engineering shear ``2*eps12`` only appears inside the
stiffness product, see :func:`stress_from_rho`.

A local state vector ``rho`` has seven components::

    rho = (eps11(u), eps22(u), eps12(u), epscr11, epscr22, epscr12, omega)

Every function accepts a single vector or a stacked array ``(..., 7)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularityError

#: evaluating rates with ``1 - omega`` below this raises :class:`SingularityError`
SINGULARITY_FLOOR = 1e-9


class Coupling(str, enum.Enum):
    FULLY = "fully"
    PARTLY = "partly"

    @classmethod
    def parse(cls, value) -> "Coupling":
        if isinstance(value, Coupling):
            return value
        key = str(value).strip().lower()
        aliases = {"fully": cls.FULLY, "fullycoupled": cls.FULLY, "full": cls.FULLY,
                   "partly": cls.PARTLY, "partlycoupled": cls.PARTLY, "partial": cls.PARTLY}
        try:
            return aliases[key.replace("_", "").replace("-", "")]
        except KeyError:
            raise DomainError(f"unknown coupling mode {value!r}") from None


@dataclass(frozen=True)
class MaterialParams:
    """Material constants of the creep-damage model.

    ``qd`` is the damage exponent of the damage rate law (``(1-omega)**-qd``);
    it is named so to keep ``q`` free for the body load.
    """

    E: float = 1000.0
    nu: float = 0.3
    A: float = 0.0
    n: float = 1.0
    B: float = 1.0
    m: float = 2.0
    qd: float = 1.0
    omega_crit: float = 0.99
    coupling: Coupling = Coupling.FULLY

    def __post_init__(self):
        object.__setattr__(self, "coupling", Coupling.parse(self.coupling))
        for name in ("E", "nu", "A", "n", "B", "m", "qd", "omega_crit"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        if self.E <= 0:
            raise DomainError(f"E must be positive, got {self.E}")
        if not 0.0 <= self.nu < 0.5:
            raise DomainError(f"nu must lie in [0, 0.5), got {self.nu}")
        if self.A < 0 or self.B < 0:
            raise DomainError("A and B must be non-negative")
        if self.n < 1 or self.m < 1:
            raise DomainError("n and m must be >= 1")
        if self.qd < 0:
            raise DomainError("qd must be non-negative")
        if not 0.0 < self.omega_crit < 1.0:
            raise DomainError(f"omega_crit must lie in (0, 1), got {self.omega_crit}")

    @property
    def fully_coupled(self) -> bool:
        return self.coupling is Coupling.FULLY

    def replace(self, **changes) -> "MaterialParams":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return MaterialParams(**fields)


def elastic_matrix(p: MaterialParams) -> np.ndarray:
    """Undamaged plane-stress stiffness acting on ``(e11, e22, 2*e12)``."""
    c = p.E / (1.0 - p.nu**2)
    return c * np.array([[1.0, p.nu, 0.0],
                         [p.nu, 1.0, 0.0],
                         [0.0, 0.0, 0.5 * (1.0 - p.nu)]])


def stiffness_scale(p: MaterialParams, omega):
    """Factor multiplying the undamaged stiffness at damage ``omega``."""
    omega = np.asarray(omega, dtype=float)
    if p.fully_coupled:
        return 1.0 - omega
    return np.where(omega < p.omega_crit, 1.0, 0.0)


def _check_omega(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(~np.isfinite(omega)) or np.any(omega < 0.0) or np.any(omega > 1.0):
        raise DomainError("damage must lie in [0, 1]")
    return omega


def stiffness_matrix(p: MaterialParams, omega: float) -> np.ndarray:
    """Damage-dependent 3x3 plane-stress stiffness ``D(omega)``.

    Fully coupled: ``(1 - omega) * D0``. Partly coupled: ``D0`` below the
    critical damage and the zero matrix at or above it.
    """
    omega = float(_check_omega(omega))
    return float(stiffness_scale(p, omega)) * elastic_matrix(p)


def stress_from_rho(p: MaterialParams, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    omega = _check_omega(rho[..., 6])
    elastic = np.stack([rho[..., 0] - rho[..., 3],
                        rho[..., 1] - rho[..., 4],
                        2.0 * (rho[..., 2] - rho[..., 5])], axis=-1)
    sigma = elastic @ elastic_matrix(p).T
    return sigma * np.asarray(stiffness_scale(p, omega))[..., None]


def deviator(sigma) -> np.ndarray:
    """Deviator ``(s11, s22, s12, s33)`` of a plane-stress tensor (``sigma33 = 0``)."""
    sigma = np.asarray(sigma, dtype=float)
    mean = (sigma[..., 0] + sigma[..., 1]) / 3.0
    return np.stack([sigma[..., 0] - mean, sigma[..., 1] - mean, sigma[..., 2], -mean], axis=-1)


def von_mises(sigma):
    """Plane-stress von Mises stress ``sqrt(s11^2 + s22^2 - s11*s22 + 3*s12^2)``."""
    sigma = np.asarray(sigma, dtype=float)
    s11, s22, s12 = sigma[..., 0], sigma[..., 1], sigma[..., 2]
    # guard tiny negative round-off under the root
    return np.sqrt(np.maximum(s11 * s11 + s22 * s22 - s11 * s22 + 3.0 * s12 * s12, 0.0))


def _intact_fraction(rho, floor):
    psi = 1.0 - np.asarray(rho, dtype=float)[..., 6]
    if np.any(psi < floor):
        raise SingularityError(f"1 - omega fell below {floor:g}")
    return psi


def creep_rate(p: MaterialParams, rho, floor: float = SINGULARITY_FLOOR) -> np.ndarray:
    """In-plane Norton creep strain rate, tensorial shear component."""
    psi = _intact_fraction(rho, floor)
    sigma = stress_from_rho(p, rho)
    if p.A == 0.0:
        return np.zeros_like(sigma)
    s = deviator(sigma)[..., :3]
    vm = von_mises(sigma)
    factor = 1.5 * p.A * vm ** (p.n - 1.0) * psi ** (-p.n)
    return s * np.asarray(factor)[..., None]


def damage_rate(p: MaterialParams, rho, floor: float = SINGULARITY_FLOOR):
    psi = _intact_fraction(rho, floor)
    if p.B == 0.0:
        return np.zeros_like(psi)
    vm = von_mises(stress_from_rho(p, rho))
    return p.B * vm**p.m * psi ** (-p.qd)


def make_rho(total_strain, creep_strain, omega) -> np.ndarray:
    total_strain = np.asarray(total_strain, dtype=float)
    creep_strain = np.asarray(creep_strain, dtype=float)
    omega = np.asarray(omega, dtype=float)
    return np.concatenate([total_strain, creep_strain, omega[..., None]], axis=-1)


# closed-form damage history at constant equivalent stress (test oracle)

def _uniaxial_check(p, sigma_vm, omega0):
    if p.B <= 0:
        raise DomainError("closed-form damage history needs B > 0")
    if sigma_vm <= 0:
        raise DomainError("closed-form damage history needs sigma_vm > 0")
    if not 0.0 <= omega0 < 1.0:
        raise DomainError("omega0 must lie in [0, 1)")


def analytic_uniaxial_damage(p: MaterialParams, sigma_vm: float, omega0: float, t):
    """Damage at time ``t`` under a constant equivalent stress.

    Integrates ``d(omega)/dt = B sigma^m (1-omega)^-qd`` exactly:
    ``omega(t) = 1 - [(1-omega0)^(qd+1) - B (qd+1) sigma^m t]^(1/(qd+1))``.
    """
    _uniaxial_check(p, sigma_vm, omega0)
    k = p.qd + 1.0
    bracket = (1.0 - omega0) ** k - p.B * k * sigma_vm**p.m * np.asarray(t, dtype=float)
    if np.any(bracket < 0.0):
        raise DomainError("requested time lies past rupture")
    return 1.0 - bracket ** (1.0 / k)


def rupture_time(p: MaterialParams, sigma_vm: float, omega0: float,
                 omega_target: float = 1.0) -> float:
    """Time for damage to grow from ``omega0`` to ``omega_target`` at constant stress."""
    _uniaxial_check(p, sigma_vm, omega0)
    if not omega0 < omega_target <= 1.0:
        raise DomainError("omega_target must lie in (omega0, 1]")
    k = p.qd + 1.0
    return ((1.0 - omega0) ** k - (1.0 - omega_target) ** k) / (p.B * k * sigma_vm**p.m)
