"""Pure numpy implementation of the per-node integration kernel.

Mirrors ``_kernels_c.pyx`` exactly; used when the compiled module is not
available or ``CREEPDAM_PURE_PYTHON`` is set.
"""
import numpy as np

EULER = 0
RK4 = 1


def nodal_rates(mat, eps, epscr, omega):
    """Creep strain rate ``(N, 3)`` and damage rate ``(N,)`` at each node.

    ``mat`` is the tuple ``(E, nu, A, n, B, m, qd, omega_crit, fully)``.
    ``1 - omega`` must already be known to be positive.
    """
    E, nu, A, n, B, m, qd, omega_crit, fully = mat
    psi = 1.0 - omega
    if fully:
        scale = psi
    else:
        scale = np.where(omega < omega_crit, 1.0, 0.0)
    c = E / (1.0 - nu * nu) * scale
    d0 = eps[:, 0] - epscr[:, 0]
    d1 = eps[:, 1] - epscr[:, 1]
    d2 = eps[:, 2] - epscr[:, 2]
    s11 = c * (d0 + nu * d1)
    s22 = c * (nu * d0 + d1)
    s12 = c * (1.0 - nu) * d2
    vm = np.sqrt(np.maximum(s11 * s11 + s22 * s22 - s11 * s22 + 3.0 * s12 * s12, 0.0))
    mean = (s11 + s22) / 3.0
    if A != 0.0:
        f = 1.5 * A * np.power(vm, n - 1.0) * np.power(psi, -n)
        dcr = np.column_stack([f * (s11 - mean), f * (s22 - mean), f * s12])
    else:
        dcr = np.zeros_like(eps)
    if B != 0.0:
        dom = B * np.power(vm, m) * np.power(psi, -qd)
    else:
        dom = np.zeros_like(omega)
    return dcr, dom


def integrate_nodes(mat, eps0, eps1, epscr, omega, dt, method, ceiling, floor):
    """Advance ``(epscr, omega)`` over ``dt`` at every node independently.

    The total strain varies linearly from ``eps0`` to ``eps1`` across the
    step. Returns ``(epscr_new, omega_new, bad)`` where ``bad`` is the lowest
    node index whose damage left ``[0, ceiling]`` or came within ``floor`` of
    1 at any stage, or whose new values are not finite; ``-1`` if none.
    """
    eps0 = np.ascontiguousarray(eps0, dtype=float)
    eps1 = np.ascontiguousarray(eps1, dtype=float)
    epscr = np.ascontiguousarray(epscr, dtype=float)
    omega = np.ascontiguousarray(omega, dtype=float)
    bad = np.zeros(len(omega), dtype=bool)

    def stage(theta, ec, om):
        nonlocal bad
        flag = (om > ceiling) | (1.0 - om < floor)
        bad |= flag
        safe = np.where(flag, 0.0, om)
        dcr, dom = nodal_rates(mat, eps0 + theta * (eps1 - eps0), ec, safe)
        return dcr, dom

    with np.errstate(over="ignore", invalid="ignore"):
        if method == EULER:
            k1c, k1w = stage(0.0, epscr, omega)
            ec_new = epscr + dt * k1c
            om_new = omega + dt * k1w
        else:
            h = 0.5 * dt
            k1c, k1w = stage(0.0, epscr, omega)
            k2c, k2w = stage(0.5, epscr + h * k1c, omega + h * k1w)
            k3c, k3w = stage(0.5, epscr + h * k2c, omega + h * k2w)
            k4c, k4w = stage(1.0, epscr + dt * k3c, omega + dt * k3w)
            w = dt / 6.0
            ec_new = epscr + w * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
            om_new = omega + w * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    bad |= ~np.isfinite(om_new) | (om_new > ceiling) | ~np.all(np.isfinite(ec_new), axis=1)
    om_new = np.minimum(om_new, 1.0)
    idx = np.nonzero(bad)[0]
    return ec_new, om_new, int(idx[0]) if len(idx) else -1
