"""Linear-triangle discretisation of damage-weighted plane-stress elasticity.

Internal variables live on the nodes and are averaged to one value per
element for assembly (one-point quadrature; the integrands are element
constant apart from the damage factor). Boundary displacements are imposed
by eliminating the constrained rows and columns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, SolverError
from .geometry import Mesh
from .material import MaterialParams, elastic_matrix, stiffness_scale, stress_from_rho, make_rho

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class _MeshOps:
    grads: np.ndarray      # (M, 3, 2) shape-function gradients
    bmat: np.ndarray       # (M, 3, 6) strain-displacement, engineering shear row
    dofs: np.ndarray       # (M, 6)
    csr_map: np.ndarray    # (M*36,) position of each element entry in K.data
    indptr: np.ndarray
    indices: np.ndarray
    node_weight: np.ndarray  # (N,) sum of adjacent element areas


def _mesh_ops(mesh: Mesh) -> _MeshOps:
    cache = mesh.__dict__.setdefault("_fem_cache", {})
    ops = cache.get("ops")
    if ops is not None:
        return ops
    xy = mesh.nodes[mesh.triangles]               # (M, 3, 2)
    area2 = 2.0 * mesh.element_areas
    x, y = xy[..., 0], xy[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1) / area2[:, None]
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1) / area2[:, None]
    grads = np.stack([b, c], axis=2)
    bmat = np.zeros((mesh.n_elements, 3, 6))
    bmat[:, 0, 0::2] = b
    bmat[:, 1, 1::2] = c
    bmat[:, 2, 0::2] = c
    bmat[:, 2, 1::2] = b
    dofs = np.empty((mesh.n_elements, 6), dtype=np.int64)
    dofs[:, 0::2] = 2 * mesh.triangles
    dofs[:, 1::2] = 2 * mesh.triangles + 1
    ndof = 2 * mesh.n_nodes
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    keys, csr_map = np.unique(rows * ndof + cols, return_inverse=True)
    urows, indices = np.divmod(keys, ndof)
    indptr = np.zeros(ndof + 1, dtype=np.int64)
    np.add.at(indptr, urows + 1, 1)
    indptr = np.cumsum(indptr)
    weight = np.bincount(mesh.triangles.ravel(), weights=np.repeat(mesh.element_areas, 3),
                         minlength=mesh.n_nodes)
    ops = _MeshOps(grads, bmat, dofs, csr_map.ravel(), indptr, indices.astype(np.int64), weight)
    cache["ops"] = ops
    return ops


def element_average(mesh: Mesh, nodal) -> np.ndarray:
    """Mean of the three vertex values on each element."""
    return np.asarray(nodal, dtype=float)[mesh.triangles].mean(axis=1)


def nodal_average(mesh: Mesh, element_values) -> np.ndarray:
    """Area-weighted average of element values onto the nodes."""
    vals = np.asarray(element_values, dtype=float)
    ops = _mesh_ops(mesh)
    flat = vals.reshape(mesh.n_elements, -1)
    out = np.empty((mesh.n_nodes, flat.shape[1]))
    w = mesh.element_areas
    for k in range(flat.shape[1]):
        out[:, k] = np.bincount(mesh.triangles.ravel(), weights=np.repeat(flat[:, k] * w, 3),
                                minlength=mesh.n_nodes)
    out /= ops.node_weight[:, None]
    return out.reshape((mesh.n_nodes,) + vals.shape[1:])


def gradient(mesh: Mesh, field) -> np.ndarray:
    """Element-constant gradient ``(M, 2)`` of a nodal scalar field."""
    ops = _mesh_ops(mesh)
    return np.einsum("eij,ei->ej", ops.grads, np.asarray(field, dtype=float)[mesh.triangles])


def strain(mesh: Mesh, u) -> np.ndarray:
    """Element strain ``(eps11, eps22, eps12)`` of a nodal displacement, tensorial shear."""
    ops = _mesh_ops(mesh)
    ue = np.asarray(u, dtype=float)[mesh.triangles]          # (M, 3, 2)
    g = ops.grads
    e11 = np.einsum("ei,ei->e", g[..., 0], ue[..., 0])
    e22 = np.einsum("ei,ei->e", g[..., 1], ue[..., 1])
    e12 = 0.5 * (np.einsum("ei,ei->e", g[..., 1], ue[..., 0])
                 + np.einsum("ei,ei->e", g[..., 0], ue[..., 1]))
    return np.column_stack([e11, e22, e12])


def nodal_strain(mesh: Mesh, u) -> np.ndarray:
    """Strain recovered at the nodes by area-weighted averaging."""
    return nodal_average(mesh, strain(mesh, u))


def recovered_strain(mesh: Mesh, params: MaterialParams, u, eps_cr, omega) -> np.ndarray:
    """Nodal total strain consistent with the recovered nodal stress.

    Element stresses are averaged onto the nodes (area weighted) and mapped
    back through the node's own damaged stiffness:
    ``eps = eps_cr + D(omega_node)^-1 sigma_node``. Across a damaged band the
    stress, not the strain, is the continuous quantity, so this keeps the
    node's stress equal to that of its surroundings. Nodes with a vanishing
    stiffness fall back to the averaged element strain.
    """
    eps_cr = np.asarray(eps_cr, dtype=float).reshape(mesh.n_nodes, 3)
    omega = np.asarray(omega, dtype=float).reshape(mesh.n_nodes)
    sigma = nodal_average(mesh, stress_field(mesh, params, u, eps_cr, omega))
    scale = np.asarray(stiffness_scale(params, omega), dtype=float)
    ok = scale > 1e-12
    dinv = np.linalg.inv(elastic_matrix(params))
    elastic = (sigma @ dinv.T) * np.array([1.0, 1.0, 0.5])
    out = nodal_strain(mesh, u)
    out[ok] = eps_cr[ok] + elastic[ok] / scale[ok, None]
    return out


def stress_field(mesh: Mesh, params: MaterialParams, u, eps_cr, omega) -> np.ndarray:
    """Element stresses from nodal ``u``, ``eps_cr`` and ``omega``."""
    rho = make_rho(strain(mesh, u), element_average(mesh, eps_cr), element_average(mesh, omega))
    return stress_from_rho(params, rho)


def consistent_load(mesh: Mesh, body_load) -> np.ndarray:
    """Nodal force vector ``(N, 2)`` of a P1-interpolated body load."""
    q = np.asarray(body_load, dtype=float).reshape(mesh.n_nodes, 2)
    qe = q[mesh.triangles]                                   # (M, 3, 2)
    a = mesh.element_areas[:, None, None]
    fe = a / 12.0 * (qe + qe.sum(axis=1, keepdims=True))
    out = np.zeros((mesh.n_nodes, 2))
    for k in range(2):
        out[:, k] = np.bincount(mesh.triangles.ravel(), weights=fe[..., k].ravel(),
                                minlength=mesh.n_nodes)
    return out


def affine_dirichlet(mesh: Mesh, grad, offset=(0.0, 0.0)) -> np.ndarray:
    """Boundary values of ``u(x) = grad @ x + offset``, aligned with ``mesh.boundary_nodes``."""
    x = mesh.nodes[mesh.boundary_nodes]
    return x @ np.asarray(grad, dtype=float).T + np.asarray(offset, dtype=float)


@dataclass(frozen=True)
class LinearSystem:
    """Assembled stiffness ``K``, load ``f`` and the Dirichlet constraint map."""

    K: sp.csr_matrix
    f: np.ndarray
    fixed_dofs: np.ndarray
    fixed_values: np.ndarray
    omega_range: tuple

    @property
    def n_nodes(self) -> int:
        return len(self.f) // 2

    @property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(len(self.f), dtype=bool)
        mask[self.fixed_dofs] = False
        return np.nonzero(mask)[0]


def _dirichlet_dofs(mesh: Mesh, dirichlet):
    if isinstance(dirichlet, dict):
        nodes = np.array(sorted(dirichlet), dtype=np.int64)
        values = np.array([dirichlet[k] for k in nodes.tolist()], dtype=float).reshape(-1, 2)
    else:
        nodes = mesh.boundary_nodes
        values = np.asarray(dirichlet, dtype=float).reshape(-1, 2)
        if len(values) != len(nodes):
            raise DomainError(
                f"expected {len(nodes)} boundary displacements, got {len(values)}")
    missing = np.setdiff1d(mesh.boundary_nodes, nodes)
    if len(missing):
        raise DomainError(f"no prescribed displacement for boundary node {int(missing[0])}")
    dofs = np.column_stack([2 * nodes, 2 * nodes + 1]).ravel()
    return dofs, values.ravel()


def _element_stiffness(mesh: Mesh, params: MaterialParams) -> np.ndarray:
    cache = mesh.__dict__.setdefault("_fem_cache", {})
    key = ("ke0", params.E, params.nu)
    if key not in cache:
        ops = _mesh_ops(mesh)
        dmat = elastic_matrix(params)
        cache[key] = (np.einsum("eki,kl,elj->eij", ops.bmat, dmat, ops.bmat)
                      * mesh.element_areas[:, None, None])
    return cache[key]


def assemble(mesh: Mesh, params: MaterialParams, omega, eps_cr=None, body_load=None,
             dirichlet=None, *, eps_cr_on: str = "nodes") -> LinearSystem:
    """Assemble ``K(omega) u = f`` for the damaged elasticity problem.

    ``f`` collects the body load and the internal force of the creep strain,
    ``int B^T D(omega) eps_cr``. ``eps_cr`` is nodal by default; pass
    ``eps_cr_on="elements"`` for an element-wise field. ``dirichlet`` holds
    the displacements of ``mesh.boundary_nodes`` (``(n_boundary, 2)``) or a
    ``{node: (ux, uy)}`` map covering every boundary node.
    """
    omega = np.asarray(omega, dtype=float).reshape(mesh.n_nodes)
    if np.any(~np.isfinite(omega)) or omega.min() < 0.0 or omega.max() > 1.0:
        bad = int(np.argmax((omega > 1.0) | (omega < 0.0) | ~np.isfinite(omega)))
        raise DomainError(f"damage {omega[bad]!r} at node {bad} lies outside [0, 1]")
    ops = _mesh_ops(mesh)
    scale = stiffness_scale(params, element_average(mesh, omega))
    dmat = elastic_matrix(params)
    ke0 = _element_stiffness(mesh, params)
    vals = (ke0 * scale[:, None, None]).ravel()
    ndof = 2 * mesh.n_nodes
    data = np.bincount(ops.csr_map, weights=vals, minlength=len(ops.indices))
    K = sp.csr_matrix((data, ops.indices, ops.indptr), shape=(ndof, ndof))

    f = np.zeros(ndof)
    if body_load is not None:
        f += consistent_load(mesh, body_load).ravel()
    if eps_cr is not None:
        ec = np.asarray(eps_cr, dtype=float)
        if eps_cr_on == "nodes":
            ec = element_average(mesh, ec.reshape(mesh.n_nodes, 3))
        elif eps_cr_on == "elements":
            ec = ec.reshape(mesh.n_elements, 3)
        else:
            raise DomainError(f"eps_cr_on must be 'nodes' or 'elements', got {eps_cr_on!r}")
        eng = ec * np.array([1.0, 1.0, 2.0])
        sig = (eng @ dmat.T) * scale[:, None]
        fe = np.einsum("eki,ek->ei", ops.bmat, sig) * mesh.element_areas[:, None]
        f += np.bincount(ops.dofs.ravel(), weights=fe.ravel(), minlength=ndof)

    if dirichlet is None:
        dirichlet = np.zeros((len(mesh.boundary_nodes), 2))
    fixed, values = _dirichlet_dofs(mesh, dirichlet)
    return LinearSystem(K, f, fixed, values, (float(omega.min()), float(omega.max())))


def solve(system: LinearSystem) -> np.ndarray:
    """Nodal displacement ``(N, 2)`` solving the constrained system."""
    ndof = len(system.f)
    u = np.zeros(ndof)
    u[system.fixed_dofs] = system.fixed_values
    free = system.free_dofs
    if len(free) == 0:
        return u.reshape(-1, 2)
    K = system.K
    Kff = K[free][:, free].tocsc()
    rhs = system.f[free] - K[free][:, system.fixed_dofs] @ system.fixed_values
    norm_rhs = np.linalg.norm(rhs)
    if norm_rhs == 0.0:
        return u.reshape(-1, 2)
    wmin, wmax = system.omega_range
    try:
        lu = spla.splu(Kff)
    except RuntimeError as exc:
        raise SolverError(f"stiffness factorisation failed ({exc}); "
                          f"damage range [{wmin:.6g}, {wmax:.6g}]") from None
    x = lu.solve(rhs)
    res = rhs - Kff @ x
    if np.linalg.norm(res) > RESIDUAL_TOL * norm_rhs:
        x += lu.solve(res)
        res = rhs - Kff @ x
    rel = np.linalg.norm(res) / norm_rhs
    if not np.isfinite(rel) or rel > RESIDUAL_TOL:
        raise SolverError(f"relative residual {rel:.3g} exceeds {RESIDUAL_TOL:g}; "
                          f"damage range [{wmin:.6g}, {wmax:.6g}]")
    u[free] = x
    return u.reshape(-1, 2)


def residual(system: LinearSystem, u) -> float:
    """Relative equilibrium residual of ``u`` on the free degrees of freedom."""
    free = system.free_dofs
    uu = np.asarray(u, dtype=float).ravel()
    r = system.K[free] @ uu - system.f[free]
    scale = max(np.linalg.norm(system.f[free]),
                np.linalg.norm(system.K[free][:, system.fixed_dofs] @ system.fixed_values))
    return float(np.linalg.norm(r) / scale) if scale > 0 else float(np.linalg.norm(r))
