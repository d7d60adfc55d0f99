"""L2 / H1 norms of discrete fields and errors against analytic functions."""

from __future__ import annotations

import numpy as np

from .assembly import assemble_graddiv, assemble_mass, assemble_stiffness
from .dofmap import DofMismatchError, Field
from .quadrature import collapsed_gauss, p1_values


def _quad(A, x) -> float:
    return float(np.sqrt(max(x @ (A @ x), 0.0)))


def compute_norms(u: Field, reference: Field | None = None) -> dict:
    """``l2``, ``h1_semi``, ``div_l2`` of a velocity field, plus ``l2_error`` against ``reference``."""
    if u.kind != "velocity":
        raise DofMismatchError("norms are computed for velocity fields")
    d = u.dofmap
    out = {
        "l2": _quad(assemble_mass(d), u.values),
        "h1_semi": _quad(assemble_stiffness(d), u.values),
        "div_l2": _quad(assemble_graddiv(d), u.values),
        "l2_error": None,
    }
    if reference is not None:
        d.check_same(reference.dofmap)
        out["l2_error"] = _quad(assemble_mass(d), u.values - reference.values)
    return out


def l2_norm(dofmap, values) -> float:
    return _quad(assemble_mass(dofmap), values)


def h1_seminorm(dofmap, values) -> float:
    return _quad(assemble_stiffness(dofmap), values)


def velocity_gradients(u: Field, rule=None) -> np.ndarray:
    """Velocity gradient tensor at quadrature points, shape (E, Q, 2, 2) indexed [.., component, direction]."""
    g = u.dofmap.geometry(rule)
    w = u.components[u.dofmap.element_nodes]
    return np.einsum("eqjd,ejc->eqcd", g.grad, w)


def error_norms(u: Field, exact, exact_grad, p: Field | None = None, exact_p=None, rule=None) -> dict:
    """L2 and H1-seminorm velocity errors (and pressure L2 error) against analytic functions.

    ``exact(x, y) -> (ux, uy)``; ``exact_grad(x, y) -> ((dux/dx, dux/dy), (duy/dx, duy/dy))``.
    """
    rule = rule or collapsed_gauss(8)
    d = u.dofmap
    g = d.geometry(rule)
    x, y = g.points[..., 0], g.points[..., 1]
    w = u.components[d.element_nodes]
    uh = np.einsum("qj,ejc->eqc", g.phi, w)
    ue = np.stack(np.broadcast_arrays(*exact(x, y)), axis=-1)
    gh = np.einsum("eqjd,ejc->eqcd", g.grad, w)
    ge = np.array([[np.broadcast_to(c, x.shape) for c in row] for row in exact_grad(x, y)])
    ge = np.moveaxis(ge, (0, 1), (2, 3))
    out = {
        "u_l2": float(np.sqrt(np.sum(g.wdet * np.sum((uh - ue) ** 2, axis=-1)))),
        "u_h1": float(np.sqrt(np.sum(g.wdet * np.sum((gh - ge) ** 2, axis=(-1, -2))))),
    }
    if p is not None:
        ph = np.einsum("qa,ea->eq", p1_values(rule.bary), p.values[d.mesh.triangles])
        out["p_l2"] = float(np.sqrt(np.sum(g.wdet * (ph - exact_p(x, y)) ** 2)))
    return out
