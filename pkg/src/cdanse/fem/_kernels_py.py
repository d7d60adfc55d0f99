"""Element kernels for the convective terms, vectorised with numpy.

Shapes: ``wloc`` (E, 6, 2) nodal velocity per element, ``phi`` (Q, 6) P2
values, ``grad`` (E, Q, 6, 2) physical P2 gradients, ``wdet`` (E, Q) scaled
quadrature weights. The skew form used throughout is
b*(w, z, v) = 1/2 [((w.grad) z, v) - ((w.grad) v, z)].
"""

import numpy as np


def convection_local(wloc, phi, grad, wdet):
    """(E, 6, 6) scalar block of z -> b*(w, z, .); identical for both velocity components."""
    wq = np.einsum("qj,ejc->eqc", phi, wloc)
    adv = np.einsum("eqc,eqjc->eqj", wq, grad)
    k = np.einsum("eq,qi,eqj->eij", wdet, phi, adv, optimize=True)
    return 0.5 * (k - k.transpose(0, 2, 1))


def newton_local(wloc, phi, grad, wdet):
    """(E, 12, 12) block of z -> b*(z, w, .) and (E, 12) vector b*(w, w, .); local index c*6 + i."""
    E = wloc.shape[0]
    wq = np.einsum("qj,ejc->eqc", phi, wloc)
    gw = np.einsum("eqjd,ejc->eqcd", grad, wloc)
    adv = np.einsum("eqc,eqjc->eqj", wq, grad)
    pp = phi[:, :, None] * phi[:, None, :]  # (Q, i, j)
    t1 = np.einsum("eq,qij,eqcd->ecidj", wdet, pp, gw, optimize=True)
    t2 = np.einsum("eq,qj,eqid,eqc->ecidj", wdet, phi, grad, wq, optimize=True)
    mat = 0.5 * (t1 - t2).reshape(E, 12, 12)
    wgw = np.einsum("eqd,eqcd->eqc", wq, gw)
    r1 = np.einsum("eq,qi,eqc->eci", wdet, phi, wgw, optimize=True)
    r2 = np.einsum("eq,eqi,eqc->eci", wdet, adv, wq, optimize=True)
    rhs = 0.5 * (r1 - r2).reshape(E, 12)
    return mat, rhs
