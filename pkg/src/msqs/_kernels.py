"""Hot numerical kernels with a numba fast path and a pure-numpy fallback.

Every kernel exists twice:

* ``_<name>_nb``    — scalar-loop implementation compiled with numba.njit
* ``_<name>_np``    — vectorized numpy implementation

The public name (``df_sweep``, ``update_hz``, ...) is bound at import time to
one of the two.  Selection: numba is used when importable unless the
environment variable ``MSQS_PURE_NUMPY=1`` forces the fallback.  Both
implementations are kept operation-for-operation identical (same evaluation
order per grid point, no fastmath, no parallel reductions) so results agree
bitwise; tests assert that.

Sign/staggering conventions (shape (nx, ny) everywhere, H normalized by the
vacuum impedance so all fields carry V/nm):

    Hz[i,j] += c dt [ (Ex[i,j+1]-Ex[i,j])/(ky dy) - (Ey[i+1,j]-Ey[i,j])/(kx dx) ]
    Ex[i,j] += c dt   (Hz[i,j]-Hz[i,j-1])/(ky dy)
    Ey[i,j] -= c dt   (Hz[i,j]-Hz[i-1,j])/(kx dx)

with per-axis inverse stretching factors 1/kappa sampled at the node of the
differentiated coordinate.  Update ranges leave the outermost tangential E
untouched (PEC backing behind the absorbing layers); periodic seams are
patched by the caller.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via MSQS_PURE_NUMPY instead
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


USE_NUMBA = HAVE_NUMBA and os.environ.get("MSQS_PURE_NUMPY", "0") != "1"


def backend() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Yee curl updates
# ---------------------------------------------------------------------------

@njit(cache=True)
def _update_hz_nb(Hz, Ex, Ey, cdt, dx, dy, ikx_h, iky_h):
    nx, ny = Hz.shape
    for i in range(nx - 1):
        for j in range(ny - 1):
            Hz[i, j] += cdt * (iky_h[j] * (Ex[i, j + 1] - Ex[i, j]) / dy
                               - ikx_h[i] * (Ey[i + 1, j] - Ey[i, j]) / dx)


def _update_hz_np(Hz, Ex, Ey, cdt, dx, dy, ikx_h, iky_h):
    Hz[:-1, :-1] += cdt * (
        iky_h[None, :-1] * (Ex[:-1, 1:] - Ex[:-1, :-1]) / dy
        - ikx_h[:-1, None] * (Ey[1:, :-1] - Ey[:-1, :-1]) / dx
    )


@njit(cache=True)
def _update_ex_nb(Ex, Hz, cdt, dy, iky_e):
    nx, ny = Ex.shape
    for i in range(nx):
        for j in range(1, ny - 1):
            Ex[i, j] += cdt * iky_e[j] * (Hz[i, j] - Hz[i, j - 1]) / dy


def _update_ex_np(Ex, Hz, cdt, dy, iky_e):
    Ex[:, 1:-1] += cdt * iky_e[None, 1:-1] * (Hz[:, 1:-1] - Hz[:, :-2]) / dy


@njit(cache=True)
def _update_ey_nb(Ey, Hz, cdt, dx, ikx_e):
    nx, ny = Ey.shape
    for i in range(1, nx - 1):
        for j in range(ny - 1):
            Ey[i, j] -= cdt * ikx_e[i] * (Hz[i, j] - Hz[i - 1, j]) / dx


def _update_ey_np(Ey, Hz, cdt, dx, ikx_e):
    Ey[1:-1, :-1] -= cdt * ikx_e[1:-1, None] * (Hz[1:-1, :-1] - Hz[:-2, :-1]) / dx


# ---------------------------------------------------------------------------
# CPML recursive-convolution corrections (applied on boundary strips only)
# ---------------------------------------------------------------------------
# psi_new = b * psi + c * (spatial difference); field += / -= cdt * psi_new.
# The b, c vectors are indexed along the PML axis at the updated node's
# position; outside the strip they are (1, 0) and the kernels are never
# called there.
#
# ``tn`` is the valid transverse extent of the corrected field: the full
# array size when the transverse axis wraps periodically, one less when it
# ends in a wall (the final row/column of a cell-centred Yee quantity is
# then a phantom node that no main update writes, and correcting it alone
# would feed back on itself).

@njit(cache=True)
def _cpml_hz_x_nb(Hz, Ey, psi, b, c, cdt, dx, i0, i1, tn):
    for i in range(i0, i1):
        for j in range(tn):
            d = (Ey[i + 1, j] - Ey[i, j]) / dx
            p = b[i] * psi[i, j] + c[i] * d
            psi[i, j] = p
            Hz[i, j] -= cdt * p


def _cpml_hz_x_np(Hz, Ey, psi, b, c, cdt, dx, i0, i1, tn):
    d = (Ey[i0 + 1:i1 + 1, :tn] - Ey[i0:i1, :tn]) / dx
    p = b[i0:i1, None] * psi[i0:i1, :tn] + c[i0:i1, None] * d
    psi[i0:i1, :tn] = p
    Hz[i0:i1, :tn] -= cdt * p


@njit(cache=True)
def _cpml_hz_y_nb(Hz, Ex, psi, b, c, cdt, dy, j0, j1, tn):
    for i in range(tn):
        for j in range(j0, j1):
            d = (Ex[i, j + 1] - Ex[i, j]) / dy
            p = b[j] * psi[i, j] + c[j] * d
            psi[i, j] = p
            Hz[i, j] += cdt * p


def _cpml_hz_y_np(Hz, Ex, psi, b, c, cdt, dy, j0, j1, tn):
    d = (Ex[:tn, j0 + 1:j1 + 1] - Ex[:tn, j0:j1]) / dy
    p = b[None, j0:j1] * psi[:tn, j0:j1] + c[None, j0:j1] * d
    psi[:tn, j0:j1] = p
    Hz[:tn, j0:j1] += cdt * p


@njit(cache=True)
def _cpml_ex_y_nb(Ex, Hz, psi, b, c, cdt, dy, j0, j1, tn):
    for i in range(tn):
        for j in range(j0, j1):
            d = (Hz[i, j] - Hz[i, j - 1]) / dy
            p = b[j] * psi[i, j] + c[j] * d
            psi[i, j] = p
            Ex[i, j] += cdt * p


def _cpml_ex_y_np(Ex, Hz, psi, b, c, cdt, dy, j0, j1, tn):
    d = (Hz[:tn, j0:j1] - Hz[:tn, j0 - 1:j1 - 1]) / dy
    p = b[None, j0:j1] * psi[:tn, j0:j1] + c[None, j0:j1] * d
    psi[:tn, j0:j1] = p
    Ex[:tn, j0:j1] += cdt * p


@njit(cache=True)
def _cpml_ey_x_nb(Ey, Hz, psi, b, c, cdt, dx, i0, i1, tn):
    for i in range(i0, i1):
        for j in range(tn):
            d = (Hz[i, j] - Hz[i - 1, j]) / dx
            p = b[i] * psi[i, j] + c[i] * d
            psi[i, j] = p
            Ey[i, j] -= cdt * p


def _cpml_ey_x_np(Ey, Hz, psi, b, c, cdt, dx, i0, i1, tn):
    d = (Hz[i0:i1, :tn] - Hz[i0 - 1:i1 - 1, :tn]) / dx
    p = b[i0:i1, None] * psi[i0:i1, :tn] + c[i0:i1, None] * d
    psi[i0:i1, :tn] = p
    Ey[i0:i1, :tn] -= cdt * p


# ---------------------------------------------------------------------------
# Dispersive material update (Drude + two critical-point pairs)
# ---------------------------------------------------------------------------
# Called after the vacuum-form E update.  For weighted nodes the vacuum
# result is replaced by the implicit dispersive one:
#
#   eps_w (E+ - En) = curl - dt J+ - sum_p (P_p+ - P_p)
#   P_p+ = C1p P_p + C2p P_p- + w C3p En + w C4p (E+ - E-)
#   J+   = a_d J + w b_d En                    (half-step bilinear Drude)
#
# where ``curl`` is recovered from the vacuum update (curl = Evac+ - En)
# and w is the silicon volume fraction of the node's dual cell, scaling
# the susceptibility: eps_w = 1 + w (eps_inf - 1).  Interior nodes have
# w = 1; nodes on a material face have w = 1/2, which keeps the column
# integral of eps exact and places slab boundaries where stated.  The
# E+ <-> P+ coupling is eliminated in closed form per node.

@njit(cache=True)
def _ade_update_nb(E, w, En, Eprev, J, P1, P1o, P2, P2o,
                   i0, j0, dt, eps_inf, a_d, b_d,
                   c11, c21, c31, c41, c12, c22, c32, c42):
    bnx, bny = w.shape
    for ib in range(bnx):
        for jb in range(bny):
            wf = w[ib, jb]
            if wf == 0.0:
                continue
            i = i0 + ib
            j = j0 + jb
            en = En[ib, jb]
            curl = E[i, j] - en
            jn = a_d * J[ib, jb] + wf * b_d * en
            J[ib, jb] = jn
            p1 = P1[ib, jb]
            p1o = P1o[ib, jb]
            p2 = P2[ib, jb]
            p2o = P2o[ib, jb]
            ep = Eprev[ib, jb]
            eps_w = 1.0 + wf * (eps_inf - 1.0)
            rhs = (eps_w * en + curl - dt * jn
                   - (c11 * p1 + c21 * p1o + wf * (c31 * en - c41 * ep) - p1)
                   - (c12 * p2 + c22 * p2o + wf * (c32 * en - c42 * ep) - p2))
            enew = rhs / (eps_w + wf * (c41 + c42))
            P1o[ib, jb] = p1
            P1[ib, jb] = c11 * p1 + c21 * p1o + wf * (c31 * en + c41 * (enew - ep))
            P2o[ib, jb] = p2
            P2[ib, jb] = c12 * p2 + c22 * p2o + wf * (c32 * en + c42 * (enew - ep))
            Eprev[ib, jb] = en
            E[i, j] = enew


def _ade_update_np(E, w, En, Eprev, J, P1, P1o, P2, P2o,
                   i0, j0, dt, eps_inf, a_d, b_d,
                   c11, c21, c31, c41, c12, c22, c32, c42):
    m = w != 0.0
    bnx, bny = w.shape
    view = E[i0:i0 + bnx, j0:j0 + bny]
    wf = w[m]
    en = En[m]
    curl = view[m] - en
    jn = a_d * J[m] + wf * b_d * en
    J[m] = jn
    p1 = P1[m]
    p1o = P1o[m]
    p2 = P2[m]
    p2o = P2o[m]
    ep = Eprev[m]
    eps_w = 1.0 + wf * (eps_inf - 1.0)
    rhs = (eps_w * en + curl - dt * jn
           - (c11 * p1 + c21 * p1o + wf * (c31 * en - c41 * ep) - p1)
           - (c12 * p2 + c22 * p2o + wf * (c32 * en - c42 * ep) - p2))
    enew = rhs / (eps_w + wf * (c41 + c42))
    P1o[m] = p1
    P1[m] = c11 * p1 + c21 * p1o + wf * (c31 * en + c41 * (enew - ep))
    P2o[m] = p2
    P2[m] = c12 * p2 + c22 * p2o + wf * (c32 * en + c42 * (enew - ep))
    Eprev[m] = en
    view[m] = enew


# ---------------------------------------------------------------------------
# Dufort-Frankel relaxation sweep for the Poisson problem
# ---------------------------------------------------------------------------
# One pseudo-time step of   (1+s) ph+ = (1-s) ph- + 2a(E+W) + 2b(N+S) + 2 dtau S
# with s = 2a+2b; the caller passes ca=2a, cb=2b, co=1-s, inv=1/(1+s) and the
# pre-scaled source src2 = 2 dtau S.  Boundary stays untouched (Dirichlet 0).

@njit(cache=True)
def _df_sweep_nb(ph_new, ph_cur, ph_old, src2, ca, cb, co, inv):
    nx, ny = ph_cur.shape
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            ph_new[i, j] = (ca * (ph_cur[i + 1, j] + ph_cur[i - 1, j])
                            + cb * (ph_cur[i, j + 1] + ph_cur[i, j - 1])
                            + co * ph_old[i, j] + src2[i, j]) * inv


def _df_sweep_np(ph_new, ph_cur, ph_old, src2, ca, cb, co, inv):
    ph_new[1:-1, 1:-1] = (
        ca * (ph_cur[2:, 1:-1] + ph_cur[:-2, 1:-1])
        + cb * (ph_cur[1:-1, 2:] + ph_cur[1:-1, :-2])
        + co * ph_old[1:-1, 1:-1] + src2[1:-1, 1:-1]
    ) * inv


@njit(cache=True)
def _poisson_residual_nb(ph, src, inv_hx2, inv_hy2):
    nx, ny = ph.shape
    worst = 0.0
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            lap = ((ph[i + 1, j] - 2.0 * ph[i, j] + ph[i - 1, j]) * inv_hx2
                   + (ph[i, j + 1] - 2.0 * ph[i, j] + ph[i, j - 1]) * inv_hy2)
            r = lap + src[i, j]
            if r < 0.0:
                r = -r
            if r > worst:
                worst = r
    return worst


def _poisson_residual_np(ph, src, inv_hx2, inv_hy2):
    lap = ((ph[2:, 1:-1] - 2.0 * ph[1:-1, 1:-1] + ph[:-2, 1:-1]) * inv_hx2
           + (ph[1:-1, 2:] - 2.0 * ph[1:-1, 1:-1] + ph[1:-1, :-2]) * inv_hy2)
    r = lap + src[1:-1, 1:-1]
    return float(np.max(np.abs(r))) if r.size else 0.0


# ---------------------------------------------------------------------------
# Bilinear scatter of wave-packet charge/current onto a staggered field grid
# ---------------------------------------------------------------------------
# Source samples live at u = fx0 + i*rx, v = fy0 + j*ry in target index
# units; each sample is split over the four surrounding target nodes.
# Samples falling outside the target are dropped.

@njit(cache=True)
def _deposit_bilinear_nb(target, values, fx0, rx, fy0, ry):
    tnx, tny = target.shape
    nx, ny = values.shape
    for i in range(nx):
        u = fx0 + i * rx
        iu = int(np.floor(u))
        wu = u - iu
        if iu < 0 or iu + 1 >= tnx:
            continue
        for j in range(ny):
            v = fy0 + j * ry
            jv = int(np.floor(v))
            wv = v - jv
            if jv < 0 or jv + 1 >= tny:
                continue
            val = values[i, j]
            target[iu, jv] += val * (1.0 - wu) * (1.0 - wv)
            target[iu + 1, jv] += val * wu * (1.0 - wv)
            target[iu, jv + 1] += val * (1.0 - wu) * wv
            target[iu + 1, jv + 1] += val * wu * wv


def _deposit_bilinear_np(target, values, fx0, rx, fy0, ry):
    tnx, tny = target.shape
    nx, ny = values.shape
    u = fx0 + np.arange(nx) * rx
    v = fy0 + np.arange(ny) * ry
    iu = np.floor(u).astype(np.int64)
    jv = np.floor(v).astype(np.int64)
    wu = u - iu
    wv = v - jv
    okx = (iu >= 0) & (iu + 1 < tnx)
    oky = (jv >= 0) & (jv + 1 < tny)
    if not okx.any() or not oky.any():
        return
    ii = iu[okx][:, None]
    jj = jv[oky][None, :]
    wx = wu[okx][:, None]
    wy = wv[oky][None, :]
    val = values[np.ix_(okx, oky)]
    np.add.at(target, (ii, jj), val * (1.0 - wx) * (1.0 - wy))
    np.add.at(target, (ii + 1, jj), val * wx * (1.0 - wy))
    np.add.at(target, (ii, jj + 1), val * (1.0 - wx) * wy)
    np.add.at(target, (ii + 1, jj + 1), val * wx * wy)


# ---------------------------------------------------------------------------
# backend binding
# ---------------------------------------------------------------------------

if USE_NUMBA:
    update_hz = _update_hz_nb
    update_ex = _update_ex_nb
    update_ey = _update_ey_nb
    cpml_hz_x = _cpml_hz_x_nb
    cpml_hz_y = _cpml_hz_y_nb
    cpml_ex_y = _cpml_ex_y_nb
    cpml_ey_x = _cpml_ey_x_nb
    ade_update = _ade_update_nb
    df_sweep = _df_sweep_nb
    poisson_residual = _poisson_residual_nb
    deposit_bilinear = _deposit_bilinear_nb
else:
    update_hz = _update_hz_np
    update_ex = _update_ex_np
    update_ey = _update_ey_np
    cpml_hz_x = _cpml_hz_x_np
    cpml_hz_y = _cpml_hz_y_np
    cpml_ex_y = _cpml_ex_y_np
    cpml_ey_x = _cpml_ey_x_np
    ade_update = _ade_update_np
    df_sweep = _df_sweep_np
    poisson_residual = _poisson_residual_np
    deposit_bilinear = _deposit_bilinear_np

KERNEL_PAIRS = {
    "update_hz": (_update_hz_nb, _update_hz_np),
    "update_ex": (_update_ex_nb, _update_ex_np),
    "update_ey": (_update_ey_nb, _update_ey_np),
    "cpml_hz_x": (_cpml_hz_x_nb, _cpml_hz_x_np),
    "cpml_hz_y": (_cpml_hz_y_nb, _cpml_hz_y_np),
    "cpml_ex_y": (_cpml_ex_y_nb, _cpml_ex_y_np),
    "cpml_ey_x": (_cpml_ey_x_nb, _cpml_ey_x_np),
    "ade_update": (_ade_update_nb, _ade_update_np),
    "df_sweep": (_df_sweep_nb, _df_sweep_np),
    "poisson_residual": (_poisson_residual_nb, _poisson_residual_np),
    "deposit_bilinear": (_deposit_bilinear_nb, _deposit_bilinear_np),
}
