"""Integral boundary-layer march over a panel-method edge-velocity distribution.

Classic drag-estimation chain: Thwaites' method for the laminar segment,
Michel's criterion for transition, Head's entrainment method for the turbulent
segment, and the Squire-Young formula for the drag contribution of each
surface. Laminar separation (lambda < -0.09) forces transition; turbulent
separation (H > 2.4) ahead of 95% chord marks the march as not converged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LAMBDA_SEP = -0.09
H_TURB_SEP = 2.4
H_TURB_INIT = 1.4
SEP_CHORD_LIMIT = 0.95
UE_FLOOR = 1e-6


@dataclass
class SurfaceMarch:
    """Outcome of one surface's boundary-layer march."""

    theta: float          # momentum thickness at the trailing edge
    shape_factor: float   # H at the trailing edge
    ue_te: float          # edge velocity at the trailing edge
    cd: float             # Squire-Young drag contribution
    transition_s: float   # arc length of laminar-turbulent transition
    separated: bool       # turbulent separation ahead of the chord limit


def thwaites_correlations(lam: float) -> tuple[float, float]:
    """Shear correlation l(lambda) and shape factor H(lambda), Cebeci-Bradshaw fits."""
    lam = min(max(lam, -0.1), 0.1)
    if lam >= 0.0:
        l = 0.22 + 1.57 * lam - 1.8 * lam * lam
        h = 2.61 - 3.75 * lam + 5.24 * lam * lam
    else:
        l = 0.22 + 1.402 * lam + 0.018 * lam / (lam + 0.107)
        h = 2.088 + 0.0731 / (lam + 0.14)
    return l, h


def michel_retheta_crit(re_x: float) -> float:
    """Transition threshold on Re_theta as a function of Re_x (Michel's line)."""
    re_x = max(re_x, 1.0)
    return 1.174 * (1.0 + 22400.0 / re_x) * re_x**0.46


def head_h1(h: float) -> float:
    """Head's H1(H) correlation."""
    h = max(h, 1.101)
    if h <= 1.6:
        return 3.3 + 0.8234 * (h - 1.1) ** -1.287
    return 3.3 + 1.5501 * (h - 0.6778) ** -3.064


def head_h(h1: float) -> float:
    """Inverse correlation H(H1)."""
    h1 = max(h1, 3.32)
    if h1 >= 5.3:
        return 1.1 + 0.86 * (h1 - 3.3) ** -0.777
    return 0.6778 + 1.1536 * (h1 - 3.3) ** -0.326


def entrainment(h1: float) -> float:
    return 0.0306 * max(h1 - 3.0, 1e-3) ** -0.6169


def ludwieg_tillmann_cf(h: float, re_theta: float) -> float:
    return 0.246 * 10.0 ** (-0.678 * h) * max(re_theta, 1.0) ** -0.268


def squire_young_cd(theta: float, ue: float, h: float) -> float:
    """Per-surface profile drag from trailing-edge BL state (V_inf = 1)."""
    return 2.0 * theta * ue ** (0.5 * (h + 5.0))


def march_surface(s: np.ndarray, ue: np.ndarray, x: np.ndarray, nu: float) -> SurfaceMarch:
    """March the integral boundary layer along one surface.

    ``s`` is arc length from the stagnation point (monotone increasing),
    ``ue`` the edge-velocity magnitude at those stations, ``x`` the chordwise
    position used for the separation cutoff, ``nu`` the kinematic viscosity
    (1/Re_c in chord units).
    """
    s = np.asarray(s, dtype=float)
    ue = np.maximum(np.asarray(ue, dtype=float), UE_FLOOR)
    n = len(s)
    due_ds = np.gradient(ue, s)

    # Thwaites: theta^2 = 0.45 nu ue^-6 int ue^5 ds, with the stagnation-point limit
    integrand = ue**5
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(s))])
    theta_sq = 0.45 * nu * integral / ue**6
    if due_ds[0] > 0.0:
        theta_sq += 0.075 * nu / due_ds[0] * (ue[0] / ue) ** 6

    transition_s = s[-1]
    i_tr = n - 1
    theta_tr = None
    for i in range(n):
        theta = float(np.sqrt(max(theta_sq[i], 0.0)))
        lam = theta * theta * due_ds[i] / nu
        re_theta = ue[i] * theta / nu
        re_x = ue[i] * s[i] / nu
        if i > 0 and (re_theta > michel_retheta_crit(re_x) or lam < LAMBDA_SEP):
            i_tr = i
            transition_s = float(s[i])
            theta_tr = theta
            break

    if theta_tr is None:
        # fully laminar to the trailing edge
        theta_te = float(np.sqrt(max(theta_sq[-1], 0.0)))
        lam_te = theta_te * theta_te * due_ds[-1] / nu
        _, h_te = thwaites_correlations(lam_te)
        return SurfaceMarch(theta=theta_te, shape_factor=h_te, ue_te=float(ue[-1]),
                            cd=squire_young_cd(theta_te, float(ue[-1]), h_te),
                            transition_s=transition_s, separated=False)

    # turbulent segment: Head's entrainment method, RK2 on the station grid
    theta = max(theta_tr, 1e-9)
    h = H_TURB_INIT
    separated = False
    n_sub = 4

    def rates(theta_v, h_v, ue_v, due_v):
        theta_v = max(theta_v, 1e-12)
        re_theta = ue_v * theta_v / nu
        cf = ludwieg_tillmann_cf(h_v, re_theta)
        h1 = head_h1(h_v)
        dtheta = 0.5 * cf - (h_v + 2.0) * theta_v / ue_v * due_v
        # d(ue theta H1)/ds = ue F  =>  dH1/ds from the product rule
        dh1 = (entrainment(h1) * ue_v - h1 * (dtheta * ue_v + theta_v * due_v)) / (ue_v * theta_v)
        return dtheta, dh1

    h1 = head_h1(h)
    for i in range(i_tr, n - 1):
        ds = (s[i + 1] - s[i]) / n_sub
        for j in range(n_sub):
            frac = (j + 0.5) / n_sub
            ue_v = ue[i] + frac * (ue[i + 1] - ue[i])
            due_v = due_ds[i] + frac * (due_ds[i + 1] - due_ds[i])
            k1t, k1h = rates(theta, h, ue_v, due_v)
            k2t, k2h = rates(theta + 0.5 * ds * k1t, head_h(h1 + 0.5 * ds * k1h), ue_v, due_v)
            theta = max(theta + ds * k2t, 1e-12)
            h1 = max(h1 + ds * k2h, 3.32)
            h = head_h(h1)
        if h > H_TURB_SEP:
            h = H_TURB_SEP
            h1 = head_h1(h)
            if x[i + 1] < SEP_CHORD_LIMIT:
                separated = True

    ue_te = float(ue[-1])
    return SurfaceMarch(theta=float(theta), shape_factor=float(h), ue_te=ue_te,
                        cd=squire_young_cd(float(theta), ue_te, float(h)),
                        transition_s=transition_s, separated=separated)


def split_surfaces(x_mid: np.ndarray, y_mid: np.ndarray, vt: np.ndarray):
    """Split panel midpoints at the stagnation point into two marchable surfaces.

    With clockwise ordering the tangential velocity is negative on the lower
    surface and positive on the upper; the stagnation point sits at the sign
    change nearest the leading edge. Returns (s, ue, x) per surface, each
    ordered stagnation point -> trailing edge.
    """
    vt = np.asarray(vt, dtype=float)
    n = len(vt)
    neg = np.nonzero(vt < 0.0)[0]
    i_stag = int(neg[-1]) if len(neg) else 0
    i_stag = min(max(i_stag, 0), n - 2)

    mids = np.column_stack([x_mid, y_mid])

    def path(indices):
        pts = mids[indices]
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        return s, np.abs(vt[indices]), pts[:, 0]

    lower = path(np.arange(i_stag, -1, -1))
    upper = path(np.arange(i_stag + 1, n))
    return lower, upper
