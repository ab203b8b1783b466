"""Material-point model: plane-strain elasticity, concentration-induced
swelling strain, and rate-independent J2 plasticity with linear isotropic or
kinematic hardening.

Symmetric 2-D tensors are stored as 4-vectors in the component order
(xx, yy, zz, xy) where xy is the *tensor* shear component. The out-of-plane
normal component zz is carried explicitly so hydrostatic and von Mises
measures are exact in plane strain. All operations are vectorized: state and
increment arrays may carry any leading batch shape, which is how the element
assembly evaluates every quadrature point in one call.

Plastic steps enforce the discrete consistency condition by an implicit
radial return, which is exact (no local iteration) for linear hardening;
the kinematic branch is the implicit time discretization of the back-stress
rate equations with beta_dot = h * eps_p_dot.
"""
from __future__ import annotations

from dataclasses import dataclass, replace, field

import numpy as np

GAS_CONSTANT = 8.314  # J/(mol K)

YIELD_TOL_FACTOR = 1e-6     # |f| <= tol_f = 1e-6 * sigma_y0 after any update
LOCAL_ITER_CAP = 50

_NORMALS = np.array([1.0, 1.0, 1.0, 0.0])


class ConstitutiveError(RuntimeError):
    """Raised when a stress update cannot satisfy its contracts.

    ``flat_index`` locates the worst offending point within the batch so
    callers can name the element/quadrature point."""

    def __init__(self, message, flat_index=None):
        super().__init__(message)
        self.flat_index = flat_index


@dataclass
class MaterialParams:
    """Material constants. Stress quantities in Pa, D in m^2/s, Omega in
    m^3/mol, T in K, concentrations in mol/m^3."""
    E: float
    nu: float
    D: float
    Omega: float
    T: float
    sigma_y0: float = 0.0
    hardening_kind: str = "none"      # "isotropic" | "kinematic" | "none"
    H: float = 0.0                    # isotropic hardening modulus d sigma_y / d eps_p_eq
    h: float = 0.0                    # kinematic hardening constant (back-stress rate)
    c0: float = 0.0
    c_max: float = 1.0
    R: float = GAS_CONSTANT

    def __post_init__(self):
        if self.E <= 0:
            raise ValueError("MaterialParams: E must be positive")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError("MaterialParams: nu must lie in [0, 0.5)")
        if self.D <= 0:
            raise ValueError("MaterialParams: D must be positive")
        if self.T <= 0:
            raise ValueError("MaterialParams: T must be positive")
        if self.Omega < 0:
            raise ValueError("MaterialParams: Omega must be non-negative")
        if self.c_max <= 0:
            raise ValueError("MaterialParams: c_max must be positive")
        if self.hardening_kind not in ("isotropic", "kinematic", "none"):
            raise ValueError(f"MaterialParams: unknown hardening_kind {self.hardening_kind!r}")
        if self.hardening_kind != "none":
            if self.sigma_y0 <= 0:
                raise ValueError("MaterialParams: sigma_y0 must be positive with plasticity enabled")
            if self.H < 0:
                raise ValueError("MaterialParams: negative isotropic hardening H is not supported")
            if self.h < 0:
                raise ValueError("MaterialParams: negative kinematic hardening h is not supported")

    @property
    def lam(self):
        return self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))

    @property
    def mu(self):
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def tol_f(self):
        return YIELD_TOL_FACTOR * (self.sigma_y0 if self.sigma_y0 > 0 else self.E)

    def as_elastic(self):
        """Copy with plasticity switched off (scenario-level override)."""
        return replace(self, hardening_kind="none")


@dataclass
class SymTensor2D:
    """Named view of a symmetric plane-strain tensor (xy = tensor shear)."""
    xx: float = 0.0
    yy: float = 0.0
    zz: float = 0.0
    xy: float = 0.0

    def to_array(self):
        return np.array([self.xx, self.yy, self.zz, self.xy])

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=float)
        return cls(xx=float(a[0]), yy=float(a[1]), zz=float(a[2]), xy=float(a[3]))


def trace(t):
    return t[..., 0] + t[..., 1] + t[..., 2]


def deviator(t):
    return t - (trace(t) / 3.0)[..., None] * _NORMALS


def ddot(a, b):
    """Full double contraction; the single stored xy component counts twice."""
    return (a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
            + a[..., 2] * b[..., 2] + 2.0 * a[..., 3] * b[..., 3])


def hydrostatic(sigma):
    """sigma_h = (sigma_xx + sigma_yy + sigma_zz) / 3."""
    return trace(np.asarray(sigma, dtype=float)) / 3.0


def von_mises(sigma):
    """sigma_e = sqrt(3/2 S:S) with the full plane-strain deviator."""
    s = deviator(np.asarray(sigma, dtype=float))
    return np.sqrt(np.maximum(1.5 * ddot(s, s), 0.0))


def elastic_stiffness(params):
    """Plane-strain isotropic stiffness on the (xx, yy, zz, xy) tensor basis.

    Maps tensor strain components to stress: lam * tr(eps) I + 2 mu eps,
    so the shear entry is 2 mu (input is the tensor component, not gamma).
    """
    lam, mu = params.lam, params.mu
    C = np.zeros((4, 4))
    C[:3, :3] = lam
    C[0, 0] = C[1, 1] = C[2, 2] = lam + 2.0 * mu
    C[3, 3] = 2.0 * mu
    return C


def elastic_stiffness_eng(params):
    """Stiffness on the engineering basis (eps_xx, eps_yy, eps_zz, gamma_xy)."""
    C = elastic_stiffness(params)
    C[3, 3] = params.mu
    return C


def chemical_strain(c, params):
    """Stress-free swelling strain (c - c0) * Omega / 3 on each normal axis."""
    dc = np.asarray(c, dtype=float) - params.c0
    return dc[..., None] * (params.Omega / 3.0) * _NORMALS


@dataclass
class MaterialState:
    """Per-point history: stress, plastic strain, back stress, and the
    equivalent plastic strain. Arrays share a common batch shape."""
    sigma: np.ndarray
    eps_p: np.ndarray
    back_stress: np.ndarray
    eps_p_eq: np.ndarray

    @classmethod
    def zeros(cls, batch_shape=()):
        shape = tuple(batch_shape) if not isinstance(batch_shape, int) else (batch_shape,)
        return cls(
            sigma=np.zeros(shape + (4,)),
            eps_p=np.zeros(shape + (4,)),
            back_stress=np.zeros(shape + (4,)),
            eps_p_eq=np.zeros(shape),
        )

    def copy(self):
        return MaterialState(self.sigma.copy(), self.eps_p.copy(),
                             self.back_stress.copy(), self.eps_p_eq.copy())

    @property
    def batch_shape(self):
        return self.eps_p_eq.shape


def yield_function(state, params):
    """f = sigma_e(S - beta) - sigma_y, in stress units for both hardening
    kinds; -inf for an elastic material."""
    if params.hardening_kind == "none":
        return np.full(state.batch_shape, -np.inf)
    xi = deviator(state.sigma) - state.back_stress
    sig_e = np.sqrt(np.maximum(1.5 * ddot(xi, xi), 0.0))
    if params.hardening_kind == "isotropic":
        return sig_e - (params.sigma_y0 + params.H * state.eps_p_eq)
    return sig_e - params.sigma_y0


def update_stress(state_old, d_eps, d_c, params, dt=0.0, return_tangent=False):
    """Advance the material state by strain increment ``d_eps`` (tensor
    components) and concentration increment ``d_c``.

    Elastic predictor / radial-return corrector. ``dt`` is accepted for
    interface symmetry with the transient driver; the return map itself is
    rate independent. With ``return_tangent`` the consistent tangent on the
    engineering basis (gamma shear) is returned alongside the new state.
    """
    d_eps = np.asarray(d_eps, dtype=float)
    d_c = np.asarray(d_c, dtype=float)
    lam, mu = params.lam, params.mu

    mech = d_eps - d_c[..., None] * (params.Omega / 3.0) * _NORMALS
    sigma_tr = (state_old.sigma
                + lam * trace(mech)[..., None] * _NORMALS
                + 2.0 * mu * mech)
    if not np.all(np.isfinite(sigma_tr)):
        bad = int(np.flatnonzero(~np.isfinite(sigma_tr).reshape(-1, 4).all(axis=1))[0])
        raise ConstitutiveError("trial stress is not finite", flat_index=bad)

    if params.hardening_kind == "none":
        new = MaterialState(sigma_tr, state_old.eps_p.copy(),
                            state_old.back_stress.copy(), state_old.eps_p_eq.copy())
        if return_tangent:
            C = elastic_stiffness_eng(params)
            tangent = np.broadcast_to(C, new.batch_shape + (4, 4)).copy()
            return new, tangent
        return new

    kinematic = params.hardening_kind == "kinematic"
    H_eff = 1.5 * params.h if kinematic else params.H

    xi_tr = deviator(sigma_tr) - state_old.back_stress
    sig_e_tr = np.sqrt(np.maximum(1.5 * ddot(xi_tr, xi_tr), 0.0))
    sigma_y = params.sigma_y0 + (0.0 if kinematic else params.H * state_old.eps_p_eq)
    f_tr = sig_e_tr - sigma_y

    plastic = f_tr > 0.0
    d_lam = np.where(plastic, f_tr / (3.0 * mu + H_eff), 0.0)
    safe_e = np.where(sig_e_tr > 0.0, sig_e_tr, 1.0)
    n_dir = 1.5 * xi_tr / safe_e[..., None]

    d_eps_p = d_lam[..., None] * n_dir
    sigma_new = sigma_tr - 2.0 * mu * d_eps_p
    beta_new = state_old.back_stress + (params.h * d_eps_p if kinematic else 0.0)
    new = MaterialState(
        sigma=sigma_new,
        eps_p=state_old.eps_p + d_eps_p,
        back_stress=beta_new if kinematic else state_old.back_stress.copy(),
        eps_p_eq=state_old.eps_p_eq + d_lam,
    )

    f_new = yield_function(new, params)
    if np.any(f_new > params.tol_f):
        raise ConstitutiveError(
            f"radial return left f = {float(np.max(f_new)):.3e} above tol {params.tol_f:.3e}",
            flat_index=int(np.argmax(f_new)))

    if not return_tangent:
        return new

    C = elastic_stiffness_eng(params)
    tangent = np.broadcast_to(C, new.batch_shape + (4, 4)).copy()
    if np.any(plastic):
        # dev projector from engineering strain to tensor-component deviator
        P = np.array([[2, -1, -1, 0], [-1, 2, -1, 0], [-1, -1, 2, 0], [0, 0, 0, 1.5]]) / 3.0
        b = 6.0 * mu**2 * d_lam / safe_e
        a = 4.0 * mu**2 / (3.0 * mu + H_eff) - 4.0 * mu**2 * d_lam / safe_e
        nn = n_dir[..., :, None] * n_dir[..., None, :]
        corr = b[..., None, None] * P + a[..., None, None] * nn
        tangent = tangent - np.where(plastic[..., None, None], corr, 0.0)
    return new, tangent


def drive_material_point_uniaxial(params, eps_axial_history, lateral_tol=1e-9,
                                  max_iter=LOCAL_ITER_CAP):
    """Stress response of a single material point under a prescribed axial
    strain history, holding the lateral stresses at zero.

    The lateral strains (yy, zz) are found per step by a local Newton
    iteration on the consistent tangent; the returned axial stresses satisfy
    |sigma_yy|, |sigma_zz| <= lateral_tol * sigma_ref at every step.
    """
    eps_hist = np.asarray(eps_axial_history, dtype=float)
    if eps_hist.size == 0 or eps_hist[0] != 0.0:
        raise ValueError("drive_material_point_uniaxial: strain history must start at 0")
    sigma_ref = params.sigma_y0 if params.sigma_y0 > 0 else 1e-3 * params.E

    state = MaterialState.zeros(())
    eps_prev = np.zeros(4)
    stresses = np.empty(eps_hist.size)

    for i, eps_ax in enumerate(eps_hist):
        lat = eps_prev[1:3].copy()
        for it in range(max_iter):
            d_eps = np.array([eps_ax, lat[0], lat[1], 0.0]) - eps_prev
            trial, tangent = update_stress(state, d_eps, 0.0, params, return_tangent=True)
            res = trial.sigma[1:3]
            if np.max(np.abs(res)) <= lateral_tol * sigma_ref:
                break
            J = tangent[1:3, 1:3]
            lat -= np.linalg.solve(J, res)
        else:
            raise ConstitutiveError(
                f"uniaxial driver: lateral iteration stalled at step {i} "
                f"(|sigma_lat| = {np.max(np.abs(res)):.3e})")
        state = trial
        eps_prev = np.array([eps_ax, lat[0], lat[1], 0.0])
        stresses[i] = state.sigma[0]
    return stresses
