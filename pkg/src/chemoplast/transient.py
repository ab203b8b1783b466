"""Backward-Euler time stepping for the coupled system.

Each step runs an outer stagger loop: a monolithic Newton solve of the
(u, c) system with the material update embedded in the residual, followed by
a commit of the quadrature-point states, repeated until the plastic internal
variables stop moving between passes. Because the Newton residual already
enforces the discrete consistency condition, the loop settles in one pass
for elastic response and two passes under plastic flow; single-pass
operator-split behavior is recoverable with stagger_max_iter = 1.

Step failures (Newton divergence, iteration cap, constitutive errors)
trigger time-step halving, at most four times per step, before the run
aborts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import sparse_linalg
from .assembly import (AssemblyError, DofMap, FieldState, assemble_system,
                       interpolate_nodal, locate_points, precompute)
from .constitutive import hydrostatic, von_mises


class StepFailure(RuntimeError):
    """A single time step could not be completed."""


class RunAborted(RuntimeError):
    """Time stepping failed even after exhausting the dt halvings."""


@dataclass
class SolverConfig:
    dt: float
    t_end: float
    mode: str = "two-way"              # "one-way" | "two-way"
    plasticity: bool = True
    newton_abs_tol: float = 1e-10
    newton_rel_tol: float = 1e-8
    newton_max_iter: int = 40
    stagger_tol: float = 1e-6
    stagger_max_iter: int = 10
    max_halvings: int = 4

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("SolverConfig: dt and t_end must be positive")
        for name in ("newton_abs_tol", "newton_rel_tol", "stagger_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"SolverConfig: {name} must be positive")
        if self.newton_max_iter < 1 or self.stagger_max_iter < 1:
            raise ValueError("SolverConfig: iteration caps must be >= 1")
        if self.mode not in ("one-way", "two-way"):
            raise ValueError(f"SolverConfig: unknown mode {self.mode!r}")


@dataclass
class StepInfo:
    newton_iters: int
    stagger_passes: int
    residual_norm: float


@dataclass
class TimeHistory:
    """Per-step probe samples and global diagnostics of one run."""
    times: list = field(default_factory=list)
    records: list = field(default_factory=list)    # dicts of step diagnostics
    samples: list = field(default_factory=list)    # dicts probe -> sampled values
    events: list = field(default_factory=list)     # dt refinements etc.

    def append(self, t, record, sample):
        if self.times and t <= self.times[-1]:
            raise ValueError("TimeHistory: times must be strictly increasing")
        self.times.append(t)
        self.records.append(record)
        self.samples.append(sample)

    def probe_series(self, name, key):
        return np.array([s[name][key] for s in self.samples])


def _plastic_change(states_a, states_b, params):
    """Stress-unit norm of the plastic internal-variable change."""
    two_mu = 2.0 * params.mu
    d_eps = np.max(np.abs(states_a.eps_p - states_b.eps_p)) if states_a.eps_p.size else 0.0
    d_beta = np.max(np.abs(states_a.back_stress - states_b.back_stress)) if states_a.back_stress.size else 0.0
    d_eq = np.max(np.abs(states_a.eps_p_eq - states_b.eps_p_eq)) if states_a.eps_p_eq.size else 0.0
    return max(two_mu * d_eps, d_beta, max(params.H, params.h, two_mu) * d_eq)


def _newton_solve(w, fields_n, t_new, dt, scenario, config, ed, dm, refs=None):
    """Solve the coupled residual to tolerance from initial iterate ``w``.

    Convergence, backtracking, and floors are judged per physics block
    (mechanics rows vs concentration rows): the blocks carry different
    units, and the stiff block reaches its float64 noise floor long before
    the other is done, so a single mixed norm can neither detect
    convergence nor tell a necessary excursion from divergence. A block
    that sits at its own roundoff floor is free to move; a loaded block is
    damped by backtracking until its residual decreases.

    ``refs`` carries the largest starting block residuals seen so far in
    the run; the relative tolerance is measured against that force scale,
    so quiescent hold phases are not asked to out-resolve the yield-surface
    jitter of points flipping between the elastic and plastic branch.

    Returns (w, new_states, sigma_h_nodal, iters, norm). The Dirichlet
    dofs of ``w`` must already carry their prescribed values.
    """
    mesh, params, bcs = scenario.mesh, scenario.params, scenario.bcs
    constraints = bcs.dirichlet_constraints(mesh, dm, t_new)
    fixed_dofs = np.array([d for d, _ in constraints], dtype=np.int64)
    zero_constraints = [(d, 0.0) for d in fixed_dofs]
    refs = refs if refs is not None else {"u": 0.0, "c": 0.0}

    def block_norms(vec):
        v = vec.copy()
        if fixed_dofs.size:
            v[fixed_dofs] = 0.0
        m = v.reshape(-1, 3)
        return (float(np.linalg.norm(m[:, :2])), float(np.linalg.norm(m[:, 2])))

    def block_floors(jac, w_vec):
        # FP-error bound of evaluating each block's residual at w: below
        # this level the dimensional norm carries no information
        jw = np.abs(jac.scipy_csr()) @ np.abs(w_vec)
        fu, fc = block_norms(jw)
        eps20 = 20.0 * np.finfo(float).eps
        return eps20 * fu, eps20 * fc

    def assemble_at(w_vec, want_jacobian=True):
        u, c = dm.split(w_vec)
        fields_it = FieldState(u=u, c=c, states=fields_n.states,
                               sigma_h_nodal=fields_n.sigma_h_nodal)
        return assemble_system(mesh, dm, fields_it, fields_n, params, dt, config.mode,
                               elem_data=ed, bcs=bcs, t=t_new,
                               want_jacobian=want_jacobian, plasticity=config.plasticity)

    try:
        res, jac, new_states, sigma_h = assemble_at(w)
    except AssemblyError as err:
        raise StepFailure(f"assembly failed at t={t_new:g}: {err}") from err

    tol_u = tol_c = None
    norms = []
    grow = 0
    n_solves = 0
    stagnated = False
    while True:
        nu, nc = block_norms(res)
        norm = float(np.hypot(nu, nc))
        if tol_u is None:
            refs["u"] = max(refs["u"], nu)
            refs["c"] = max(refs["c"], nc)
            # an absolute tolerance looser than a block's initial residual
            # cannot judge scales it has never seen (a weak boundary flux
            # must still be solved for), so cap it at half the start value
            tol_u = max(config.newton_rel_tol * refs["u"],
                        min(config.newton_abs_tol, 0.5 * nu))
            tol_c = max(config.newton_rel_tol * refs["c"],
                        min(config.newton_abs_tol, 0.5 * nc))
        floor_u, floor_c = block_floors(jac, w)
        ok_u = nu <= max(tol_u, 2.0 * floor_u)
        ok_c = nc <= max(tol_c, 2.0 * floor_c)
        # stalled: no meaningful progress over several corrections while the
        # mechanics residual sits orders below the run's force scale; the
        # iteration is chasing the yield-surface branch jitter
        stalled = (len(norms) >= 5 and norm > 0.99 * norms[-5]
                   and nu <= 1e-3 * max(refs["u"], 1e-300) and nc <= max(tol_c, 2.0 * floor_c))
        if (ok_u and ok_c) or stagnated or stalled:
            # stagnated: the increment reached the float64 floor of the
            # solution itself; no further reduction is possible here
            return w, new_states, sigma_h, n_solves, norm
        if norms:
            meaningful = norm > 10.0 * (floor_u + floor_c)
            grow = grow + 1 if (meaningful and norm > norms[-1]) else 0
            if grow >= 3:
                raise StepFailure(f"Newton diverging at t={t_new:g}: residual grew over "
                                  f"3 consecutive iterations (last {norm:.3e})")
        norms.append(norm)
        if n_solves >= config.newton_max_iter:
            raise StepFailure(f"Newton did not converge within {config.newton_max_iter} "
                              f"iterations at t={t_new:g} (residual {norm:.3e}, "
                              f"tols {tol_u:.3e}/{tol_c:.3e})")
        A, b = sparse_linalg.apply_dirichlet(jac, -res, zero_constraints)
        try:
            dw = sparse_linalg.solve(A, b)
        except sparse_linalg.SingularMatrixError as err:
            raise StepFailure(f"linear solve failed at t={t_new:g}: {err}") from err
        n_solves += 1

        # Full Newton step; robustness against genuinely diverging steps is
        # the divergence detector above plus the caller's dt halving, which
        # also shrinks the boundary-condition increment that causes them.
        w = w + dw
        stagnated = np.linalg.norm(dw) <= 1e-13 * (np.linalg.norm(w) + 1e-300)
        try:
            res, jac, new_states, sigma_h = assemble_at(w)
        except AssemblyError as err:
            raise StepFailure(f"assembly failed at t={t_new:g}: {err}") from err


def step(fields_n, t_n, dt, scenario, config, elem_data=None, dofmap=None,
         newton_refs=None):
    """Advance one backward-Euler step from t_n to t_n + dt.

    Returns (fields at t_n + dt, StepInfo). Raises StepFailure when the
    Newton or stagger iteration cannot be completed.
    """
    ed = elem_data if elem_data is not None else precompute(scenario.mesh)
    dm = dofmap or DofMap(scenario.mesh.n_nodes)
    t_new = t_n + dt

    w = dm.join(fields_n.u, fields_n.c)
    for dof, val in scenario.bcs.dirichlet_constraints(scenario.mesh, dm, t_new):
        w[dof] = val

    prev_states = None
    total_iters = 0
    for stagger_pass in range(1, config.stagger_max_iter + 1):
        w, new_states, sigma_h, iters, norm = _newton_solve(
            w, fields_n, t_new, dt, scenario, config, ed, dm, refs=newton_refs)
        total_iters += iters
        if not config.plasticity or scenario.params.hardening_kind == "none":
            break
        baseline = prev_states if prev_states is not None else fields_n.states
        change = _plastic_change(new_states, baseline, scenario.params)
        prev_states = new_states
        if change <= config.stagger_tol * scenario.params.sigma_y0:
            break
    else:
        raise StepFailure(f"stagger loop did not settle within {config.stagger_max_iter} "
                          f"passes at t={t_new:g} (last change {change:.3e})")

    u, c = dm.split(w)
    fields_new = FieldState(u=u, c=c, states=new_states, sigma_h_nodal=sigma_h)
    return fields_new, StepInfo(newton_iters=total_iters, stagger_passes=stagger_pass,
                                residual_norm=norm)


def _lumped_masses(mesh):
    from .mesh import signed_areas
    areas = signed_areas(mesh.nodes, mesh.tris)
    m = np.zeros(mesh.n_nodes)
    for k in range(3):
        np.add.at(m, mesh.tris[:, k], areas / 3.0)
    return m


class ProbeSampler:
    """Samples nodal fields at fixed points by FE interpolation; the
    equivalent plastic strain comes from the nearest quadrature point."""

    def __init__(self, mesh, probes, elem_data):
        self.names = [p[0] for p in probes]
        self.points = np.array([[p[1], p[2]] for p in probes], dtype=float) \
            if probes else np.zeros((0, 2))
        if probes:
            self.elems, self.barys = locate_points(mesh, self.points)
            qp_ref = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
            tri_pts = mesh.nodes[mesh.tris[self.elems]]          # (P, 3, 2)
            qp_xy = np.einsum("qk,pkd->pqd", np.column_stack(
                [1 - qp_ref.sum(axis=1), qp_ref[:, 0], qp_ref[:, 1]]), tri_pts)
            d = np.linalg.norm(qp_xy - self.points[:, None, :], axis=2)
            self.nearest_qp = np.argmin(d, axis=1)
        self.mesh = mesh
        self.weights = elem_data.weights

    def sample(self, fields):
        out = {}
        if not self.names:
            return out
        c_vals = interpolate_nodal(self.mesh, fields.c, self.elems, self.barys)
        sh_vals = interpolate_nodal(self.mesh, fields.sigma_h_nodal, self.elems, self.barys)
        u_vals = interpolate_nodal(self.mesh, fields.u, self.elems, self.barys)
        for i, name in enumerate(self.names):
            e = self.elems[i]
            sig_avg = np.einsum("q,qa->a", self.weights, fields.states.sigma[e]) / self.weights.sum()
            out[name] = {
                "x": float(self.points[i, 0]),
                "y": float(self.points[i, 1]),
                "c": float(c_vals[i]),
                "sigma_h": float(sh_vals[i]),
                "sigma_e": float(von_mises(sig_avg)),
                "eps_p_eq": float(fields.states.eps_p_eq[e, self.nearest_qp[i]]),
                "ux": float(u_vals[i, 0]),
                "uy": float(u_vals[i, 1]),
            }
        return out


def initial_fields(scenario):
    """Zero-displacement, uniform-concentration state consistent with the
    scenario's reference concentration."""
    f = FieldState.zeros(scenario.mesh, c0=scenario.c_initial)
    return f


def run(scenario, config, elem_data=None, progress_cb=None):
    """March the scenario from t = 0 to t_end, recording probes every step.

    On a step failure the time step is halved (up to config.max_halvings)
    for the failing step only; refinement events are recorded in the
    history. ``progress_cb(step_no, record, fields)`` is invoked after every
    committed step. Raises RunAborted when the halvings are exhausted.
    """
    mesh = scenario.mesh
    ed = elem_data if elem_data is not None else precompute(mesh)
    dm = DofMap(mesh.n_nodes)
    sampler = ProbeSampler(mesh, scenario.probes, ed)
    masses = _lumped_masses(mesh)

    fields = initial_fields(scenario)
    history = TimeHistory()
    t = 0.0
    t_end = config.t_end
    step_no = 0
    newton_refs = {"u": 0.0, "c": 0.0}

    while t < t_end * (1.0 - 1e-12):
        dt = min(config.dt, t_end - t)
        attempt = 0
        while True:
            try:
                fields_new, info = step(fields, t, dt, scenario, config, ed, dm,
                                        newton_refs=newton_refs)
                break
            except StepFailure as err:
                attempt += 1
                if attempt > config.max_halvings:
                    raise RunAborted(f"step at t={t:g} failed after {config.max_halvings} "
                                     f"dt halvings: {err}") from err
                dt *= 0.5
                history.events.append({"time": t, "event": "dt_halved", "dt": dt,
                                       "reason": str(err)})
        t += dt
        step_no += 1
        fields = fields_new
        record = {
            "time": t,
            "dt": dt,
            "newton_iters": info.newton_iters,
            "stagger_passes": info.stagger_passes,
            "residual_norm": info.residual_norm,
            "total_concentration": float(masses @ fields.c),
            "max_eps_p_eq": float(fields.states.eps_p_eq.max()),
            "max_sigma_h": float(np.max(np.abs(hydrostatic(fields.states.sigma)))),
        }
        history.append(t, record, sampler.sample(fields))
        if progress_cb is not None:
            progress_cb(step_no, record, fields)
    return history, fields
