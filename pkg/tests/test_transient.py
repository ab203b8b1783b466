import numpy as np
import pytest

from chemoplast import analytic, assembly as asm, transient as tr
from chemoplast.constitutive import MaterialParams, von_mises, yield_function
from chemoplast.scenarios import Scenario
from conftest import build_strip_mesh, build_two_element_square


def diffusion_material(D=1.0):
    return MaterialParams(E=1e9, nu=0.3, D=D, Omega=1e-12, T=300.0)


def slab_scenario(nx=100, fixed_u=True):
    m = build_strip_mesh(nx)
    params = diffusion_material()
    bcs = asm.BoundaryConditions(
        dirichlet_u=[(t, c, 0.0) for t in ("left", "right", "top", "bottom") for c in (0, 1)],
        dirichlet_c=[("left", 1.0)])
    scales = analytic.nondim_scales(params, 1.0)
    return Scenario(mesh=m, params=params, bcs=bcs, probes=[("end", 1.0, 0.005)],
                    scales=scales, c_initial=0.0,
                    solver=tr.SolverConfig(dt=1e-3, t_end=0.1, mode="one-way",
                                           plasticity=False))


def quiescent_scenario():
    m = build_two_element_square()
    params = MaterialParams(E=210e9, nu=0.3, D=1e-8, Omega=1.96e-6, T=300.0,
                            sigma_y0=400e6, hardening_kind="isotropic", H=2.1e9)
    bcs = asm.BoundaryConditions(pins=[(0, 0, 0.0), (0, 1, 0.0), (1, 1, 0.0)])
    scales = analytic.nondim_scales(params, 1.0)
    return Scenario(mesh=m, params=params, bcs=bcs, probes=[], scales=scales,
                    c_initial=5.0,
                    solver=tr.SolverConfig(dt=100.0, t_end=300.0, mode="two-way",
                                           plasticity=True))


class TestStep:
    def test_quiescent_step_is_identity(self):
        scen = quiescent_scenario()
        fields = tr.initial_fields(scen)
        new, info = tr.step(fields, 0.0, 100.0, scen, scen.solver)
        assert info.newton_iters <= 1
        assert np.array_equal(new.u, fields.u)
        assert np.array_equal(new.c, fields.c)
        assert np.array_equal(new.states.sigma, fields.states.sigma)
        assert np.array_equal(new.states.eps_p_eq, fields.states.eps_p_eq)

    def test_elastic_one_way_two_solves_max(self):
        scen = slab_scenario(nx=20)
        fields = tr.initial_fields(scen)
        new, info = tr.step(fields, 0.0, 1e-3, scen, scen.solver)
        assert info.newton_iters <= 2

    def test_stagger_counts_single_pass_when_elastic(self):
        scen = slab_scenario(nx=10)
        fields = tr.initial_fields(scen)
        _, info = tr.step(fields, 0.0, 1e-3, scen, scen.solver)
        assert info.stagger_passes == 1


class TestRunSlab:
    def test_matches_series_oracle(self):
        scen = slab_scenario(nx=100)
        hist, fields = tr.run(scen, scen.solver)
        xs = np.linspace(0.0, 1.0, 101)
        c_fe = fields.c[:101]
        c_ex = analytic.slab_series(xs, 0.1, 1.0, 1.0, n_terms=60)
        l2 = np.sqrt(np.trapezoid((c_fe - c_ex) ** 2, xs) / np.trapezoid(c_ex**2, xs))
        assert l2 <= 0.01

    def test_temporal_order_at_least_first(self):
        scen = slab_scenario(nx=100)
        xs = np.linspace(0.0, 1.0, 101)
        c_ex = analytic.slab_series(xs, 0.1, 1.0, 1.0, n_terms=60)
        errs = []
        for dt in (4e-3, 2e-3):
            scen.solver = tr.SolverConfig(dt=dt, t_end=0.1, mode="one-way", plasticity=False)
            _, fields = tr.run(scen, scen.solver)
            errs.append(np.sqrt(np.trapezoid((fields.c[:101] - c_ex) ** 2, xs)
                                / np.trapezoid(c_ex**2, xs)))
        order = np.log2(errs[0] / errs[1])
        assert order >= 0.9

    def test_history_shape_and_monotonicity(self):
        scen = slab_scenario(nx=20)
        scen.solver = tr.SolverConfig(dt=0.02, t_end=0.1, mode="one-way", plasticity=False)
        hist, _ = tr.run(scen, scen.solver)
        assert len(hist.times) == 5
        assert np.all(np.diff(hist.times) > 0)
        end = hist.probe_series("end", "c")
        assert np.all(np.diff(end) > 0)   # charging monotonically

    def test_probe_series_keys(self):
        scen = slab_scenario(nx=10)
        scen.solver = tr.SolverConfig(dt=0.05, t_end=0.1, mode="one-way", plasticity=False)
        hist, _ = tr.run(scen, scen.solver)
        sample = hist.samples[-1]["end"]
        for key in ("x", "y", "c", "sigma_h", "sigma_e", "eps_p_eq", "ux", "uy"):
            assert key in sample


class TestRobustness:
    def test_dt_halving_recorded_on_forced_failure(self, monkeypatch):
        scen = slab_scenario(nx=10)
        scen.solver = tr.SolverConfig(dt=0.05, t_end=0.1, mode="one-way", plasticity=False)
        real_step = tr.step
        failures = {"n": 2}

        def flaky_step(fields, t, dt, scenario, config, elem_data=None, dofmap=None,
                       newton_refs=None):
            if failures["n"] > 0:
                failures["n"] -= 1
                raise tr.StepFailure("forced constitutive failure")
            return real_step(fields, t, dt, scenario, config, elem_data, dofmap,
                             newton_refs=newton_refs)

        monkeypatch.setattr(tr, "step", flaky_step)
        hist, _ = tr.run(scen, scen.solver)
        assert len(hist.events) == 2
        assert all(e["event"] == "dt_halved" for e in hist.events)
        assert hist.events[0]["dt"] == pytest.approx(0.025)
        assert hist.events[1]["dt"] == pytest.approx(0.0125)

    def test_run_aborts_after_exhausted_halvings(self, monkeypatch):
        scen = slab_scenario(nx=10)
        scen.solver = tr.SolverConfig(dt=0.05, t_end=0.1, mode="one-way", plasticity=False)

        def always_fail(*args, **kwargs):
            raise tr.StepFailure("forced constitutive failure")

        monkeypatch.setattr(tr, "step", always_fail)
        with pytest.raises(tr.RunAborted):
            tr.run(scen, scen.solver)

    def test_nan_boundary_value_fails_step_not_process(self):
        scen = slab_scenario(nx=10)
        scen.bcs.dirichlet_c[0] = ("left", lambda t: np.nan)
        scen.solver = tr.SolverConfig(dt=0.05, t_end=0.1, mode="one-way",
                                      plasticity=False, newton_max_iter=5)
        with pytest.raises(tr.RunAborted):
            tr.run(scen, scen.solver)

    def test_time_history_rejects_non_increasing(self):
        h = tr.TimeHistory()
        h.append(1.0, {}, {})
        with pytest.raises(ValueError):
            h.append(1.0, {}, {})

    def test_solver_config_validation(self):
        with pytest.raises(ValueError):
            tr.SolverConfig(dt=-1.0, t_end=1.0)
        with pytest.raises(ValueError):
            tr.SolverConfig(dt=1.0, t_end=1.0, mode="diagonal")


class TestPlasticTransient:
    def test_yield_never_exceeded_along_run(self):
        # pulled plate at yield-exceeding load; every recorded state on or
        # inside the hardened yield surface
        from chemoplast import scenarios as sc
        cfg = sc.load_config("""
geometry.kind = plate_with_hole
geometry.L = 1.0
geometry.r = 0.2
geometry.target_h = 0.07
material.preset = steel_table1
material.sigma_y0 = 80e6
loading.kind = displacement
loading.u_bar = 4.3e-4
loading.t_ramp_hat = 0.02
concentration.insulated = on
concentration.initial_hat = 0.05
coupling.mode = twoway
plasticity.enabled = on
solver.dt_hat = 0.01
solver.t_end_hat = 0.05
""")
        scen = sc.build_scenario(cfg)
        seen = []

        def check(step_no, record, fields):
            f = yield_function(fields.states, scen.params)
            seen.append(float(np.max(f)))

        hist, fields = tr.run(scen, scen.solver, progress_cb=check)
        assert hist.records[-1]["max_eps_p_eq"] > 0
        assert max(seen) <= scen.params.tol_f

    def test_stagger_two_passes_under_flow(self):
        from chemoplast import scenarios as sc
        cfg = sc.load_config("""
geometry.kind = plate_with_hole
geometry.L = 1.0
geometry.r = 0.2
geometry.target_h = 0.07
material.preset = steel_table1
material.sigma_y0 = 80e6
loading.kind = displacement
loading.u_bar = 4.3e-4
loading.t_ramp_hat = 0.02
concentration.insulated = on
concentration.initial_hat = 0.05
coupling.mode = twoway
plasticity.enabled = on
solver.dt_hat = 0.01
solver.t_end_hat = 0.03
""")
        scen = sc.build_scenario(cfg)
        hist, _ = tr.run(scen, scen.solver)
        passes = [r["stagger_passes"] for r in hist.records]
        assert max(passes) <= 10
        assert max(passes) >= 2   # plastic steps take a confirmation pass

    def test_one_way_concentration_blind_to_plasticity(self):
        # strip with a mechanical load and chemo-mechanical coupling off in
        # the diffusion equation: c history identical with plasticity on/off
        m = build_strip_mesh(30)
        base = dict(E=210e9, nu=0.3, D=1.0, Omega=1e-6, T=300.0)
        plastic = MaterialParams(**base, sigma_y0=50e6, hardening_kind="isotropic", H=2.1e9)
        bcs = asm.BoundaryConditions(
            dirichlet_u=[("left", 0, 0.0), ("left", 1, 0.0)],
            tractions=[("right", (lambda t: 65e6 * min(t / 0.04, 1.0), 0.0))],
            dirichlet_c=[("left", 1.0)])
        scales = analytic.nondim_scales(plastic, 1.0)
        out = {}
        for plast in (True, False):
            scen = Scenario(mesh=m, params=plastic, bcs=bcs, probes=[("end", 1.0, 0.005)],
                            scales=scales, c_initial=0.0,
                            solver=tr.SolverConfig(dt=2.5e-3, t_end=0.05, mode="one-way",
                                                   plasticity=plast))
            hist, fields = tr.run(scen, scen.solver)
            out[plast] = (hist.probe_series("end", "c"), fields.c)
            if plast:
                assert hist.records[-1]["max_eps_p_eq"] > 0   # plastic flow happened
            assert not hist.events   # same time grid in both runs
        assert np.max(np.abs(out[True][1] - out[False][1])) <= 1e-10
        assert np.max(np.abs(out[True][0] - out[False][0])) <= 1e-10
