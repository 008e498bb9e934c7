import numpy as np
import pytest

from nutaxis import ModelParams, OdeState, apply_override, ode_solve, preset
from nutaxis.verify import (
    manufactured_convergence,
    ode_reference,
    regularization_study,
    run_all,
    transport_error,
)


def test_heat_convergence_report():
    rep = manufactured_convergence("heat")
    assert rep.problem == "heat"
    assert rep.resolutions == (100, 200, 400)
    assert all(a > b for a, b in zip(rep.errors, rep.errors[1:]))
    assert rep.spatial_order >= 1.9
    _, _, order2 = rep.temporal["sbdf2"]
    _, _, order1 = rep.temporal["sbdf1"]
    assert order2 >= 1.9
    assert 0.8 <= order1 <= 1.2  # the one-step starter scheme is first order


def test_transport_convergence_report():
    rep = manufactured_convergence("advection-diffusion")
    assert rep.temporal is None
    assert all(a > b for a, b in zip(rep.errors, rep.errors[1:]))
    assert rep.spatial_order >= 1.9


def test_transport_zero_data_is_exact():
    assert transport_error(100, u0=np.zeros(100)) == 0.0


def test_convergence_validation():
    with pytest.raises(ValueError):
        manufactured_convergence("stokes")
    with pytest.raises(ValueError):
        manufactured_convergence("heat", resolutions=(100, 200))


def test_regularization_distances_decrease():
    cfg = apply_override(preset("fig1_left", 60), "geometry.n_cells", 100)
    rep = regularization_study(cfg, sample_time=0.5)
    assert rep.eps == (1e-1, 1e-2, 1e-3)
    assert rep.sample_time == 0.5
    assert all(d > 0.0 for d in rep.distances)
    assert rep.distances[0] > rep.distances[1] > rep.distances[2]


def test_ode_reference_matches_coarse_solve():
    params = ModelParams(D_u=1.0, D_w=1.0, chi=0.0, alpha=2.0, beta=1.0,
                         gamma=1.0, delta=1.0)
    s0 = OdeState(0.0, 1.0, 1.0, 1.0)
    ref = ode_reference(params, s0, 2.0)
    coarse = ode_solve(s0, params, 2.0, 1e-3)[-1]
    assert coarse.u == pytest.approx(ref.u, rel=1e-9)
    assert coarse.v == pytest.approx(ref.v, rel=1e-9)


def test_run_all_passes_and_reports():
    lines = []
    results = run_all(seed=0, printer=lines.append)
    assert len(results) == 15
    assert all(r.ok for r in results), [r for r in results if not r.ok]
    assert len(lines) == len(results)
    for line, res in zip(lines, results):
        assert line.startswith("[PASS] " + res.name + ":")
    names = [r.name for r in results]
    assert len(set(names)) == len(names)
