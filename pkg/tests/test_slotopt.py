"""Per-slot optimizers: targets, power, order search, phase ascent, alternating loop."""

import numpy as np
import pytest

from risnoma.channel import FadingParams, Geometry, aligned_phases, compose_equivalent, sample_channels
from risnoma.config import SimConfig
from risnoma.env import SemNomaEnv
from risnoma.noma import all_capacities, order_from_priorities
from risnoma.semantic import SemanticParams
from risnoma.slotopt import (
    OptimizerChoice,
    SlotProblem,
    best_order_bruteforce,
    dispatch,
    effective_targets,
    heuristic_order_by_gain,
    jtac_alternating,
    penalized_order_relaxation,
    phases_coordinate_ascent,
    solve_power,
    surrogate_objective,
)

GEOM = Geometry(
    ap_position=(0.0, 0.0),
    ris_position=(5.0, 0.0),
    su_positions=((7.0, 1.5), (6.6, 2.0), (7.4, 1.1)),
)


def make_problem(
    seed=0,
    num_elements=16,
    K=3,
    deferrable=True,
    arrivals=None,
    raw=None,
    semb=None,
    extract=None,
    transmit=None,
    schedule=None,
    rho=None,
    bandwidth=0.05,
    s_min=0.1,
    p_max=10.0,
    geometry=None,
    phases=None,
):
    geometry = geometry or GEOM
    state = sample_channels(geometry, FadingParams(), seed, num_elements)
    arrivals = np.full(K, 1.0) if arrivals is None else np.asarray(arrivals, dtype=float)
    raw = np.zeros(K) if raw is None else np.asarray(raw, dtype=float)
    semb = np.zeros(K) if semb is None else np.asarray(semb, dtype=float)
    extract = raw + arrivals if extract is None else np.asarray(extract, dtype=float)
    rho = np.full(K, 0.4) if rho is None else np.asarray(rho, dtype=float)
    if transmit is None:
        transmit = semb + rho * np.minimum(extract, raw + arrivals)
    schedule = np.ones(K, dtype=int) if schedule is None else np.asarray(schedule, dtype=int)
    return SlotProblem(
        state=state,
        arrivals=arrivals,
        raw_backlog=raw,
        sem_backlog=semb,
        extract=extract,
        transmit=np.asarray(transmit, dtype=float),
        schedule=schedule,
        rho=rho,
        order=order_from_priorities(np.arange(K)),
        phases=np.zeros(num_elements) if phases is None else np.asarray(phases, dtype=float),
        noise_power=1e-12,
        slot_duration=1.0,
        bandwidth=bandwidth,
        s_min=s_min,
        p_max=p_max,
        rho_min=0.2,
        sem=SemanticParams(),
        deferrable=deferrable,
    )


# -- effective targets --


def test_targets_cap_transmit_at_availability():
    prob = make_problem(raw=[0.0, 0.0, 0.0], semb=[0.1, 0.0, 5.0],
                        extract=[1.0, 1.0, 0.0], transmit=[9.0, 9.0, 9.0],
                        rho=[0.5, 0.5, 0.5])
    ext_eff, sched_eff, targets = effective_targets(prob, prob.rho)
    assert np.allclose(ext_eff, [1.0, 1.0, 0.0])
    # availability: 0.1+0.5, 0+0.5, 5+0
    assert np.allclose(targets, [0.6, 0.5, 5.0])
    assert list(sched_eff) == [1, 1, 1]


def test_targets_drop_sus_below_minimum_size():
    prob = make_problem(semb=[0.0, 0.0, 0.0], extract=[0.0, 1.0, 1.0],
                        transmit=[1.0, 1.0, 1.0], rho=[0.5, 0.5, 0.05 + 0.2])
    # SU0 has nothing available -> forced idle
    _, sched_eff, targets = effective_targets(prob, prob.rho)
    assert sched_eff[0] == 0 and targets[0] == 0.0
    assert sched_eff[1] == 1 and sched_eff[2] == 1


def test_targets_apply_minimum_decodable_size():
    prob = make_problem(semb=[2.0, 2.0, 2.0], transmit=[0.01, 0.5, 0.2])
    _, _, targets = effective_targets(prob, prob.rho)
    assert targets[0] == prob.s_min  # floored
    assert np.allclose(targets[1:], [0.5, 0.2])


def test_targets_realtime_mode_tracks_arrivals():
    prob = make_problem(deferrable=False, arrivals=[1.0, 2.0, 0.0], rho=[0.5, 0.3, 0.4])
    ext_eff, sched_eff, targets = effective_targets(prob, prob.rho)
    assert np.allclose(targets, np.maximum([0.5, 0.6, 0.0], prob.s_min))
    assert np.all(sched_eff == 1)


def test_requested_idle_su_stays_idle():
    prob = make_problem(schedule=[1, 0, 1], semb=[1.0, 1.0, 1.0])
    _, sched_eff, targets = effective_targets(prob, prob.rho)
    assert sched_eff[1] == 0 and targets[1] == 0.0


# -- order search --


def test_bruteforce_single_su_is_identity():
    prob = make_problem(K=1, arrivals=[1.0], geometry=Geometry(
        ap_position=(0.0, 0.0), ris_position=(5.0, 0.0), su_positions=((7.0, 1.5),)))
    order = best_order_bruteforce(prob)
    assert list(order.decode_sequence()) == [0]


def test_heuristic_order_is_descending_gain():
    prob = make_problem(seed=3)
    order = heuristic_order_by_gain(prob)
    gains = prob.gains()
    seq = order.decode_sequence()
    assert list(gains[seq]) == sorted(gains, reverse=True)


def test_bruteforce_never_worse_than_heuristic():
    for seed in range(12):
        prob = make_problem(seed=seed)
        brute = best_order_bruteforce(prob)
        heur = heuristic_order_by_gain(prob)
        p_brute, _ = solve_power(prob, prob.rho, brute, prob.phases)
        p_heur, _ = solve_power(prob, prob.rho, heur, prob.phases)
        if p_brute.feasible and p_heur.feasible:
            assert np.sum(p_brute.profile.power) <= np.sum(p_heur.profile.power) + 1e-15
        else:
            assert p_brute.violation <= p_heur.violation + 1e-12


def test_bruteforce_all_idle_returns_identity():
    prob = make_problem(schedule=[0, 0, 0])
    order = best_order_bruteforce(prob)
    assert list(order.decode_sequence()) == [0, 1, 2]


def test_bruteforce_rejects_large_active_sets():
    K = 9
    geom = Geometry(
        ap_position=(0.0, 0.0),
        ris_position=(5.0, 0.0),
        su_positions=tuple((7.0 + 0.05 * k, 1.5) for k in range(K)),
    )
    prob = make_problem(K=K, geometry=geom, arrivals=np.ones(K))
    with pytest.raises(ValueError):
        best_order_bruteforce(prob)


# -- phase optimization --


def test_surrogate_never_decreases_along_coordinate_ascent():
    prob = make_problem(seed=5, num_elements=12)
    init = np.zeros(12)
    out = phases_coordinate_ascent(prob, init, sweeps=2)
    assert surrogate_objective(prob, out) >= surrogate_objective(prob, init) - 1e-9


def test_single_su_ascent_approaches_cophasing_bound():
    geom = Geometry(ap_position=(0.0, 0.0), ris_position=(5.0, 0.0), su_positions=((7.0, 1.5),))
    prob = make_problem(K=1, geometry=geom, arrivals=[1.0], num_elements=24, seed=2)
    out = phases_coordinate_ascent(prob, np.zeros(24), sweeps=3)
    h = compose_equivalent(prob.state, out)
    bound = np.abs(prob.state.h_direct[0]) + np.sum(np.abs(prob.state.cascade[0]))
    assert np.abs(h[0]) >= 0.999 * bound


def test_ascent_output_in_range():
    prob = make_problem(seed=8, num_elements=10)
    out = phases_coordinate_ascent(prob, np.full(10, 1.0))
    assert np.all((out >= 0) & (out < 2 * np.pi))


def test_ascent_requires_a_sweep():
    prob = make_problem()
    with pytest.raises(ValueError):
        phases_coordinate_ascent(prob, np.zeros(16), sweeps=0)


# -- penalized order relaxation --


def test_relaxation_returns_valid_permutation_and_trace():
    prob = make_problem(seed=6)
    order, info = penalized_order_relaxation(prob)
    assert sorted(order.decode_sequence().tolist()) == [0, 1, 2]
    assert "penalty_trace" in info and len(info["penalty_trace"]) >= 1
    # ramping the penalty drives the binary gap toward zero
    assert info["penalty_trace"][-1] <= info["penalty_trace"][0] + 1e-9
    if info["converged"]:
        # near-binary acceptance: max u(1-u) < 0.05 over 3 pairs, both halves
        assert info["penalty_trace"][-1] < 0.3


def test_relaxation_majorant_upper_bounds_gap_on_grid():
    """The tangent expansion at u0 upper-bounds u - u^2 everywhere on [0,1]^2."""
    grid = np.arange(0.0, 1.0 + 1e-9, 0.01)
    for u0 in grid:
        majorant = grid + u0 ** 2 - 2 * grid * u0
        gap = grid - grid ** 2
        assert np.all(majorant >= gap - 1e-12)


# -- alternating loop --


def _fresh_env_problem(seed, deferrable=False):
    sim = SimConfig(deferrable=deferrable)
    env = SemNomaEnv(sim, seed)
    return env.build_problem()


def test_alternating_trace_is_monotone_and_bounded():
    for seed in (42, 43, 44, 45, 46):
        prob = _fresh_env_problem(seed)
        result = jtac_alternating(prob, eps=1e-3)
        trace = result.eta_trace
        assert result.iterations <= 10
        assert all(b >= a - 1e-12 for a, b in zip(trace, trace[1:]))
        assert result.efficiency == trace[-1]


def test_alternating_beats_every_single_family_ablation():
    for seed in (42, 43, 44, 45, 46):
        prob = _fresh_env_problem(seed)
        full = jtac_alternating(prob, eps=1e-3).efficiency
        for frozen in ({"phases"}, {"rho"}, {"order"}):
            ablated = jtac_alternating(prob, eps=1e-3, freeze=frozenset(frozen)).efficiency
            assert full >= ablated - 1e-9, (seed, frozen)


def test_alternating_freeze_pins_families():
    prob = _fresh_env_problem(7)
    res = jtac_alternating(prob, freeze=frozenset({"phases", "rho", "order"}))
    assert np.array_equal(res.action.phases, prob.phases)
    assert np.array_equal(res.action.rho, prob.rho)
    assert np.array_equal(res.action.order.priority, prob.order.priority)


def test_alternating_lightweight_profile_runs():
    prob = _fresh_env_problem(9)
    res = jtac_alternating(prob, profile="lightweight")
    assert res.efficiency > 0


def test_alternating_repairs_infeasible_start():
    """A depth the initial powers cannot deliver is pulled back into range."""
    from risnoma.slotopt import _point_efficiency

    prob = _fresh_env_problem(11, deferrable=False)
    assert not solve_power(prob, prob.rho, prob.order, prob.phases)[0].feasible
    eta0 = _point_efficiency(prob, prob.rho, prob.order, prob.phases)[0]
    res = jtac_alternating(prob, eps=1e-3)
    assert res.feasible
    assert np.all(res.action.rho <= 1.0)
    assert res.efficiency >= eta0 - 1e-12


# -- dispatcher --


def test_dispatch_mode_isolation():
    """Each family changes only its own control, bitwise."""
    prob = make_problem(seed=10)
    base_rho = prob.rho.copy()
    base_phases = prob.phases.copy()
    base_order = prob.order.priority.copy()

    a1 = dispatch(OptimizerChoice(1), prob)
    assert np.array_equal(a1.phases, base_phases)
    assert np.array_equal(a1.order.priority, base_order)

    a2 = dispatch(OptimizerChoice(2), prob)
    assert np.array_equal(a2.rho, base_rho)
    assert np.array_equal(a2.order.priority, base_order)

    a3 = dispatch(OptimizerChoice(3), prob)
    assert np.array_equal(a3.rho, base_rho)
    assert np.array_equal(a3.phases, base_phases)


def test_dispatch_depth_tracks_capacity_per_su():
    prob = make_problem(seed=12, rho=[1.0, 1.0, 1.0])
    action = dispatch(OptimizerChoice(1), prob)
    sol, _ = solve_power(prob, prob.rho, prob.order, prob.phases)
    h = compose_equivalent(prob.state, prob.phases)
    caps = all_capacities(h, sol.profile, prob.order, prob.noise_power,
                          prob.slot_duration, prob.bandwidth)
    expected = np.clip(caps / prob.arrivals, 0.2, 1.0)
    assert np.allclose(action.rho, expected)


def test_dispatch_carries_current_action():
    prob = make_problem(seed=13)
    first = dispatch(OptimizerChoice(2), prob)
    second = dispatch(OptimizerChoice(3), prob, current=first)
    assert np.array_equal(second.phases, first.phases)
    assert np.array_equal(second.rho, first.rho)


def test_dispatch_always_attaches_power():
    prob = make_problem(seed=14)
    for mode in (1, 2, 3):
        action = dispatch(OptimizerChoice(mode), prob)
        assert action.power is not None
        assert action.targets is not None


def test_dispatch_lightweight_is_faster_and_same_controls_shape():
    import time

    prob = make_problem(seed=15, num_elements=70)
    dispatch(OptimizerChoice(2), prob, profile="exact")  # warm caches
    t0 = time.perf_counter()
    exact = dispatch(OptimizerChoice(2), prob, profile="exact")
    t_exact = time.perf_counter() - t0
    t0 = time.perf_counter()
    light = dispatch(OptimizerChoice(2), prob, profile="lightweight")
    t_light = time.perf_counter() - t0
    assert exact.phases.shape == light.phases.shape
    assert t_light < t_exact


def test_dispatch_rejects_bad_profile_and_mode():
    prob = make_problem()
    with pytest.raises(ValueError):
        dispatch(OptimizerChoice(2), prob, profile="fast")
    with pytest.raises(ValueError):
        OptimizerChoice(0)
    with pytest.raises(ValueError):
        OptimizerChoice(4)


def test_lightweight_alignment_targets_neediest_su():
    prob = make_problem(seed=16, semb=[0.0, 5.0, 0.0])
    action = dispatch(OptimizerChoice(2), prob, profile="lightweight")
    assert np.allclose(action.phases, aligned_phases(prob.state, 1))
