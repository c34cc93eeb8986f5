"""Trust-region engine tests.

The edge-length state machine is checked two ways: hand-scripted event
sequences with literal expected traces, and exhaustive comparison (all
success/failure sequences up to length 12) against an independent
run-length oracle.
"""

import itertools

import numpy as np
import pytest

from feedbo.errors import ValidationError
from feedbo.morbo import (
    MorboConfig,
    MorboOptimizer,
    Proposal,
    random_weight,
    run_morbo,
    scalarize,
    update_length,
)
from feedbo.pareto import hvc
from feedbo.problem import check_feasibility

from conftest import make_constrained_instance, make_simplex_instance


# -- state machine -------------------------------------------------------------------

def drive_engine(events, *, tau_s, tau_f, l0, l_max, l_min):
    """Feed a success/failure string through the engine's counter logic
    exactly the way ``observe`` does: increment, zero the other counter,
    then apply the threshold update."""
    trace = []
    length, ns, nf = l0, 0, 0
    for ev in events:
        if ev == "S":
            ns, nf = ns + 1, 0
        else:
            nf, ns = nf + 1, 0
        length, ns, nf, dead = update_length(
            length, ns, nf, success_threshold=tau_s, failure_threshold=tau_f,
            length_max=l_max, length_min=l_min)
        trace.append((length, ns, nf, dead))
        if dead:
            break
    return trace


def drive_oracle(events, *, tau_s, tau_f, l0, l_max, l_min):
    """Independent formulation: the success counter equals the trailing
    run of S since the last doubling/halving, and likewise for failures,
    because each outcome zeroes the opposite counter."""
    trace = []
    length = l0
    run_kind, run_len = None, 0
    for ev in events:
        if ev == run_kind:
            run_len += 1
        else:
            run_kind, run_len = ev, 1
        moved = False
        if run_kind == "S" and run_len > tau_s:
            length = min(2.0 * length, l_max)
            moved = True
        elif run_kind == "F" and run_len > tau_f:
            length = length / 2.0
            moved = True
        if moved:
            run_kind, run_len = None, 0
        dead = length < l_min
        trace.append((length,
                      run_len if run_kind == "S" else 0,
                      run_len if run_kind == "F" else 0,
                      dead))
        if dead:
            break
    return trace


RULES = dict(tau_s=3, tau_f=4, l0=0.4, l_max=1.0, l_min=0.01)


def test_scripted_doubling_needs_threshold_exceeded():
    # three successes sit at the threshold, the fourth doubles
    trace = drive_engine("SSSS", **RULES)
    assert [t[0] for t in trace] == [0.4, 0.4, 0.4, 0.8]
    assert trace[2][1] == 3           # counter parked at the threshold
    assert trace[3][1:3] == (0, 0)    # both counters reset by the move


def test_scripted_halving_after_threshold_exceeded():
    rules = dict(RULES, tau_f=2)
    trace = drive_engine("FFF", **rules)
    assert [t[0] for t in trace] == [0.4, 0.4, 0.2]
    assert trace[-1][1:3] == (0, 0)


def test_scripted_failure_resets_success_counter():
    trace = drive_engine("SSFSSSS", **RULES)
    # the F at step 3 wipes the two successes, so doubling needs four more
    assert [t[0] for t in trace] == [0.4] * 6 + [0.8]
    assert trace[2][1:3] == (0, 1)


def test_scripted_doubling_clamps_at_maximum():
    trace = drive_engine("SSSS", **dict(RULES, l0=0.7))
    assert trace[-1][0] == 1.0


def test_scripted_halving_below_minimum_terminates():
    length, ns, nf, dead = update_length(
        0.018, 0, 1, success_threshold=3, failure_threshold=0,
        length_max=1.0, length_min=0.01)
    assert (length, ns, nf, dead) == (0.009, 0, 0, True)


def test_no_move_without_events():
    assert update_length(0.4, 0, 0, success_threshold=3, failure_threshold=4,
                         length_max=1.0, length_min=0.01) == (0.4, 0, 0, False)


@pytest.mark.parametrize("rules", [
    RULES,
    dict(tau_s=1, tau_f=1, l0=0.05, l_max=0.1, l_min=0.02),
    dict(tau_s=2, tau_f=0, l0=0.4, l_max=0.5, l_min=0.05),
])
def test_state_machine_exhaustive_up_to_length_12(rules):
    for n in range(1, 13):
        for bits in itertools.product("SF", repeat=n):
            events = "".join(bits)
            got = drive_engine(events, **rules)
            want = drive_oracle(events, **rules)
            assert got == want, f"trace mismatch for {events!r} under {rules}"


# -- scalarization --------------------------------------------------------------------

def test_scalarize_known_value():
    r = np.zeros(3)
    lam = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
    y = np.array([2.0, 4.0, 6.0])
    want = (2.0 * np.sqrt(3.0)) ** 3
    assert scalarize(y, lam, r)[0] == pytest.approx(want, rel=1e-12)


def test_scalarize_clamps_below_reference():
    r = np.zeros(3)
    lam = np.full(3, 1.0 / np.sqrt(3.0))
    assert scalarize(np.array([-1.0, 5.0, 5.0]), lam, r)[0] == 0.0


def test_scalarize_is_monotone_in_dominance():
    rng = np.random.default_rng(7)
    r = np.zeros(3)
    for _ in range(50):
        lam = random_weight(rng, 3)
        y = rng.uniform(0.1, 1.0, size=3)
        better = y + rng.uniform(0.0, 0.5, size=3)
        s = scalarize(np.vstack([y, better]), lam, r)
        assert s[1] >= s[0]


def test_random_weight_unit_and_positive():
    rng = np.random.default_rng(0)
    for _ in range(20):
        w = random_weight(rng, 3)
        assert w.shape == (3,)
        assert np.all(w > 0)
        assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-12)


# -- configuration ---------------------------------------------------------------------

def test_config_rejects_bad_values():
    with pytest.raises(ValidationError):
        MorboConfig(sampler="bogus")
    with pytest.raises(ValidationError):
        MorboConfig(q=0)
    with pytest.raises(ValidationError):
        MorboConfig(length_min=0.5, length_init=0.4)


def test_failure_threshold_defaults_to_dim_over_q():
    assert MorboConfig(q=1).resolved_failure_threshold(17) == 17
    assert MorboConfig(q=3).resolved_failure_threshold(17) == 6
    assert MorboConfig(failure_threshold=9).resolved_failure_threshold(17) == 9


# -- engine behavior --------------------------------------------------------------------

SMALL = MorboConfig(n_trust_regions=2, n_thompson=48, iterations=4, n_init=10,
                    n_features=64)


def test_initialize_lays_out_design_and_archive(toy4):
    opt = MorboOptimizer(toy4, SMALL, seed=0).initialize()
    assert opt.X.shape == (10, 4)
    assert opt.archive.cardinality >= 1
    assert np.all(opt.S > opt.ref_point[None, :] - 1e-9)
    assert opt._stats[0].iteration == 0
    assert list(opt.origin) == [-1] * 10
    assert len(opt.trust_regions) == 2


def test_every_recorded_mix_is_feasible(ref_instance):
    record = run_morbo(ref_instance, MorboConfig(
        n_trust_regions=2, n_thompson=64, iterations=5, n_init=12,
        n_features=128), seed=1)
    for x in record.X:
        assert check_feasibility(ref_instance, x).feasible


def test_hypervolume_series_never_decreases(toy4):
    record = run_morbo(toy4, SMALL, seed=2)
    series = record.hypervolume_series
    assert series.shape == (5,)
    assert np.all(np.diff(series) >= -1e-12)


def _stats_key(stats):
    return [(s.iteration, s.evaluations, round(s.hypervolume, 12), s.cardinality,
             s.no_improvement, s.trust_region_lengths, s.restarts,
             None if np.isnan(s.diversity) else round(s.diversity, 12))
            for s in stats]


def test_same_seed_reproduces_run_exactly(toy4):
    a = run_morbo(toy4, SMALL, seed=3)
    b = run_morbo(toy4, SMALL, seed=3)
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.Y, b.Y)
    assert np.array_equal(a.origin, b.origin)
    assert _stats_key(a.stats) == _stats_key(b.stats)


def test_different_seed_changes_run(toy4):
    a = run_morbo(toy4, SMALL, seed=3)
    b = run_morbo(toy4, SMALL, seed=4)
    assert not np.array_equal(a.X, b.X)


def test_zero_iterations_runs_init_only(toy4):
    record = run_morbo(toy4, MorboConfig(n_trust_regions=1, iterations=0,
                                         n_init=6, n_thompson=16, n_features=32))
    assert record.X.shape[0] == 6
    assert len(record.stats) == 1
    assert np.all(record.iteration_of == 0)


def test_exact_sampler_variant_runs(toy4):
    record = run_morbo(toy4, MorboConfig(
        n_trust_regions=1, n_thompson=32, iterations=2, n_init=8,
        sampler="exact"), seed=0)
    assert record.stats[-1].iteration == 2


def test_batch_q_records_q_points_per_round(toy4):
    record = run_morbo(toy4, MorboConfig(
        n_trust_regions=2, n_thompson=32, iterations=3, n_init=8, q=3,
        n_features=64), seed=5)
    assert record.X.shape[0] == 8 + 3 * 3
    assert np.sum(record.iteration_of == 1) == 3


def test_window_pads_to_two_nearest(toy4):
    opt = MorboOptimizer(toy4, SMALL, seed=0).initialize()
    tr = opt.trust_regions[0]
    tr.center = np.array([0.8, 0.2, 0.0, 0.0])
    tr.length = 1e-9
    idx = opt._window(tr)
    gap = np.max(np.abs(opt.X - tr.center[None, :]), axis=1)
    assert idx.size == 2
    assert set(idx) == set(np.argsort(gap, kind="stable")[:2])


def test_recenter_picks_best_contributor_in_window(toy4):
    opt = MorboOptimizer(toy4, SMALL, seed=1).initialize()
    tr = opt.trust_regions[0]
    tr.length = 10.0  # window covers every archive member
    contrib = hvc(opt.archive.front, opt.ref_point)
    opt._recenter(tr, contrib)
    want = np.asarray(opt.archive.entries[int(np.argmax(contrib))].solution)
    assert np.allclose(tr.center, want)


def test_recenter_keeps_center_when_window_is_empty(toy4):
    opt = MorboOptimizer(toy4, SMALL, seed=1).initialize()
    tr = opt.trust_regions[0]
    tr.center = np.full(4, 100.0)
    tr.length = 1e-6
    before = tr.center.copy()
    opt._recenter(tr, hvc(opt.archive.front, opt.ref_point))
    assert np.array_equal(tr.center, before)


def test_region_restarts_after_shrinking_below_minimum(toy4):
    # duplicate observation -> zero gain -> failure -> halve -> terminate
    cfg = MorboConfig(n_trust_regions=1, n_thompson=16, iterations=1, n_init=8,
                      n_features=32, failure_threshold=1, length_init=0.4)
    opt = MorboOptimizer(toy4, cfg, seed=0).initialize()
    tr = opt.trust_regions[0]
    tr.length = 0.015
    tr.failures = 1
    dup = Proposal(x=opt.X[0].copy(), tr_index=0, drawn=opt.S[0].copy(),
                   no_improvement=False)
    opt.observe([dup])
    assert tr.restarts == 1
    assert tr.length == cfg.length_init
    assert (tr.successes, tr.failures) == (0, 0)
    assert opt._stats[-1].restarts == 1


def test_success_resets_failure_counter_in_engine(simplex3):
    cfg = MorboConfig(n_trust_regions=1, n_thompson=16, iterations=1, n_init=6,
                      n_features=32)
    opt = MorboOptimizer(simplex3, cfg, seed=2).initialize()
    tr = opt.trust_regions[0]
    tr.failures = 2
    # a mix strictly better than anything seen: the pure-corner diet is
    # optimal for lysine and cost here, push towards it past the archive
    fresh = Proposal(x=np.array([1.0, 0.0, 0.0]), tr_index=0,
                     drawn=opt.S[0].copy(), no_improvement=False)
    opt.observe([fresh])
    assert tr.failures == 0
    assert tr.successes in (0, 1)  # 0 only if the doubling threshold fired


def test_proposals_come_from_live_regions(toy4):
    opt = MorboOptimizer(toy4, SMALL, seed=4).initialize()
    props = opt.propose_batch()
    assert len(props) == SMALL.q
    for p in props:
        assert p.tr_index in {tr.index for tr in opt.trust_regions}
        assert check_feasibility(toy4, p.x).feasible
