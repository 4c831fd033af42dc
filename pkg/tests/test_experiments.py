from itertools import product

import numpy as np
import pytest

from infocut.diffusion import PriorKind, build_kernel, make_prior
from infocut.errors import DegenerateInit, DisconnectedStart, InfocutError, SizeMismatch
from infocut.experiments import (
    CutObjective,
    MoveKind,
    apply_move,
    binned_spread,
    bisections_equal,
    coordinate_descent_cut,
    collapse_stats,
    coordinate_descent_info,
    estar_local_search,
    matching_objective,
    run_comparison,
    scatter_points,
    _candidate_moves,
)
from infocut.graph import SbmSpec, build_graph, is_connected, sample_connected_sbm, solve_sbm_spec
from infocut.mixing import TimeGrid, fast_mixing_stats
from infocut.partition import Bisection, average_cut, normalized_cut
from oracles import k4, two_triangles

SPLIT6 = Bisection.from_labels([0, 0, 0, 1, 1, 1])


def all_bisections(n):
    for bits in product([0, 1], repeat=n):
        if 0 < sum(bits) < n and bits[0] == 0:
            yield Bisection.from_labels(bits)


def test_bisections_equal():
    b = Bisection([1, -1, 1, -1])
    assert bisections_equal(b, b)
    assert bisections_equal(b, Bisection(-b.h))
    assert not bisections_equal(b, b.flip(0))
    with pytest.raises(SizeMismatch):
        bisections_equal(b, Bisection([1, -1]))


@pytest.mark.parametrize("objective", list(CutObjective))
def test_cut_descent_finds_components(objective):
    g = two_triangles()
    init = Bisection.from_labels([0, 0, 1, 0, 1, 1])
    out = coordinate_descent_cut(g, init, objective)
    assert bisections_equal(out, SPLIT6)
    # exhaustive check that this is the global optimum
    best = min(average_cut(g, b.to_partition()) for b in all_bisections(6))
    assert best == average_cut(g, out.to_partition()) == 0


def test_cut_descent_fixed_points():
    assert coordinate_descent_cut(two_triangles(), SPLIT6, "average") == SPLIT6
    b = Bisection.from_labels([0, 0, 1, 1])
    assert coordinate_descent_cut(k4(), b, "normalized") == b
    # every equal split of K4 has the same objective
    vals = {round(normalized_cut(k4(), c.to_partition()), 12) for c in all_bisections(4) if c.h.sum() == 0}
    assert len(vals) == 1


def test_cut_descent_bad_init():
    with pytest.raises(DegenerateInit):
        coordinate_descent_cut(k4(), Bisection(np.ones(4)), "average")
    with pytest.raises(SizeMismatch):
        coordinate_descent_cut(k4(), Bisection([1, -1]), "average")


def test_cut_descent_incremental_objective_matches_direct():
    rng = np.random.default_rng(0)
    for seed in range(5):
        spec = solve_sbm_spec(12, 0.15, seed=seed)
        g, _ = sample_connected_sbm(spec)
        labels = rng.integers(0, 2, 12)
        labels[:2] = [0, 1]
        out = coordinate_descent_cut(g, Bisection.from_labels(labels), "normalized")
        cur = normalized_cut(g, out.to_partition())
        for x in range(12):
            f = out.flip(x)
            if not f.is_one_sided():
                assert normalized_cut(g, f.to_partition()) >= cur - 1e-12


@pytest.mark.parametrize("t", [0.05, 0.5, 5.0])
def test_info_descent_finds_components(t):
    g = two_triangles()
    k = build_kernel(g, make_prior(g, "uniform"), allow_disconnected=True)
    out = coordinate_descent_info(k, Bisection.from_labels([0, 0, 1, 0, 1, 1]), t)
    assert bisections_equal(out, SPLIT6)
    assert coordinate_descent_info(k, SPLIT6, t) == SPLIT6


def test_info_descent_agrees_with_cut_on_small_sbm():
    agree = 0
    for seed in range(50):
        spec = solve_sbm_spec(8, 0.02, seed=seed)
        g, _ = sample_connected_sbm(spec)
        k = build_kernel(g, make_prior(g, "degree"))
        b = Bisection.from_labels(spec.block_assignment)
        t = fast_mixing_stats(k, b).tstar_minus * k.tau
        agree += bisections_equal(coordinate_descent_cut(g, b, "normalized"), coordinate_descent_info(k, b, t))
    assert agree >= 45


def test_info_descent_sense_flag():
    spec = solve_sbm_spec(8, 0.05, seed=1)
    g, _ = sample_connected_sbm(spec)
    k = build_kernel(g, make_prior(g, "degree"))
    b = Bisection.from_labels(spec.block_assignment)
    from infocut.info import relevance_information, joint_yz

    def info(x):
        return relevance_information(joint_yz(k, x.to_partition(), k.tau))

    assert info(coordinate_descent_info(k, b, k.tau)) >= info(b)
    assert info(coordinate_descent_info(k, b, k.tau, maximize=False)) <= info(b)


def test_matching_objective():
    assert matching_objective("uniform") is CutObjective.AVERAGE
    assert matching_objective(PriorKind.DEGREE) is CutObjective.NORMALIZED


# --- E* local search --------------------------------------------------------

COARSE = TimeGrid.parse("log:1e-3:1e2:40")


def _brute_estar(g, b, kind, grid):
    if not is_connected(g) or b.is_one_sided():
        return None
    try:
        return fast_mixing_stats(build_kernel(g, make_prior(g, kind)), b, grid).estar
    except InfocutError:
        return None


@pytest.mark.parametrize("kind", list(PriorKind))
def test_search_steps_match_exhaustive_neighbourhood(kind):
    spec = solve_sbm_spec(8, 0.05, seed=4)
    g, _ = sample_connected_sbm(spec)
    b = Bisection.from_labels(spec.block_assignment)
    result = estar_local_search(g, b, kind, COARSE)
    _, moves = _candidate_moves(8)
    cur_g, cur_b = g, b
    cur = _brute_estar(g, b, kind, COARSE)
    assert result.initial_estar == pytest.approx(cur, rel=1e-10)
    for step in result.steps + [None]:
        scores = [_brute_estar(*apply_move(cur_g, cur_b, m), kind, COARSE) for m in moves]
        improving = [(s, i) for i, s in enumerate(scores) if s is not None and s < cur - 1e-9]
        if step is None:
            assert not improving
            break
        best_score, best_i = min(improving)
        assert step.estar == pytest.approx(best_score, rel=1e-9)
        assert scores[moves.index(step.move)] == pytest.approx(best_score, rel=1e-9)
        cur_g, cur_b = apply_move(cur_g, cur_b, step.move)
        cur = step.estar
    assert cur_g == result.final_graph and cur_b == result.final_bisection


def test_search_descends_and_stops_at_local_minimum():
    spec = solve_sbm_spec(16, 0.02, seed=0)
    g, _ = sample_connected_sbm(spec)
    b = Bisection.from_labels(spec.block_assignment)
    r = estar_local_search(g, b, "degree")
    assert r.estar <= r.initial_estar
    assert all(s.delta < 0 for s in r.steps)
    assert {s.move.kind for s in r.steps} <= set(MoveKind)
    again = estar_local_search(r.final_graph, r.final_bisection, "degree")
    assert again.steps == [] and again.estar == pytest.approx(r.estar, rel=1e-12)

    traj = r.trajectory()
    assert traj.shape == (len(r.steps) + 1, 4)
    assert traj[0, 0] == r.initial_estar and traj[-1, 0] == r.estar
    assert np.all(np.diff(traj[:, 0]) < 0)
    pts = scatter_points([r])
    assert pts.shape == (2 * len(traj), 3)
    assert np.allclose(pts[:, 2], pts[:, 1] * np.repeat(traj[:, 3], 2))
    last = scatter_points([r], visited=False)
    assert last[:, 0].tolist() == [r.estar, r.estar]
    assert last[:, 1].tolist() == [r.tstar_minus, r.tstar_plus]


def test_search_is_reproducible():
    spec = solve_sbm_spec(16, 0.02, seed=1)
    g, _ = sample_connected_sbm(spec)
    b = Bisection.from_labels(spec.block_assignment)
    a = estar_local_search(g, b, "uniform")
    c = estar_local_search(g, b, "uniform")
    assert a.steps == c.steps and a.estar == c.estar and a.final_graph == c.final_graph


def test_search_rejects_disconnected_start():
    g = build_graph(4, [(0, 1), (2, 3)])
    with pytest.raises(DisconnectedStart):
        estar_local_search(g, Bisection([1, 1, -1, -1]), "uniform")


# --- comparison ------------------------------------------------------------

SMALL = TimeGrid.parse("log:1e-2:1e1:6")


def test_comparison_fully_modular_is_zero():
    res = run_comparison(solve_sbm_spec(16, 0.0, seed=0), 10, SMALL)
    assert np.array_equal(res.disagreement, np.zeros(SMALL.count))
    hand = run_comparison(SbmSpec(n=8, p_minus=0.0, p_plus=1.0, seed=0), 5, SMALL, prior="uniform")
    assert np.array_equal(hand.disagreement, np.zeros(SMALL.count))


def test_comparison_is_deterministic():
    spec = solve_sbm_spec(12, 0.12, seed=3)
    a = run_comparison(spec, 6, SMALL)
    b = run_comparison(spec, 6, SMALL)
    assert np.array_equal(a.disagreement, b.disagreement)
    assert a.seeds == [3, 4, 5, 6, 7, 8]
    assert np.all((a.disagreement >= 0) & (a.disagreement <= 1))
    assert np.allclose(a.stderr, np.sqrt(a.disagreement * (1 - a.disagreement) / 6))


def test_binned_spread():
    x = np.array([1.0, 1.1, 10.0, 11.0, 100.0])
    y = np.array([1.0, 3.0, 5.0, 5.0, 9.0])
    # bins [0, 0.5), [0.5, 1.5), [1.5, 2.5): spreads 1 and 0 with two points each, singleton skipped
    assert binned_spread(x, y, np.array([0.5, 1.5])) == pytest.approx(0.5)
    assert np.isnan(binned_spread(x[:1], y[:1], np.array([0.5])))


def test_collapse_stats_separates_normalized_from_absolute_time():
    rng = np.random.default_rng(3)
    groups = {}
    for n, tau in ((16, 1.0), (32, 0.1)):
        tt = 10 ** rng.uniform(-2, 0, 400)
        estar = 0.2 * (1 + np.log10(tt) / 2) + 0.005 * rng.standard_normal(400)
        groups[n] = np.column_stack([estar, tt, tt * tau])
    stats = collapse_stats(groups)
    # one curve in t_tilde; a decade apart in t
    assert stats.normalized_ratio == pytest.approx(1.0, abs=0.1)
    assert stats.absolute_ratio > 1.5 * stats.normalized_ratio
    assert stats.normalized_bins == 8 and stats.absolute_bins == 4


def test_collapse_stats_ignores_sizes_in_disjoint_time_ranges():
    a = np.column_stack([np.zeros(4), [0.01, 0.011, 0.012, 0.013], np.ones(4)])
    b = np.column_stack([np.ones(4), [1.0, 1.1, 1.2, 1.3], np.ones(4)])
    stats = collapse_stats({16: a, 32: b})
    assert np.isnan(stats.normalized_ratio) and stats.normalized_bins == 0


def test_collapse_stats_needs_two_sizes():
    with pytest.raises(InfocutError):
        collapse_stats({16: np.ones((4, 3))})
