import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isac_scaling.channel import FadingModel, PairGains, interference_layer_bound
from isac_scaling.netgen import generate_network
from isac_scaling.percolation import (
    ConfigurationError,
    DegeneratePartitionError,
    FadingGateParams,
    ParameterError,
    eta_max,
    extract_highways,
    gate_margin,
    lattice_dimension,
    lemma3_crossing_bound,
    mark_open_closed,
    mark_open_closed_fading,
    max_flow_crossings,
    open_probability,
    partition,
    prop1_path_count_bound,
    prop1_total_paths,
    threshold_feasible,
)
from isac_scaling.metrics import fit_scaling_slope
from isac_scaling.protocol import build_schedule
from oracles import augmenting_path_crossings


@pytest.fixture(scope="module")
def lat1e4():
    inst = generate_network(1e4, 5)
    return inst, extract_highways(mark_open_closed(partition(inst, 1.5, 0.0, 3.0)), 4.0)


def test_partition_reference_dimension():
    lat = partition(generate_network(1e4, 1), 1.0, 0.0, 3.0)
    assert lat.xi == pytest.approx(100 / np.sqrt(2))
    assert lat.side_length_s == pytest.approx(1.0)
    assert lat.side_length_sprime == pytest.approx(np.sqrt(2))


def test_partition_counts_sum_to_nodes(lat1e4):
    inst, lat = lat1e4
    assert lat.cell_count.sum() == inst.num_nodes
    assert sum(len(v) for v in lat.occupancy.values()) == inst.num_nodes


def test_every_node_lies_in_its_diamond(lat1e4):
    inst, lat = lat1e4
    c = lat.side_length_sprime
    k, l = lat.unflat(lat.node_cell)
    x, y = inst.nodes[:, 0], inst.nodes[:, 1]
    assert np.all(np.floor((x + y) / c) == k)
    assert np.all(np.floor((y - x) / c) == l)


def test_relay_is_nearest_node_in_cell(lat1e4):
    inst, lat = lat1e4
    rng = np.random.default_rng(0)
    cells = rng.choice(np.nonzero(lat.cell_count.ravel() > 0)[0], 200, replace=False)
    for cidx in cells:
        members = lat.nodes_in(cidx)
        d = np.linalg.norm(inst.nodes[members] - lat.cell_centre(cidx), axis=1)
        best = members[np.lexsort((members, d))[0]]
        assert lat.relay.ravel()[cidx] == best


def test_pure_tdm_flag_at_power_cap():
    inst = generate_network(1e4, 2)
    lat = partition(inst, 1.0, 1.5, 3.0)
    assert lat.pure_tdm and lat.L == 0
    assert partition(inst, 0.5, 1.5, 3.0).pure_tdm
    assert not partition(inst, 1.0, 1.0, 3.0).pure_tdm


def test_partition_errors():
    inst = generate_network(100, 2)
    with pytest.raises(ParameterError):
        partition(inst, 1.0, 1.6, 3.0)
    with pytest.raises(DegeneratePartitionError):
        partition(inst, 20.0, 0.0, 3.0)


def test_open_probability_reference():
    assert open_probability(1.0, 1.0, 3.0) == pytest.approx(1 - np.exp(-1), abs=1e-12)
    assert open_probability(1e-9, 1.0, 3.0) < 1e-15


def test_open_fraction_matches_formula_over_instances():
    fr = []
    for s in range(100):
        lat = mark_open_closed(partition(generate_network(1e4, 100 + s), 1.0, 0.0, 3.0))
        fr.append(lat.open_cells[lat.cell_inside].mean())
    assert abs(np.mean(fr) - open_probability(1.0, 1.0, 3.0)) <= 0.01


def test_open_fraction_single_large_instance():
    lat = mark_open_closed(partition(generate_network(1e5, 3), 1.0, 0.0, 3.0))
    assert abs(lat.open_cells[lat.cell_inside].mean() - open_probability(1.0, 1.0, 3.0)) <= 0.01


def test_open_means_occupied(lat1e4):
    _, lat = lat1e4
    assert not np.any(lat.open_cells & (lat.cell_count == 0))
    assert not np.any(lat.open_cells & ~lat.cell_inside)


def test_max_flow_matches_oracle_on_random_lattices():
    rng = np.random.default_rng(2024)
    for t in range(100):
        La, R = rng.integers(1, 21, size=2)
        p = rng.uniform(0.3, 0.9)
        along = rng.random((La, R)) < p
        cross = rng.random((La + 1, max(R - 1, 0))) < p
        count, _ = max_flow_crossings(along, cross)
        assert count == augmenting_path_crossings(along, cross), (t, La, R, p)


def test_full_and_empty_rectangles():
    assert max_flow_crossings(np.ones((30, 7), bool), np.ones((31, 6), bool))[0] == 7
    assert max_flow_crossings(np.zeros((30, 7), bool), np.zeros((31, 6), bool))[0] == 0


def _check_paths(along, cross, count, paths):
    La, R = along.shape
    assert len(paths) == count
    used = set()
    for p in paths:
        assert p[0][0] == 0 and p[-1][0] == La
        for (a1, r1), (a2, r2) in zip(p[:-1], p[1:]):
            if r1 == r2:
                assert abs(a1 - a2) == 1 and along[min(a1, a2), r1]
            else:
                assert a1 == a2 and abs(r1 - r2) == 1 and cross[a1, min(r1, r2)]
            e = frozenset([(a1, r1), (a2, r2)])
            assert e not in used
            used.add(e)


@given(
    La=st.integers(1, 15),
    R=st.integers(1, 10),
    p=st.floats(0.2, 1.0),
    seed=st.integers(0, 2**32 - 1),
)
@settings(max_examples=80, deadline=None)
def test_menger_consistency(La, R, p, seed):
    rng = np.random.default_rng(seed)
    along = rng.random((La, R)) < p
    cross = rng.random((La + 1, R - 1)) < p
    count, paths = max_flow_crossings(along, cross)
    _check_paths(along, cross, count, paths)


@given(
    La=st.integers(1, 12),
    R=st.integers(2, 8),
    p=st.floats(0.2, 0.9),
    seed=st.integers(0, 2**32 - 1),
    flip=st.integers(0, 10**6),
)
@settings(max_examples=60, deadline=None)
def test_opening_an_edge_never_reduces_crossings(La, R, p, seed, flip):
    rng = np.random.default_rng(seed)
    along = rng.random((La, R)) < p
    cross = rng.random((La + 1, R - 1)) < p
    before = max_flow_crossings(along, cross, want_paths=False)[0]
    flat = np.concatenate([along.ravel(), cross.ravel()])
    flat[flip % flat.size] = True
    a2 = flat[: along.size].reshape(along.shape)
    c2 = flat[along.size :].reshape(cross.shape)
    assert max_flow_crossings(a2, c2, want_paths=False)[0] >= before


def test_highways_cross_and_use_open_cells(lat1e4):
    inst, lat = lat1e4
    openf = lat.open_cells.ravel()
    assert lat.highways
    for hw in lat.highways:
        assert np.all(openf[hw.cells])
        assert np.all(lat.node_cell[hw.relays] == hw.cells)
        i, j = np.divmod(hw.verts, lat.L + 1)
        coord = i if hw.system == "h" else j
        assert coord[0] == 0 and coord[-1] == lat.L
    for r in lat.rectangles:
        assert r.crossings == len(r.paths)
        cells = np.concatenate([lat.highways[p].cells for p in r.paths]) if r.paths else np.zeros(0)
        assert len(np.unique(cells)) == len(cells)  # cells carry one bond each: edge-disjoint


def test_rectangle_heights(lat1e4):
    _, lat = lat1e4
    h = int(np.floor(4.0 * np.log(lat.xi)))
    assert lat.rect_height == h
    for r in lat.rectangles:
        assert (r.rows[1] - r.rows[0] == h) == r.full
        assert r.rows[1] - r.rows[0] <= h


def test_extract_needs_marking_and_height():
    lat = partition(generate_network(1e4, 1), 1.0, 0.0, 3.0)
    with pytest.raises(ConfigurationError):
        extract_highways(lat, 2.0)
    with pytest.raises(ConfigurationError):
        extract_highways(mark_open_closed(lat), 0.1)


def test_fading_gate_vacuous_reproduces_plain_lattice():
    inst = generate_network(1e4, 8)
    lat = partition(inst, 1.5, 0.0, 3.0)
    plain = mark_open_closed(lat)
    gains = PairGains(FadingModel("exponential"), 99)
    sched = build_schedule(lat, 4)
    faded = mark_open_closed_fading(lat, gains, FadingGateParams(0.0, np.inf), sched)
    assert np.array_equal(plain.open_cells, faded.open_cells)


def test_gain_pass_probability_exponential():
    assert float(FadingModel("exponential").ccdf(0.1)) == pytest.approx(np.exp(-0.1))
    assert np.exp(-0.1) == pytest.approx(0.9048, abs=1e-4)


def test_fading_open_fraction_lower_bound():
    vs, M, ac = 1.0, 4, 3.0
    gate = FadingGateParams(0.05, 100 * interference_layer_bound(vs, M, ac))
    fm = FadingModel("exponential")
    fr = []
    for s in range(5):
        inst = generate_network(4e4, 40 + s)
        lat = partition(inst, vs, 0.0, ac)
        out = mark_open_closed_fading(lat, PairGains(fm, s), gate, build_schedule(lat, M), P=1.0)
        fr.append(out.open_cells[lat.cell_inside].mean())
    lhs, _ = gate_margin(gate, vs, M, ac, fm)
    assert np.mean(fr) >= open_probability(vs, 1.0, ac) * lhs - 0.02


def test_feasibility_threshold_reference():
    _, rhs = gate_margin(FadingGateParams(0.01, 1.0), 1.0, 4, 3.0, FadingModel("exponential"))
    assert rhs == pytest.approx((1 - 2 * np.exp(-1)) / (1 - np.exp(-1)) ** 2)
    assert rhs == pytest.approx(0.6614, abs=1e-4)


def test_feasibility_examples():
    fm = FadingModel("exponential")
    C = interference_layer_bound(1.0, 4, 4.0)
    assert C == pytest.approx(0.517, abs=1e-3)
    assert threshold_feasible(FadingGateParams(0.05, 100 * C), 1.0, 4, 4.0, fm)
    assert threshold_feasible(FadingGateParams(1e-12, 1e12), 1.0, 4, 4.0, fm)
    assert not threshold_feasible(FadingGateParams(0.5, 100 * C), 1.0, 4, 4.0, fm)


def test_infeasible_gate_raises():
    lat = partition(generate_network(1e3, 1), 1.0, 0.0, 3.0)
    with pytest.raises(ConfigurationError):
        mark_open_closed_fading(lat, PairGains(FadingModel("exponential"), 1), FadingGateParams(0.9, 1.0),
                                build_schedule(lat, 4))


def test_prop1_reference_value():
    v = prop1_path_count_bound(1e6, 1.0, 0.0, 3.0, 2.0, 0.5, check_eta=False)
    assert v == pytest.approx(0.5 * 2 * np.log(1000 / np.sqrt(2)))
    assert v == pytest.approx(6.561, abs=1e-3)
    # the same eta lies outside the admissible range at varsigma = 1
    with pytest.raises(ParameterError):
        prop1_path_count_bound(1e6, 1.0, 0.0, 3.0, 2.0, 0.5)


def test_prop1_at_eta_max_below_height():
    for n in (1e4, 1e6, 1e8):
        top = eta_max(n, 2.0, 0.0, 3.0, 2.0)
        assert 0 < top < 1
        xi = lattice_dimension(n, 2.0, 0.0, 3.0)
        assert prop1_path_count_bound(n, 2.0, 0.0, 3.0, 2.0, top) <= 2.0 * np.log(xi)


def test_prop1_total_paths_slope():
    pts = [(n, prop1_total_paths(n, 1.0, 0.0, 3.0, 0.5)) for n in (1e4, 4e4, 1.6e5, 6.4e5, 1e6)]
    slope, _ = fit_scaling_slope(pts)
    assert abs(slope - 0.5) <= 0.02


def test_prop1_count_in_monte_carlo_rectangles():
    # P_o = 0.95, 200 x 10 rectangle; kappa chosen so that floor(kappa log xi) = 10
    xi, rows = 200, 10
    kappa = rows / np.log(xi)
    vs = np.sqrt(-np.log(0.05))
    eta = eta_max(2 * xi**2 * vs**2, vs, 0.0, 3.0, kappa)
    assert eta > 0
    need = eta * kappa * np.log(xi)
    rng = np.random.default_rng(7)
    ok = 0
    for _ in range(500):
        along = rng.random((xi, rows)) < 0.95
        cross = rng.random((xi + 1, rows - 1)) < 0.95
        ok += max_flow_crossings(along, cross, want_paths=False)[0] >= need
    assert ok / 500 >= 0.95


def test_lemma3_bound_dominates_monte_carlo():
    p, q, eta, L1, L2 = 0.99, 0.9, 0.3, 100, 10
    bound = lemma3_crossing_bound(L1, L2, p, q, eta)
    expected = 4 / 3 * L1 * (p / (p - q)) ** (eta * L2) * (3 * (1 - q)) ** L2
    assert bound == pytest.approx(expected)
    rng = np.random.default_rng(3)
    trials, fails = 10_000, 0
    for _ in range(trials):
        along = rng.random((L1, L2)) < p
        cross = rng.random((L1 + 1, L2 - 1)) < p
        fails += max_flow_crossings(along, cross, want_paths=False)[0] < eta * L2
    assert fails / trials <= bound


def test_lemma3_domain_and_limits():
    with pytest.raises(ParameterError):
        lemma3_crossing_bound(10, 5, 0.5, 0.5, 0.3)
    assert lemma3_crossing_bound(10, 5, 0.9, 0.9 - 1e-9, 0.5) > 1e10
    # decays in L2 only when 3 (1 - q) < 1
    a = [lemma3_crossing_bound(10, L2, 0.99, 0.8, 0.1) for L2 in (10, 20, 40)]
    assert a[0] > a[1] > a[2]
    b = [lemma3_crossing_bound(10, L2, 0.99, 0.5, 0.1) for L2 in (10, 20, 40)]
    assert b[0] < b[1] < b[2]
