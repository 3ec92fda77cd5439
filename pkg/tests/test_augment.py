import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsaug import SnapshotSet, SolveCounter, build_basis
from nsaug.augment import (
    DEFAULT_ALPHAS,
    AugmentConfig,
    augment_dataset,
    divergence_ratio,
    geometric_average,
    linear_combination,
    oseen_enhance,
    pair_snapshots,
    stream_function,
    stream_pin_node,
    velocity_from_stream,
)
from nsaug.errors import ConfigError, DegenerateSet, DimensionMismatch
from nsaug.fem import to_vector
from nsaug.pod import ARTIFICIAL, FULLORDER


def test_pairs_one_dimensional():
    assert pair_snapshots([0.0, 1.0]).pairs == ((0, 1),)
    assert pair_snapshots([0.0, 0.5, 1.0]).pairs == ((0, 1), (1, 2))
    # neighbours follow the sorted order, not the input order
    assert pair_snapshots([2.0, 0.0, 1.0]).pairs == ((0, 2), (1, 2))


def test_pairs_two_dimensional_layouts():
    corners = [[0, 0], [1, 0], [0, 1], [1, 1]]
    assert pair_snapshots(corners).pairs == ((0, 1), (0, 2), (1, 3), (2, 3))
    five = corners + [[0.5, 0.5]]
    assert len(pair_snapshots(five)) == 6
    # units do not matter once the box is normalised
    scaled = [[5, 0], [30, 0], [5, 4], [30, 4], [17.5, 2]]
    assert pair_snapshots(scaled, box=[[5, 30], [0, 4]]).pairs == pair_snapshots(five).pairs


def test_pairs_constant_axis_is_ignored():
    assert pair_snapshots([[0.0, 3.0], [1.0, 3.0], [2.0, 3.0]]).pairs == ((0, 1), (1, 2))


def test_pairs_degenerate():
    with pytest.raises(DegenerateSet):
        pair_snapshots([[1.0]])
    with pytest.raises(DegenerateSet):
        pair_snapshots([[1.0, 2.0], [1.0, 2.0]])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30), st.floats(1e-3, 1e3), st.floats(-100, 100), st.randoms(use_true_random=False))
def test_uniform_grid_pairs_form_a_chain(n, h, x0, rnd):
    xs = x0 + h * np.arange(n)
    order = list(range(n))
    rnd.shuffle(order)
    xs = xs[order]
    pairs = pair_snapshots(xs).pairs
    assert len(pairs) == n - 1
    rank = np.argsort(np.argsort(xs))
    assert all(abs(rank[i] - rank[j]) == 1 for i, j in pairs)


def test_round_off_spacing_still_forms_a_chain():
    # 8 + k * 1e-3 is not exactly uniform in floating point
    assert pair_snapshots(8.0 + 1e-3 * np.arange(4)).pairs == ((0, 1), (1, 2), (2, 3))


def test_irregular_one_dimensional_spacing():
    # nearest neighbours only: two separate clusters give two pairs
    assert pair_snapshots([0.0, 1.0, 3.0, 4.0]).pairs == ((0, 1), (2, 3))


@settings(max_examples=30, deadline=None)
@given(st.permutations(range(5)))
def test_pairs_do_not_depend_on_input_order(perm):
    pts = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5]], float)
    ref = {frozenset(map(tuple, pts[list(p)])) for p in pair_snapshots(pts).pairs}
    q = pts[list(perm)]
    got = {frozenset(map(tuple, q[list(p)])) for p in pair_snapshots(q).pairs}
    assert got == ref


def test_geometric_average_examples():
    a = np.array([-2.0, 0.0, 3.0])
    b = np.array([1.0, 5.0, 2.0])
    np.testing.assert_allclose(geometric_average(a, b, 1.0), a + 3.0)
    np.testing.assert_allclose(geometric_average(a, b, 0.0), b)
    np.testing.assert_allclose(geometric_average(a, a, 0.3), a + 3.0)
    np.testing.assert_allclose(geometric_average(a, b, 0.5, floor=4.0), np.sqrt((a + 6.0) * (b + 3.0)))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-50, 50), min_size=3, max_size=10),
    st.lists(st.floats(-50, 50), min_size=3, max_size=10),
    st.floats(0, 1),
    st.floats(0.1, 10),
)
def test_geometric_average_log_identity(a, b, alpha, floor):
    n = min(len(a), len(b))
    a, b = np.array(a[:n]), np.array(b[:n])
    g = geometric_average(a, b, alpha, floor)
    sa, sb = a - a.min() + floor, b - b.min() + floor
    assert np.all(g > 0)
    np.testing.assert_allclose(np.log(g), alpha * np.log(sa) + (1 - alpha) * np.log(sb), rtol=1e-12, atol=1e-12)
    assert np.all(g >= np.minimum(sa, sb) * (1 - 1e-12)) and np.all(g <= np.maximum(sa, sb) * (1 + 1e-12))


def test_stream_function_examples(box_problem):
    X, Y = box_problem.V.dof_coords.T
    pin = stream_pin_node(box_problem.mesh)
    c = SolveCounter()
    psi = stream_function(box_problem, to_vector(1.0 + 0 * X, 0 * X), c)
    np.testing.assert_allclose(psi, Y - Y[pin], atol=1e-12)
    psi = stream_function(box_problem, to_vector(Y, -X), c)
    np.testing.assert_allclose(psi, 0.5 * (X**2 + Y**2) - 0.5 * (X[pin] ** 2 + Y[pin] ** 2), atol=1e-12)
    psi = stream_function(box_problem, to_vector(-Y, X), c)
    np.testing.assert_allclose(psi, -0.5 * (X**2 + Y**2) + 0.5 * (X[pin] ** 2 + Y[pin] ** 2), atol=1e-12)
    assert not np.any(stream_function(box_problem, np.zeros(box_problem.fe.nu_dofs)))
    assert c.poisson == 3
    with pytest.raises(DimensionMismatch):
        stream_function(box_problem, np.zeros(7))


def test_velocity_from_stream_examples(box_problem):
    X, Y = box_problem.V.dof_coords.T
    c = SolveCounter()
    np.testing.assert_allclose(velocity_from_stream(box_problem, Y, c), to_vector(1 + 0 * X, 0 * X), atol=1e-12)
    u = velocity_from_stream(box_problem, 0.5 * (X**2 + Y**2), c)
    np.testing.assert_allclose(u, to_vector(Y, -X), atol=1e-12)
    assert divergence_ratio(box_problem, u) < 1e-12
    assert c.projection == 2


def test_stream_round_trip_on_snapshot(box_problem, box_solutions):
    u = box_solutions[1][3].velocity
    psi = stream_function(box_problem, u)
    v = velocity_from_stream(box_problem, psi)
    # the rotated gradient of a P2 function is only piecewise linear: agreement is up to discretisation
    assert np.linalg.norm(v - u) <= 0.1 * np.linalg.norm(u)
    assert divergence_ratio(box_problem, v) <= 1e-3


def test_linear_combination_examples():
    a, b = np.array([1.0, 2.0]), np.array([3.0, -2.0])
    np.testing.assert_allclose(linear_combination(a, b, 0.25), [2.5, -1.0])
    np.testing.assert_allclose(linear_combination(a, b, 1.0), a)
    np.testing.assert_allclose(linear_combination(a, a, 0.7), a)


def test_oseen_enhance_fixed_point_and_zero(box_problem, box_solutions):
    pts, sols = box_solutions
    u = oseen_enhance(box_problem, sols[3].velocity, pts[3], pts[0], 1.0)
    assert np.linalg.norm(u - sols[3].velocity) <= 1e-8 * np.linalg.norm(sols[3].velocity)
    # zero convective field and zero-jet data at mu_eff = (1, 0): a plain Stokes lid flow
    u0 = oseen_enhance(box_problem, np.zeros(box_problem.fe.nu_dofs), [0.5, 0.0], [2.0, 0.0], 2 / 3)
    assert divergence_ratio(box_problem, u0) < 1e-12


def test_config_validation():
    assert AugmentConfig().alphas == DEFAULT_ALPHAS
    for bad in ({"strategy": "cubic"}, {"alphas": (0.0, 0.5)}, {"alphas": (0.5, 1.0)}, {"alphas": (0.2, 0.2)}):
        with pytest.raises(ConfigError):
            AugmentConfig(**bad)


def _snapshots(pts, sols):
    return SnapshotSet("velocity", np.column_stack([s.velocity for s in sols]), pts)


@pytest.mark.parametrize("strategy", ["solenoidal", "solenoidal_oseen", "linear_oseen"])
def test_augment_two_snapshots_gives_eleven(box_problem, box_solutions, strategy):
    pts, sols = box_solutions
    c = SolveCounter()
    aug = augment_dataset(_snapshots(pts[:2], sols[:2]), box_problem, AugmentConfig(strategy), c)
    assert aug.n_snapshots == 11
    assert aug.origin == [FULLORDER] * 2 + [ARTIFICIAL] * 9
    np.testing.assert_allclose(aug.parameters[2:, 0], 0.5 * np.array(DEFAULT_ALPHAS) + 2.0 * (1 - np.array(DEFAULT_ALPHAS)))
    n_oseen = 0 if strategy == "solenoidal" else 9
    n_stream = 0 if strategy == "linear_oseen" else 9
    assert c.oseen == n_oseen and c.projection == n_stream
    assert c.poisson == (0 if strategy == "linear_oseen" else 2)
    assert c.newton == c.stokes == c.picard == 0
    limit = 1e-3 if strategy == "solenoidal" else 1e-8
    assert max(divergence_ratio(box_problem, aug.data[:, k]) for k in range(2, 11)) <= limit


def test_augment_five_snapshots_gives_fifty_nine(box_problem, box_solutions):
    pts, sols = box_solutions
    c = SolveCounter()
    aug = augment_dataset(_snapshots(pts, sols), box_problem, AugmentConfig("linear_oseen"), c)
    assert aug.n_snapshots == 59 and c.oseen == 54


def test_augment_is_deterministic_and_grows_the_basis(box_problem, box_solutions):
    pts, sols = box_solutions
    S = _snapshots(pts[:2], sols[:2])
    cfg = AugmentConfig("solenoidal_oseen", (0.25, 0.5, 0.75))
    a = augment_dataset(S, box_problem, cfg)
    b = augment_dataset(S, box_problem, cfg)
    np.testing.assert_array_equal(a.data, b.data)
    assert build_basis(a, 1e-3).n > build_basis(S, 1e-3).n


def test_augment_edge_cases(box_problem, box_solutions):
    pts, sols = box_solutions
    S = _snapshots(pts[:2], sols[:2])
    assert augment_dataset(S, box_problem, AugmentConfig("linear_oseen", ())).n_snapshots == 2
    with pytest.raises(DegenerateSet):
        augment_dataset(S.subset([0]), box_problem, AugmentConfig())
    P = SnapshotSet("pressure", np.column_stack([s.pressure for s in sols[:2]]), pts[:2])
    with pytest.raises(ConfigError):
        augment_dataset(P, box_problem, AugmentConfig())
