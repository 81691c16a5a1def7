import numpy as np
import pytest

from conftest import binary_enumeration, vertex_enumeration
from utils.config import MAX_SIMPLEX_ITERATIONS
from utils.errors import IterationLimitError, SolverInputError
from utils.solver import LpProblem, LpStatus, read_lp, solve_lp, solve_milp, write_lp


def test_zero_objective_is_optimal_at_zero():
    problem = LpProblem(c=[0.0], A=[[1.0]], senses=['<='], b=[1.0])
    result = solve_lp(problem)
    assert result.status == LpStatus.OPTIMAL
    assert result.objective == pytest.approx(0.0)


def test_covering_lp_with_upper_bounds():
    problem = LpProblem(c=[1.0, 1.0], A=[[1.0, 1.0]], senses=['>='], b=[2.0], upper=[3.0, 3.0])
    result = solve_lp(problem)
    assert result.is_optimal
    assert result.objective == pytest.approx(2.0)
    assert result.x.sum() == pytest.approx(2.0)
    assert np.all(result.x <= 3.0 + 1e-9)


def test_infeasible_lp():
    problem = LpProblem(c=[1.0], A=[[1.0], [1.0]], senses=['>=', '<='], b=[5.0, 2.0])
    assert solve_lp(problem).status == LpStatus.INFEASIBLE


def test_unbounded_lp():
    problem = LpProblem(c=[-1.0, 0.0], A=[[1.0, -1.0]], senses=['<='], b=[1.0])
    assert solve_lp(problem).status == LpStatus.UNBOUNDED


def test_equality_rows_and_shifted_lower_bounds():
    problem = LpProblem(
        c=[2.0, 3.0], A=[[1.0, 1.0], [2.0, 2.0]], senses=['=', '='], b=[4.0, 8.0],
        lower=[1.0, 0.5], upper=[np.inf, np.inf],
    )
    result = solve_lp(problem)
    assert result.is_optimal
    # second row duplicates the first and is dropped
    assert result.x == pytest.approx([3.5, 0.5])
    assert result.objective == pytest.approx(8.5)


def test_fixed_variables_are_substituted():
    problem = LpProblem(c=[1.0, 1.0], A=[[1.0, 1.0]], senses=['>='], b=[3.0], lower=[2.0, 0.0], upper=[2.0, 5.0])
    result = solve_lp(problem)
    assert result.x == pytest.approx([2.0, 1.0])


def test_dimension_mismatch():
    with pytest.raises(SolverInputError) as excinfo:
        solve_lp(LpProblem(c=[1.0, 1.0], A=[[1.0, 1.0]], senses=['<=', '<='], b=[1.0]))
    assert excinfo.value.code == 'DIMENSION_MISMATCH'

    with pytest.raises(SolverInputError):
        solve_lp(LpProblem(c=[1.0, 1.0], A=[[1.0, 1.0, 1.0]], senses=['<='], b=[1.0]))


def test_unknown_sense_rejected():
    with pytest.raises(SolverInputError):
        solve_lp(LpProblem(c=[1.0], A=[[1.0]], senses=['<'], b=[1.0]))


def test_iteration_limit():
    problem = LpProblem(c=[-1.0, -1.0], A=[[1.0, 2.0], [2.0, 1.0]], senses=['<=', '<='], b=[4.0, 4.0])
    with pytest.raises(IterationLimitError) as excinfo:
        solve_lp(problem, max_iterations=1)
    assert excinfo.value.code == 'ITERATION_LIMIT'


@pytest.mark.parametrize('seed', range(500))
def test_random_lp_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    m = int(rng.integers(1, 6))
    c = rng.integers(-5, 6, size=n).astype(float)
    A = rng.integers(-4, 5, size=(m, n)).astype(float)
    b = rng.integers(-5, 15, size=m).astype(float)
    senses = [str(s) for s in rng.choice(['<=', '>=', '='], size=m, p=[0.5, 0.3, 0.2])]
    lower, upper = np.zeros(n), np.full(n, 10.0)

    expected = vertex_enumeration(c, A, senses, b, lower, upper)
    result = solve_lp(LpProblem(c, A, senses, b, lower, upper))

    assert result.iterations < MAX_SIMPLEX_ITERATIONS
    if expected is None:
        assert result.status == LpStatus.INFEASIBLE
    else:
        assert result.is_optimal
        assert result.objective == pytest.approx(expected, abs=1e-7)


def test_knapsack_builds_the_larger_item():
    problem = LpProblem(c=[3.0, 5.0], A=[[2000.0, 4000.0]], senses=['>='], b=[3000.0], upper=[1.0, 1.0])
    result = solve_milp(problem, binaries=[0, 1])
    assert result.is_optimal
    assert result.x == pytest.approx([0.0, 1.0])
    assert result.objective == pytest.approx(5.0)


def test_milp_infeasible_root():
    problem = LpProblem(c=[1.0], A=[[1.0]], senses=['>='], b=[2.0], upper=[1.0])
    result = solve_milp(problem, binaries=[0])
    assert result.status == LpStatus.INFEASIBLE
    assert result.nodes_explored == 1


def test_milp_without_binaries_is_the_lp():
    problem = LpProblem(c=[1.0, 2.0], A=[[1.0, 1.0]], senses=['>='], b=[1.5])
    result = solve_milp(problem, binaries=[])
    assert result.objective == pytest.approx(1.5)
    assert result.nodes_explored == 1


def test_binary_bounds_checked():
    problem = LpProblem(c=[1.0], A=[[1.0]], senses=['<='], b=[5.0], upper=[4.0])
    with pytest.raises(SolverInputError):
        solve_milp(problem, binaries=[0])


@pytest.mark.parametrize('seed', range(20))
def test_branch_and_bound_matches_binary_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    n_bin, n_cont = int(rng.integers(1, 4)), int(rng.integers(1, 3))
    n = n_bin + n_cont
    m = int(rng.integers(1, 4))
    c = np.concatenate([rng.integers(1, 10, size=n_bin), rng.integers(-3, 4, size=n_cont)]).astype(float)
    A = rng.integers(-3, 6, size=(m, n)).astype(float)
    b = rng.integers(0, 12, size=m).astype(float)
    senses = [str(s) for s in rng.choice(['<=', '>='], size=m)]
    lower = np.zeros(n)
    upper = np.concatenate([np.ones(n_bin), np.full(n_cont, 5.0)])
    binaries = list(range(n_bin))

    expected = binary_enumeration(c, A, senses, b, lower, upper, binaries)
    result = solve_milp(LpProblem(c, A, senses, b, lower, upper), binaries)

    assert result.nodes_explored <= 2 ** (n_bin + 1) - 1
    if expected is None:
        assert result.status == LpStatus.INFEASIBLE
    else:
        assert result.is_optimal
        assert result.objective == pytest.approx(expected, abs=1e-6)
        assert np.allclose(result.x[binaries], np.round(result.x[binaries]), atol=1e-6)


def test_lp_text_round_trip_keeps_the_optimum():
    problem = LpProblem(
        c=[3.0, 5.0, -1.0], A=[[2000.0, 4000.0, 0.0], [0.0, 1.0, 1.0]], senses=['>=', '<='], b=[3000.0, 4.0],
        upper=[1.0, 1.0, 2.5], names=('b[x]', 'b[y]', 'f[u|e|0|+]'),
    )
    text = write_lp(problem, binaries=[0, 1], title='knapsack')
    assert text.startswith('\\ knapsack\nMinimize\n')
    assert 'Binary\n b_x_ b_y_\n' in text

    parsed, binaries = read_lp(text)
    assert sorted(parsed.names) == sorted(['b_x_', 'b_y_', 'f_u_e_0___'])
    assert [parsed.names[j] for j in binaries] == ['b_x_', 'b_y_']
    assert solve_milp(parsed, binaries).objective == pytest.approx(solve_milp(problem, [0, 1]).objective)
