from __future__ import annotations

import numpy as np
import pytest

from poiseuille2d import ConvergenceError, NewtonDivergenceError, ParameterError
from poiseuille2d.newton import (
    BroydenJacobian,
    NewtonOptions,
    finite_difference_jacobian,
    newton_solve,
)


def square_root_system(x):
    return np.array([x[0] ** 2 - 2.0, x[1] - x[0]])


def test_newton_with_finite_differences():
    result = newton_solve(square_root_system, np.array([1.0, 1.0]))
    np.testing.assert_allclose(result.x, [np.sqrt(2.0)] * 2, rtol=1e-10)
    assert result.residual <= 1e-10
    assert result.jacobian_evaluations >= 1


def test_newton_with_analytic_jacobian():
    def jacobian(x):
        return np.array([[2.0 * x[0], 0.0], [-1.0, 1.0]])

    options = NewtonOptions(tol=1e-12, broyden=False)
    x0 = np.array([3.0, 0.0])
    result = newton_solve(square_root_system, x0, jacobian=jacobian, options=options)
    np.testing.assert_allclose(result.x, [np.sqrt(2.0)] * 2, rtol=1e-12)
    assert result.jacobian_evaluations == result.iterations + 1


def test_converged_guess_takes_no_step():
    x = np.array([np.sqrt(2.0)] * 2)
    result = newton_solve(square_root_system, x, options=NewtonOptions(tol=1e-12))
    assert result.iterations == 0


def test_newton_without_root():
    with pytest.raises(ConvergenceError):
        newton_solve(lambda x: x**2 + 1.0, np.array([0.5]))


def test_newton_iteration_cap():
    options = NewtonOptions(tol=1e-14, max_iter=1)
    with pytest.raises(ConvergenceError) as info:
        newton_solve(square_root_system, np.array([10.0, 0.0]), options=options)
    assert info.value.residual is not None


def test_non_finite_initial_residual():
    with pytest.raises(NewtonDivergenceError):
        newton_solve(lambda x: x + np.inf, np.array([1.0]))


def scripted_residual(norms):
    values = iter(norms)
    return lambda x: np.array([next(values)])


@pytest.mark.parametrize(
    ('norms', 'diverges'),
    [
        ([1.0, 2.0, 3.0, 0.5, 0.8, 0.9, 1e-12], False),
        ([1.0, 2.0, 3.0, 4.0], True),
    ],
)
def test_only_consecutive_growths_diverge(norms, diverges):
    options = NewtonOptions(max_halvings=0, broyden=False)
    f = scripted_residual(norms)
    x0 = np.array([0.0])
    if diverges:
        with pytest.raises(NewtonDivergenceError, match='grew 3 times'):
            newton_solve(f, x0, jacobian=lambda x: np.eye(1), options=options)
    else:
        result = newton_solve(f, x0, jacobian=lambda x: np.eye(1), options=options)
        assert result.iterations == len(norms) - 1
        assert result.residual == 1e-12


def test_broyden_update_is_secant(rng):
    A = rng.standard_normal((4, 4)) + 4.0 * np.eye(4)
    factor = BroydenJacobian(A)
    dx = rng.standard_normal(4)
    df = rng.standard_normal(4)
    factor.update(dx, df)
    np.testing.assert_allclose(factor.matrix @ dx, df, atol=1e-12)
    assert factor.updates == 1
    b = rng.standard_normal(4)
    np.testing.assert_allclose(factor.matrix @ factor.solve(b), b, atol=1e-10)


def test_broyden_ignores_empty_step():
    factor = BroydenJacobian(np.eye(2))
    factor.update(np.zeros(2), np.ones(2))
    assert factor.updates == 0


def test_broyden_needs_square_matrix():
    with pytest.raises(ParameterError):
        BroydenJacobian(np.ones((2, 3)))


def test_singular_jacobian():
    factor = BroydenJacobian(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(ConvergenceError):
        factor.solve(np.ones(2))


def test_finite_differences_of_linear_map(rng):
    A = rng.standard_normal((3, 5))
    x = rng.standard_normal(5)
    J = finite_difference_jacobian(lambda z: A @ z, x, workers=1)
    np.testing.assert_allclose(J, A, atol=1e-9)


def test_finite_differences_do_not_depend_on_workers(rng):
    x = rng.standard_normal(6)

    def f(z):
        return np.sin(z) * z[::-1] + z**3

    serial = finite_difference_jacobian(f, x, workers=1)
    threaded = finite_difference_jacobian(f, x, workers=4)
    np.testing.assert_array_equal(serial, threaded)


def test_richardson_extrapolation():
    x = np.array([0.3, 1.2])

    def f(z):
        return np.exp(z)

    plain = finite_difference_jacobian(f, x, step=1e-2)
    refined = finite_difference_jacobian(f, x, step=1e-2, richardson=True)
    exact = np.diag(np.exp(x))
    assert np.abs(refined - exact).max() < 0.01 * np.abs(plain - exact).max()


def test_column_subset(rng):
    A = rng.standard_normal((4, 4))
    J = finite_difference_jacobian(lambda z: A @ z, np.zeros(4), columns=np.array([1, 3]))
    np.testing.assert_allclose(J, A[:, [1, 3]], atol=1e-9)
