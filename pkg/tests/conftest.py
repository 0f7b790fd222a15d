import numpy as np
import pytest

from degheat import Coefficient, ProblemData, TimeGrid, manufacture


def make_steady_problem(n_t=96, nx=16, h=1.0, T=1.0, beta=1.0):
    """Hand-built u = x fixture: phi = x, f = 0, mu1 = 0, mu2 = h, mu3 = t**beta."""
    tg = TimeGrid.graded(T, n_t, 2.0)
    x = np.linspace(0.0, h, nx + 1)
    return ProblemData(
        h=h, T=T, beta=beta,
        x_grid=x, t_grid=tg.nodes,
        phi=x.copy(),
        f=np.zeros((nx + 1, n_t + 1)),
        mu1=np.zeros(n_t + 1),
        mu2=np.full(n_t + 1, h),
        mu3=tg.nodes**beta,
    )


@pytest.fixture(scope="session")
def steady_problem():
    return make_steady_problem()


@pytest.fixture(scope="session")
def steady_coefficient(steady_problem):
    return Coefficient.from_callable(lambda t: t, steady_problem.tgrid, 1.0)


@pytest.fixture(scope="session")
def heating_case():
    """Small manufactured heating problem (beta=1, c=1) with its truth."""
    mesh = TimeGrid.graded(1.0, 96, 2.0)
    problem, truth = manufacture(lambda t: t, "heating", mesh, beta=1.0, nx=24)
    return problem, truth
