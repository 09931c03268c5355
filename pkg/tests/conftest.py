import numpy as np
import pytest

from kirchhoff_ocp.fem import assemble, interpolate_nodal
from kirchhoff_ocp.mesh import generate_rect
from kirchhoff_ocp.optsys import Iterate, ProblemData

SQUARE = (-0.5, 0.5, -0.5, 0.5)


@pytest.fixture(scope="session")
def mesh4():
    return generate_rect(*SQUARE, 4)


@pytest.fixture(scope="session")
def ops4(mesh4):
    return assemble(mesh4)


def random_problem(mesh, rng, *, eps=0.1, lambda1=1e-2, lambda2=1e-2, upper=True):
    """Bounded problem with nonconstant coefficients on ``mesh``."""
    n = mesh.n_vertices
    u_a = 1.0 + rng.uniform(0, 1, n)
    u_b = u_a + 1.0 if upper else np.full(n, np.inf)
    return ProblemData(
        f=interpolate_nodal(mesh, lambda x, y: 50 + 30 * x - 20 * y),
        b=rng.uniform(0.5, 2.0, n),
        u_a=u_a,
        u_b=u_b,
        y_d=rng.normal(0, 0.1, n),
        lambda1=lambda1,
        lambda2=lambda2,
        epsilon=eps,
    )


def random_kink_free_iterate(data, ops, rng, gap=0.02):
    """Random (y, u, p) with every control value at least ``gap`` away from
    both bounds, and some nodes outside the admissible interval."""
    n = ops.n
    offs = rng.uniform(-0.5, 1.5, n)
    offs = np.where(np.abs(offs) < gap, gap * np.sign(offs + 1e-300) * 2, offs)
    offs = np.where(np.abs(offs - 1.0) < gap, 1.0 + 2 * gap, offs)
    u = data.u_a + offs
    y = np.where(ops.boundary, 0.0, rng.uniform(0.0, 1.0, n))
    p = rng.normal(0, 1.0, n)
    return Iterate(y, u, p)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
