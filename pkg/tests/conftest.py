import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_realizable_values(rng, n):
    """Sorted trace-free anisotropy eigenvalues drawn uniformly over the triangle."""
    from anisouq.tensor import from_barycentric

    u = rng.uniform(size=(n, 2))
    flip = u.sum(axis=1) > 1
    u[flip] = 1 - u[flip]
    corners = np.array([[1.0, 0.0], [0.0, 0.0], [0.5, np.sqrt(3) / 2]])
    pts = corners[0] * u[:, :1] + corners[1] * u[:, 1:] + corners[2] * (1 - u.sum(axis=1, keepdims=True))
    return from_barycentric(pts)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def point_field(grad_u, k, nu_t=0.1, U=(1.0, 0.0, 0.0), omega=1.0, rho=1.0, mu=1e-3, **extra):
    """RANS field of ``n`` samples built from gradients and scalars."""
    from anisouq.dataset import FlowField

    grad_u = np.asarray(grad_u, dtype=float)
    if grad_u.ndim == 2:
        grad_u = grad_u[None]
    n = grad_u.shape[0]
    k = np.broadcast_to(np.asarray(k, dtype=float), (n,))
    kw = dict(coords=np.column_stack([np.arange(n, dtype=float), np.linspace(0.1, 1.0, n)]),
              U=U, grad_U=grad_u, p=0.0, grad_p=(1.0, 0.0, 0.0), k=k, omega=omega,
              grad_k=(0.0, 0.1, 0.0), rho=rho, mu=mu, mu_t=rho * np.asarray(nu_t, dtype=float),
              d=np.linspace(0.1, 1.0, n), Ma=0.1)
    kw.update(extra)
    return FlowField.from_arrays(**kw)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"ACCEPTANCE {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
