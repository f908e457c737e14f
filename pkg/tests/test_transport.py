import numpy as np
import pytest

from curved_wiener.errors import GeometryError, PathError
from curved_wiener.estimators import fit_loglog_slope
from curved_wiener.manifold import make_manifold
from curved_wiener.transport import (
    DiscretePath, holonomy, inverse_parallel_transport, latitude_loop, orthogonality_drift,
    parallel_transport, splitting_defect, velocities_from_points,
)


def _equator_arc(length: float = 1.0, steps: int = 200) -> DiscretePath:
    s = np.linspace(0.0, length, steps + 1)
    points = np.column_stack([np.cos(s), np.sin(s), np.zeros_like(s)])
    velocities = np.column_stack([-np.sin(s), np.cos(s), np.zeros_like(s)])
    return DiscretePath(s, points, velocities)


def _circular_distance(a: float, b: float) -> float:
    gap = abs(a - b) % (2.0 * np.pi)
    return min(gap, 2.0 * np.pi - gap)


def _expected_holonomy(model, loop, phi):
    E0 = model.tangent_basis(loop.points[0])
    orientation = np.sign(np.linalg.det(np.column_stack([E0, loop.points[0]])))
    return orientation * 2.0 * np.pi * (1.0 - np.cos(phi))


def test_transport_starts_at_identity_and_stays_orthogonal(sphere3):
    transport = parallel_transport(sphere3, _equator_arc(), reorth_every=0)
    np.testing.assert_allclose(transport.frames[0], np.eye(3))
    assert orthogonality_drift(transport.frames) <= sphere3.tolerances.frame_tol


def test_transport_preserves_splitting(sphere3):
    path = _equator_arc()
    transport = parallel_transport(sphere3, path)
    assert splitting_defect(sphere3, path, transport) <= 1e-8


def test_geodesic_velocity_is_parallel(sphere3):
    path = _equator_arc(length=2.0, steps=400)
    transport = parallel_transport(sphere3, path)
    carried = transport.frames[-1] @ path.velocities[0]
    np.testing.assert_allclose(carried, path.velocities[-1], atol=1e-8)


def test_restricted_frame_is_tangent_at_endpoint(sphere3):
    path = _equator_arc(length=2.0, steps=400)
    transport = parallel_transport(sphere3, path)
    U = transport.restricted(sphere3.tangent_basis(path.points[0]))
    assert U.shape == (401, 3, 2)
    np.testing.assert_allclose(path.points[-1] @ U[-1], np.zeros(2), atol=1e-8)
    np.testing.assert_allclose(U[-1].T @ U[-1], np.eye(2), atol=1e-8)


def test_inverse_transport_is_left_inverse(sphere3):
    path = _equator_arc()
    transport = parallel_transport(sphere3, path)
    inverse = inverse_parallel_transport(sphere3, path)
    P0 = sphere3.tangent_projection(path.points[0])
    np.testing.assert_allclose(inverse.frames[-1] @ transport.frames[-1] @ P0, P0, atol=1e-8)


@pytest.mark.parametrize('phi', [np.pi / 6, np.pi / 3, np.pi / 2])
def test_latitude_holonomy(sphere3, phi):
    loop = latitude_loop(sphere3, phi, steps=2000)
    angle = holonomy(sphere3, loop)
    assert 0.0 <= angle < 2.0 * np.pi
    assert _circular_distance(angle, _expected_holonomy(sphere3, loop, phi)) <= sphere3.tolerances.roundtrip_tol


def test_holonomy_converges_at_fourth_order(sphere3):
    phi = np.pi / 3
    steps = [32, 64, 128, 256]
    errors = []
    for n in steps:
        loop = latitude_loop(sphere3, phi, steps=n)
        errors.append(_circular_distance(holonomy(sphere3, loop, reorth_every=0),
                                         _expected_holonomy(sphere3, loop, phi)))
    assert -fit_loglog_slope(steps, errors) >= 3.7


def test_flat_loop_has_trivial_holonomy(flat2):
    s = np.linspace(0.0, 2.0 * np.pi, 101)
    loop = DiscretePath(s, np.column_stack([np.cos(s), np.sin(s)]))
    loop.points[-1] = loop.points[0]
    assert _circular_distance(holonomy(flat2, loop), 0.0) < 1e-12


def test_holonomy_requires_surface():
    model = make_manifold('sphere:N=4,rho=1')
    s = np.linspace(0.0, 2.0 * np.pi, 101)
    points = np.column_stack([np.cos(s), np.sin(s), np.zeros_like(s), np.zeros_like(s)])
    with pytest.raises(GeometryError):
        holonomy(model, DiscretePath(s, points))


def test_open_loop_rejected(sphere3):
    with pytest.raises(PathError):
        holonomy(sphere3, _equator_arc(length=1.0))


def test_latitude_loop_only_on_unit_sphere():
    with pytest.raises(PathError):
        latitude_loop(make_manifold('cylinder'), np.pi / 3)


def test_nonmonotone_times_rejected(sphere3):
    path = _equator_arc()
    path.times[5] = path.times[4]
    with pytest.raises(PathError):
        parallel_transport(sphere3, path)


def test_estimated_velocities_are_tangent(sphere3):
    path = _equator_arc(steps=100)
    estimated = velocities_from_points(sphere3, path.times, path.points)
    np.testing.assert_allclose(estimated, path.velocities, atol=1e-3)
    normal = np.einsum('kn,kn->k', estimated, path.points)
    assert np.max(np.abs(normal)) < 1e-10
