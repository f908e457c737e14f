"""
Builtin embedded manifolds
내장 다양체 모델 (flat, sphere, cylinder, torus, sl2, so3)
"""

from itertools import combinations_with_replacement

import numpy as np
import sympy as sp

from ..config.tolerances import NumericalTolerances, DEFAULT_TOLERANCES
from ..errors import ManifoldSpecError, RetractionError
from .model import ManifoldModel


def _positive_int(value, name: str) -> int:
    try:
        as_int = int(value)
    except (TypeError, ValueError):
        raise ManifoldSpecError(f"{name} 는 정수여야 합니다: {value!r}")
    if as_int != float(value) or as_int < 1:
        raise ManifoldSpecError(f"{name} 는 양의 정수여야 합니다: {value!r}")
    return as_int


def _positive_float(value, name: str) -> float:
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ManifoldSpecError(f"{name} 는 실수여야 합니다: {value!r}")
    if not np.isfinite(as_float) or as_float <= 0:
        raise ManifoldSpecError(f"{name} 는 양수여야 합니다: {value!r}")
    return as_float


def flat(N: int, tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> ManifoldModel:
    """제약 없는 R^N (P ≡ I, Q ≡ 0)"""
    N = _positive_int(N, 'N')
    return ManifoldModel(
        name='flat',
        ambient_dim=N,
        manifold_dim=N,
        symbolic_projection=lambda xs: sp.zeros(N, N),
        sampler=lambda rng: rng.standard_normal(N),
        base_point=(0.0,) * N,
        spec=f"flat:N={N}",
        tolerances=tolerances,
    )


def sphere(N: int, rho: float = 1.0, tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> ManifoldModel:
    """반지름 rho 의 구면 |x|² = rho² ⊂ R^N (해석적 Q, dQ)"""
    N = _positive_int(N, 'N')
    rho = _positive_float(rho, 'rho')
    if N < 2:
        raise ManifoldSpecError(f"sphere 는 N ≥ 2 가 필요합니다: N={N}")
    r2 = rho * rho

    def constraint(x):
        return (np.sum(x * x, axis=-1) - r2)[..., None]

    def jacobian(x):
        return 2.0 * x[..., None, :]

    def hessian(x, v, w):
        return 2.0 * np.sum(v * w, axis=-1)[..., None]

    def projection(x):
        return x[..., :, None] * x[..., None, :] / r2

    def dq(x, v):
        outer = v[..., :, None] * x[..., None, :]
        return (outer + np.swapaxes(outer, -1, -2)) / r2

    def retraction(x):
        norm = np.linalg.norm(x, axis=-1, keepdims=True)
        if np.any(norm == 0):
            raise RetractionError("sphere: 원점은 수축할 수 없습니다")
        return rho * x / norm

    def symbolic(xs):
        x = sp.Matrix(xs)
        return x * x.T / sp.nsimplify(r2)

    def sampler(rng):
        x = rng.standard_normal(N)
        return rho * x / np.linalg.norm(x)

    return ManifoldModel(
        name='sphere',
        ambient_dim=N,
        manifold_dim=N - 1,
        scale=rho,
        constraint=constraint,
        constraint_jacobian=jacobian,
        constraint_hessian=hessian,
        analytic_projection=projection,
        analytic_dq=dq,
        analytic_retraction=retraction,
        symbolic_projection=symbolic,
        sampler=sampler,
        base_point=(0.0,) * (N - 1) + (rho,),
        spec=f"sphere:N={N},rho={rho!r}",
        tolerances=tolerances,
    )


def cylinder(tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> ManifoldModel:
    """x² + y² = 1 ⊂ R³ (공식 Q, 유한차분 dQ)"""

    def constraint(x):
        return (x[..., 0] ** 2 + x[..., 1] ** 2 - 1.0)[..., None]

    def jacobian(x):
        zeros = np.zeros(x.shape[:-1])
        return np.stack([2.0 * x[..., 0], 2.0 * x[..., 1], zeros], axis=-1)[..., None, :]

    def hessian(x, v, w):
        return (2.0 * (v[..., 0] * w[..., 0] + v[..., 1] * w[..., 1]))[..., None]

    def sampler(rng):
        theta = rng.uniform(0.0, 2.0 * np.pi)
        return np.array([np.cos(theta), np.sin(theta), rng.uniform(-2.0, 2.0)])

    return ManifoldModel(
        name='cylinder',
        ambient_dim=3,
        manifold_dim=2,
        constraint=constraint,
        constraint_jacobian=jacobian,
        constraint_hessian=hessian,
        sampler=sampler,
        base_point=(1.0, 0.0, 0.0),
        spec="cylinder",
        tolerances=tolerances,
    )


def torus(n: int, tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> ManifoldModel:
    """평평한 토러스 |z_i| = 1 (i=1..n) ⊂ R^{2n}"""
    n = _positive_int(n, 'n')

    def constraint(x):
        pairs = x.reshape(x.shape[:-1] + (n, 2))
        return np.sum(pairs * pairs, axis=-1) - 1.0

    def jacobian(x):
        J = np.zeros(x.shape[:-1] + (n, 2 * n))
        for i in range(n):
            J[..., i, 2 * i] = 2.0 * x[..., 2 * i]
            J[..., i, 2 * i + 1] = 2.0 * x[..., 2 * i + 1]
        return J

    def hessian(x, v, w):
        prod = (v * w).reshape(v.shape[:-1] + (n, 2))
        return 2.0 * np.sum(prod, axis=-1)

    def sampler(rng):
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        return np.column_stack([np.cos(theta), np.sin(theta)]).ravel()

    return ManifoldModel(
        name='torus',
        ambient_dim=2 * n,
        manifold_dim=n,
        constraint=constraint,
        constraint_jacobian=jacobian,
        constraint_hessian=hessian,
        sampler=sampler,
        base_point=(1.0, 0.0) * n,
        spec=f"torus:n={n}",
        tolerances=tolerances,
    )


def sl2(tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> ManifoldModel:
    """SL(2,R) = {ad - bc = 1} ⊂ R⁴, 좌표 순서 (a, b, c, d)"""

    def constraint(x):
        a, b, c, d = (x[..., i] for i in range(4))
        return (a * d - b * c - 1.0)[..., None]

    def jacobian(x):
        a, b, c, d = (x[..., i] for i in range(4))
        return np.stack([d, -c, -b, a], axis=-1)[..., None, :]

    def hessian(x, v, w):
        return (v[..., 0] * w[..., 3] + v[..., 3] * w[..., 0]
                - v[..., 1] * w[..., 2] - v[..., 2] * w[..., 1])[..., None]

    def sampler(rng):
        # 단위원 근처 원소
        g = np.eye(2) + 0.3 * rng.standard_normal((2, 2))
        det = np.linalg.det(g)
        if det <= 0.1:
            return np.eye(2).ravel()
        return (g / np.sqrt(det)).ravel()

    return ManifoldModel(
        name='sl2',
        ambient_dim=4,
        manifold_dim=3,
        constraint=constraint,
        constraint_jacobian=jacobian,
        constraint_hessian=hessian,
        sampler=sampler,
        base_point=(1.0, 0.0, 0.0, 1.0),
        spec="sl2",
        tolerances=tolerances,
    )


_SO3_PAIRS = list(combinations_with_replacement(range(3), 2))


def so3(tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> ManifoldModel:
    """SO(3) = {gᵀg = I} ⊂ R⁹, 제약 값은 gᵀg - I 의 상삼각 6성분"""

    def as_matrix(x):
        return x.reshape(x.shape[:-1] + (3, 3))

    def upper(S):
        return np.stack([S[..., i, j] for i, j in _SO3_PAIRS], axis=-1)

    def constraint(x):
        g = as_matrix(x)
        return upper(np.swapaxes(g, -1, -2) @ g - np.eye(3))

    def jacobian(x):
        g = as_matrix(x)
        J = np.zeros(x.shape[:-1] + (6, 9))
        # ∂(gᵀg)_{ij}/∂g_{ab} = δ_{bi} g_{aj} + δ_{bj} g_{ai}
        for row, (i, j) in enumerate(_SO3_PAIRS):
            for a in range(3):
                J[..., row, 3 * a + i] += g[..., a, j]
                J[..., row, 3 * a + j] += g[..., a, i]
        return J

    def hessian(x, v, w):
        A, B = as_matrix(v), as_matrix(w)
        return upper(np.swapaxes(A, -1, -2) @ B + np.swapaxes(B, -1, -2) @ A)

    def sampler(rng):
        q, r = np.linalg.qr(rng.standard_normal((3, 3)))
        q = q * np.sign(np.diag(r))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        return q.ravel()

    return ManifoldModel(
        name='so3',
        ambient_dim=9,
        manifold_dim=3,
        constraint=constraint,
        constraint_jacobian=jacobian,
        constraint_hessian=hessian,
        sampler=sampler,
        base_point=tuple(np.eye(3).ravel()),
        spec="so3",
        tolerances=tolerances,
    )
