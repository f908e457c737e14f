"""
Curvature, Ricci and second covariant derivatives
곡률 텐서, 리치 텐서, 2차 공변미분, Bochner-Weitzenböck 잔차
"""

from typing import Optional

import numpy as np

from ..errors import GeometryError
from ..manifold.model import ManifoldModel, TangentVector
from .calculus import gradient, laplacian, manifold_gradient
from .fields import PolynomialScalarField, PolynomialVectorField, gradient_field


def _common_base(model: ManifoldModel, *vectors: TangentVector) -> np.ndarray:
    base = vectors[0].base
    for v in vectors[1:]:
        if v.base.shape != base.shape or not np.allclose(v.base, base, rtol=0.0, atol=model.tol_F):
            raise GeometryError("기저점이 서로 다른 접벡터입니다")
    for v in vectors:
        v.validate(model)
    return base


def curvature(model: ManifoldModel, u: TangentVector, v: TangentVector, w: TangentVector) -> TangentVector:
    """R(u, v) w = [dQ(u), dQ(v)] w"""
    m = _common_base(model, u, v, w)
    dq_u = model.directional_dq(m, u.vec, check=False)
    dq_v = model.directional_dq(m, v.vec, check=False)
    return TangentVector(m, (dq_u @ dq_v - dq_v @ dq_u) @ w.vec)


def ricci(model: ManifoldModel, v: TangentVector, basis: Optional[np.ndarray] = None) -> TangentVector:
    """Ric v = Σ_a R(v, a) a (a: τ_mM 의 정규직교 기저)"""
    m = _common_base(model, v)
    E = model.tangent_basis(m) if basis is None else np.asarray(basis, dtype=float)
    dq_v = model.directional_dq(m, v.vec, check=False)
    result = np.zeros(model.ambient_dim)
    for a in E.T:
        dq_a = model.directional_dq(m, a, check=False)
        result += (dq_v @ dq_a - dq_a @ dq_v) @ a
    return TangentVector(m, result)


def ricci_operator(model: ManifoldModel, m, basis: Optional[np.ndarray] = None) -> np.ndarray:
    """기저 E 에서의 리치 행렬 ⟨e_i, Ric e_j⟩ (곡률 합으로 계산)"""
    m = model.check_on_manifold(m)
    E = model.tangent_basis(m) if basis is None else np.asarray(basis, dtype=float)
    columns = [ricci(model, TangentVector(m, e), basis=E).vec for e in E.T]
    return E.T @ np.column_stack(columns)


def ricci_form(model: ManifoldModel, m, basis: Optional[np.ndarray] = None) -> np.ndarray:
    """
    대각합 공식에 의한 리치 행렬 (교차 검증용)

    ⟨Ric u, z⟩ = ⟨H, dQ(u) z⟩ − Σ_a ⟨dQ(u) a, dQ(z) a⟩, H = Σ_a dQ(a) a
    """
    m = model.check_on_manifold(m)
    E = model.tangent_basis(m) if basis is None else np.asarray(basis, dtype=float)
    dqs = [model.directional_dq(m, e, check=False) for e in E.T]
    H = sum(dq @ e for dq, e in zip(dqs, E.T))
    d = E.shape[1]
    form = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            form[i, j] = H @ (dqs[i] @ E[:, j]) - sum((dqs[i] @ a) @ (dqs[j] @ a) for a in E.T)
    return form


def ricci_parallel(model: ManifoldModel, x: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """
    이동 프레임 U 로 당긴 리치 행렬 Ric_// = Uᵀ Ric U (배치)

    Args:
        model: 다양체 모델
        x: (P, N) 점
        frames: (P, N, d) 정규직교 접프레임 (열 = 접벡터)

    Returns:
        np.ndarray: (P, d, d) 대칭 행렬
    """
    x = np.asarray(x, dtype=float)
    U = np.asarray(frames, dtype=float)
    if model.codim == 0:
        return np.zeros(U.shape[:-2] + (U.shape[-1], U.shape[-1]))
    columns = np.swapaxes(U, -1, -2)                               # (P, d, N)
    dqs = model.directional_dq(x[..., None, :], columns, check=False)  # (P, d, N, N)
    H = np.einsum('...amn,...na->...m', dqs, U)
    term1 = np.einsum('...jmn,...n->...jm', dqs, H)
    dq_j_ua = np.einsum('...jmn,...na->...jam', dqs, U)
    term2 = np.einsum('...amn,...jan->...jm', dqs, dq_j_ua)
    ric_u = term1 - term2                                          # (P, d, N): Ric U_j
    result = np.einsum('...ni,...jn->...ij', U, ric_u)
    return 0.5 * (result + np.swapaxes(result, -1, -2))


def second_covariant_derivative(Z: PolynomialVectorField, v: TangentVector, w: TangentVector) -> TangentVector:
    """
    ∇²_{v⊗w} Z = dQ(v) dQ(w) z + P z″(v, w) − P z′[dQ(v) w]

    z′, z″ 가 정확한 다항식 벡터장에서만 정의한다.
    """
    model = Z.model
    m = _common_base(model, v, w)
    dq_v = model.directional_dq(m, v.vec, check=False)
    dq_w = model.directional_dq(m, w.vec, check=False)
    P = model.tangent_projection(m, check=False)
    z = Z(m)
    value = dq_v @ dq_w @ z + P @ Z.second_derivative(m, v.vec, w.vec) - P @ Z.directional_derivative(m, dq_v @ w.vec)
    return TangentVector(m, value)


def bochner_residual(f: PolynomialScalarField, m, basis: Optional[np.ndarray] = None,
                     grad_field: Optional[PolynomialVectorField] = None) -> float:
    """
    ‖Σ_a ∇²_{a⊗a} ∇f − grad Δf − Ric ∇f‖ (Bochner-Weitzenböck 항등식)

    grad Δf 는 다양체 위 중심차분으로 계산한다.
    grad_field 로 미리 만든 gradient_field(f) 를 넘기면 기호 계산을 건너뛴다.
    """
    model = f.model
    m = model.check_on_manifold(m)
    E = model.tangent_basis(m) if basis is None else np.asarray(basis, dtype=float)
    z = gradient_field(f) if grad_field is None else grad_field
    rough = np.zeros(model.ambient_dim)
    for a in E.T:
        ta = TangentVector(m, a)
        rough += second_covariant_derivative(z, ta, ta).vec
    grad_lap = manifold_gradient(model, lambda p: laplacian(f, p), m, basis=E).vec
    ric = ricci(model, gradient(f, m), basis=E).vec
    return float(np.linalg.norm(rough - grad_lap - ric))
