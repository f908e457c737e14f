"""
Levi-Civita calculus from projections
사영 연산자로부터의 공변미분, 기울기, 헤시안, 라플라시안, Lie 괄호
"""

from typing import Callable, Optional

import numpy as np

from ..errors import GeometryError
from ..manifold.model import ManifoldModel, TangentVector
from .fields import ScalarField, VectorField


def covariant_derivative(Y: VectorField, v: TangentVector) -> TangentVector:
    """∇_v Y = P(m) dy(v_m)"""
    model = Y.model
    v.validate(model)
    m = v.base
    P = model.tangent_projection(m, check=False)
    return TangentVector(m, P @ Y.directional_derivative(m, v.vec))


def gradient(f: ScalarField, m) -> TangentVector:
    """grad f(m) = P(m) ∇F(m)"""
    model = f.model
    m = model.check_on_manifold(m)
    return TangentVector(m, model.tangent_projection(m, check=False) @ f.ambient_gradient(m))


def hessian_form(f: ScalarField, v: TangentVector, w: TangentVector) -> float:
    """∇df(v, w) = F″(m)(v, w) − F′(m) dQ(v_m) w"""
    model = f.model
    if not np.allclose(v.base, w.base, rtol=0.0, atol=model.tol_F):
        raise GeometryError("hessian_form: 기저점이 다릅니다")
    v.validate(model)
    w.validate(model)
    m = v.base
    dq_w = model.directional_dq(m, v.vec, check=False) @ w.vec
    return float(f.ambient_hessian(m, v.vec, w.vec) - f.ambient_gradient(m) @ dq_w)


def laplacian(f: ScalarField, m, basis: Optional[np.ndarray] = None) -> float:
    """
    라플라스-벨트라미 Δf(m) = Σ_i F″(m)(e_i, e_i) − F′(m)(dQ(e_i) e_i)

    Args:
        f: 스칼라장
        m: 다양체 위의 점
        basis: τ_mM 의 정규직교 기저 (N, d); 없으면 피벗 Gram-Schmidt

    Returns:
        float: Δf(m)
    """
    model = f.model
    m = model.check_on_manifold(m)
    E = model.tangent_basis(m) if basis is None else np.asarray(basis, dtype=float)
    grad = f.ambient_gradient(m)
    total = 0.0
    for e in E.T:
        total += float(f.ambient_hessian(m, e, e)) - float(grad @ (model.directional_dq(m, e, check=False) @ e))
    return total


def lie_bracket(Y: VectorField, W: VectorField, m) -> TangentVector:
    """[Y, W](m) = dw(Y(m)) − dy(W(m)) (결과가 접하는지 확인)"""
    model = Y.model
    if W.model is not model and W.model.spec != model.spec:
        raise GeometryError("lie_bracket: 서로 다른 모델의 벡터장입니다")
    m = model.check_on_manifold(m)
    result = W.directional_derivative(m, Y(m)) - Y.directional_derivative(m, W(m))
    normal = float(np.linalg.norm(model.normal_projection(m, check=False) @ result))
    bound = model.tolerances.bracket_tol * (1.0 + float(np.linalg.norm(result)))
    if normal > bound:
        raise GeometryError(f"Lie 괄호가 접하지 않습니다: ‖Q[Y,W]‖={normal:.3e} > {bound:.1e}")
    return TangentVector(m, result)


def manifold_gradient(model: ManifoldModel, g: Callable[[np.ndarray], float], m,
                      basis: Optional[np.ndarray] = None) -> TangentVector:
    """
    다양체 위 함수 g 의 수치 기울기 (수축 곡선 위 중심차분)

    주변 확장이 없는 함수(예: Δf) 의 기울기에 사용한다.
    """
    m = model.check_on_manifold(m)
    E = model.tangent_basis(m) if basis is None else np.asarray(basis, dtype=float)
    h = model.tolerances.grad_fd_step * model.scale
    result = np.zeros(model.ambient_dim)
    for e in E.T:
        forward = g(model.retract(m + h * e))
        backward = g(model.retract(m - h * e))
        result += e * (forward - backward) / (2.0 * h)
    return TangentVector(m, result)
