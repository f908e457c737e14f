"""
Geometry identity checks
무작위 표본점에서 기하 항등식 잔차 표 생성
"""

from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..manifold.model import ManifoldModel, TangentVector
from .calculus import covariant_derivative, hessian_form, laplacian
from .curvature import bochner_residual, curvature, ricci, ricci_form, ricci_operator
from .fields import PolynomialScalarField, PolynomialVectorField, gradient_field


def _unit_tangent(model: ManifoldModel, m: np.ndarray, rng: np.random.Generator) -> TangentVector:
    v = model.random_tangent(m, rng)
    return TangentVector(m, v.vec / np.linalg.norm(v.vec))


def check_function(model: ManifoldModel) -> PolynomialScalarField:
    """라플라시안/Bochner 행에 쓰는 고정 다항식 (N = 1 이면 x1 만)"""
    expression = 'x1**2*x2 + x1' if model.ambient_dim >= 2 else 'x1**3 + x1'
    return PolynomialScalarField(model, expression)


def _curvature_rows(model: ManifoldModel, m: np.ndarray, rng: np.random.Generator,
                    rows: Dict[str, tuple]) -> None:
    N, ctol = model.ambient_dim, model.curv_tol
    u, v, w, z = (_unit_tangent(model, m, rng) for _ in range(4))
    R_uv_w = curvature(model, u, v, w).vec
    R_vu_w = curvature(model, v, u, w).vec
    R_uv_z = curvature(model, u, v, z).vec
    R_wz_u = curvature(model, w, z, u).vec
    rows['curvature_antisymmetric'] = (np.max(np.abs(R_uv_w + R_vu_w)), ctol)
    rows['curvature_skew'] = (abs(R_uv_w @ z.vec + R_uv_z @ w.vec), ctol)
    rows['curvature_pair_symmetric'] = (abs(R_uv_w @ z.vec - R_wz_u @ v.vec), ctol)

    if model.name == 'sphere':
        rho2 = model.scale ** 2
        oracle = ((v.vec @ w.vec) * u.vec - (u.vec @ w.vec) * v.vec) / rho2
        rows['curvature_oracle'] = (np.max(np.abs(R_uv_w - oracle)), ctol)
        ric = ricci(model, u).vec
        rows['ricci_oracle'] = (np.max(np.abs(ric - (N - 2) / rho2 * u.vec)), ctol)
    elif model.name in ('flat', 'cylinder', 'torus'):
        rows['curvature_zero'] = (np.max(np.abs(R_uv_w)), ctol)

    E = model.tangent_basis(m)
    ric_matrix = ricci_operator(model, m, basis=E)
    rows['ricci_symmetric'] = (np.max(np.abs(ric_matrix - ric_matrix.T)), ctol)
    rows['ricci_trace_formula'] = (np.max(np.abs(ric_matrix - ricci_form(model, m, basis=E))), ctol)


def _sample_rows(model: ManifoldModel, m: np.ndarray, rng: np.random.Generator,
                 f: PolynomialScalarField, grad_f: Optional[PolynomialVectorField]) -> Dict[str, tuple]:
    """한 표본점의 (잔차, 허용오차) 딕셔너리"""
    N, d = model.ambient_dim, model.manifold_dim
    ptol, ctol = model.proj_tol, model.curv_tol
    lap_tol = model.tolerances.lap_tol
    Q = model.normal_projection(m, check=False)
    P = np.eye(N) - Q
    u, v = _unit_tangent(model, m, rng), _unit_tangent(model, m, rng)

    rows: Dict[str, tuple] = {}
    rows['projection_idempotent'] = (max(np.max(np.abs(P @ P - P)), np.max(np.abs(Q @ Q - Q))), ptol)
    rows['projection_complementary'] = (np.max(np.abs(P @ Q)), ptol)
    rows['projection_symmetric'] = (np.max(np.abs(P - P.T)), ptol)
    rows['projection_trace'] = (abs(np.trace(P) - d), ptol * N)

    dq_u = model.directional_dq(m, u.vec, check=False)
    dq_v = model.directional_dq(m, v.vec, check=False)
    rows['dq_torsion_free'] = (np.max(np.abs(dq_u @ v.vec - dq_v @ u.vec)), ptol)
    rows['dq_splitting'] = (max(np.max(np.abs(Q @ dq_u @ Q)), np.max(np.abs(P @ dq_u @ P))), ptol)

    # 1차원 다양체의 곡률은 0 이므로 곡률 행은 d ≥ 2 에서만
    if d >= 2:
        _curvature_rows(model, m, rng, rows)

    E = model.tangent_basis(m)
    rotation, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lap = laplacian(f, m, basis=E)
    scale = 1.0 + abs(lap)
    lap_rotated = laplacian(f, m, basis=E @ rotation)
    rows['laplacian_basis_independent'] = (abs(lap - lap_rotated), ctol * scale)
    trace = sum(hessian_form(f, TangentVector(m, e), TangentVector(m, e)) for e in E.T)
    rows['laplacian_trace_hessian'] = (abs(lap - trace), lap_tol * scale)
    if grad_f is not None:
        divergence = sum(float(e @ covariant_derivative(grad_f, TangentVector(m, e)).vec) for e in E.T)
        rows['laplacian_divergence_gradient'] = (abs(lap - divergence), lap_tol * scale)
        rows['bochner'] = (bochner_residual(f, m, basis=E, grad_field=grad_f), model.tolerances.bochner_tol)

    x = m + 1e-3 * model.scale * rng.standard_normal(N)
    once = model.retract(x)
    rows['retract_idempotent'] = (np.max(np.abs(model.retract(once) - once)), model.tol_F)
    return rows


def geometry_check(model: ManifoldModel, samples: int = 10, seed: int = 0) -> pd.DataFrame:
    """
    기하 항등식 잔차 표

    사영, dQ, 곡률, 라플라시안(기저 불변성, 헤시안 대각합, 기울기의 발산),
    Bochner-Weitzenböck 행을 표본점마다 계산한다. 곡률 행은 d ≥ 2 일 때만,
    발산과 Bochner 행은 다항식 사영이 있는 모델에서만 만든다.

    Args:
        model: 다양체 모델 (sampler 필요)
        samples: 표본점 개수
        seed: 난수 시드

    Returns:
        pd.DataFrame: identity, sample, residual, tolerance, passed 열
    """
    if samples < 1:
        raise ValueError(f"samples 는 1 이상이어야 합니다: {samples}")
    rng = np.random.default_rng(seed)
    f = check_function(model)
    grad_f = gradient_field(f) if model.symbolic_projection is not None else None
    records: List[dict] = []
    for k in range(samples):
        m = model.random_point(rng)
        for identity, (residual, tol) in _sample_rows(model, m, rng, f, grad_f).items():
            records.append({
                'identity': identity,
                'sample': k,
                'residual': float(residual),
                'tolerance': float(tol),
                'passed': bool(residual <= tol),
            })
    return pd.DataFrame.from_records(records, columns=['identity', 'sample', 'residual', 'tolerance', 'passed'])
