"""
Vector and scalar fields on embedded manifolds
다양체 위의 벡터장 / 스칼라장 (클로저 기반 + sympy 다항식 기반)
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
import sympy as sp

from ..errors import GeometryError, NonPolynomialError
from ..manifold.model import ManifoldModel


def ambient_symbols(N: int) -> List[sp.Symbol]:
    """주변 좌표 기호 x1..xN"""
    return list(sp.symbols(f'x1:{N + 1}', real=True))


def lambdify_array(exprs: Sequence[sp.Expr], symbols: Sequence[sp.Symbol]) -> Callable[[np.ndarray], np.ndarray]:
    """
    sympy 식 목록을 (..., N) -> (..., len(exprs)) numpy 함수로 변환

    상수 식도 배치 shape 로 브로드캐스트된다.
    """
    funcs = [sp.lambdify(symbols, e, modules='numpy') for e in exprs]

    def evaluate(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        coords = list(np.moveaxis(x, -1, 0))
        batch = x.shape[:-1]
        columns = [np.broadcast_to(np.asarray(f(*coords), dtype=float), batch) for f in funcs]
        return np.stack(columns, axis=-1) if columns else np.zeros(batch + (0,))

    return evaluate


def _check_polynomial(expr: sp.Expr, symbols: Sequence[sp.Symbol]) -> sp.Expr:
    expr = sp.sympify(expr)
    if not expr.is_polynomial(*symbols):
        raise NonPolynomialError(f"다항식이 아닙니다: {expr}")
    return sp.expand(expr)


def _parse_expression(text, symbols: Sequence[sp.Symbol]) -> sp.Expr:
    if isinstance(text, sp.Expr):
        return text
    local = {str(s): s for s in symbols}
    try:
        return sp.sympify(text, locals=local)
    except (sp.SympifyError, SyntaxError, TypeError) as e:
        raise NonPolynomialError(f"식을 해석할 수 없습니다: {text!r} ({e})")


# ----------------------------------------------------------------------
# 벡터장
# ----------------------------------------------------------------------
@dataclass(eq=False)
class VectorField:
    """
    접벡터장 Y(m) = (m, y(m))

    Attributes:
        model: 다양체 모델
        eval: (..., N) -> (..., N) 주변 벡터 y(m)
        jacobian: (x, v) -> dy(v_x) 방향 미분 (없으면 중심차분)
        label: 출처 문자열
    """
    model: ManifoldModel
    eval: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    label: str = ''

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.eval(np.asarray(x, dtype=float)), dtype=float)

    def directional_derivative(self, x, v) -> np.ndarray:
        """dy(v_x)"""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x, v), dtype=float)
        norm = np.linalg.norm(v, axis=-1, keepdims=True)
        unit = v / np.where(norm > 0, norm, 1.0)
        h = self.model.tolerances.grad_fd_step * self.model.scale
        return (self.eval(x + h * unit) - self.eval(x - h * unit)) / (2.0 * h) * norm

    def jacobian_matrix(self, x) -> np.ndarray:
        """주변 야코비안 Dy(x), shape (..., N, N)"""
        x = np.asarray(x, dtype=float)
        eye = np.eye(self.model.ambient_dim)
        columns = [self.directional_derivative(x, np.broadcast_to(e, x.shape)) for e in eye]
        return np.stack(columns, axis=-1)

    def check_tangent(self, points) -> None:
        """표본 점에서 Q(m) y(m) ≈ 0 확인"""
        points = self.model.check_on_manifold(points)
        y = self(points)
        Q = self.model.normal_projection(points, check=False)
        normal = np.linalg.norm(np.einsum('...ij,...j->...i', Q, y), axis=-1)
        bound = self.model.tolerances.tang_tol * (1.0 + np.linalg.norm(y, axis=-1))
        if np.any(normal > bound):
            raise GeometryError(
                f"벡터장 {self.label or '<unnamed>'} 이(가) 접하지 않습니다 (‖Qy‖={float(np.max(normal)):.3e})"
            )


def _rebuild_polynomial_vector_field(model, components, label):
    return PolynomialVectorField.from_strings(model, components, label)


class PolynomialVectorField(VectorField):
    """
    주변 다항식 성분을 갖는 벡터장 (정확한 z′, z″ 제공)

    Args:
        model: 다양체 모델
        components: 길이 N 의 sympy 식 또는 문자열
        label: 출처 문자열
    """

    def __init__(self, model: ManifoldModel, components: Sequence, label: str = ''):
        symbols = ambient_symbols(model.ambient_dim)
        if len(components) != model.ambient_dim:
            raise ValueError(f"성분 개수 {len(components)} ≠ N={model.ambient_dim}")
        exprs = [_check_polynomial(_parse_expression(c, symbols), symbols) for c in components]
        self.symbols = symbols
        self.components = sp.Matrix(exprs)
        self.symbolic_jacobian = self.components.jacobian(symbols)
        self._jacobian_eval = lambdify_array(list(self.symbolic_jacobian), symbols)
        self._second_eval = lambdify_array(
            [sp.diff(c, a, b) for c in exprs for a in symbols for b in symbols], symbols
        )
        super().__init__(
            model=model,
            eval=lambdify_array(exprs, symbols),
            jacobian=self._directional,
            label=label or str(list(exprs)),
        )

    def __reduce__(self):
        return (_rebuild_polynomial_vector_field,
                (self.model, [str(c) for c in self.components], self.label))

    @classmethod
    def from_strings(cls, model: ManifoldModel, components: Sequence[str], label: str = '') -> 'PolynomialVectorField':
        return cls(model, list(components), label)

    def jacobian_matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        N = self.model.ambient_dim
        return self._jacobian_eval(x).reshape(x.shape[:-1] + (N, N))

    def _directional(self, x, v) -> np.ndarray:
        return np.einsum('...ij,...j->...i', self.jacobian_matrix(x), v)

    def second_derivative(self, x, v, w) -> np.ndarray:
        """z″(x)(v, w) = Σ_jk ∂²z/∂x_j∂x_k v_j w_k"""
        x = np.asarray(x, dtype=float)
        N = self.model.ambient_dim
        H = self._second_eval(x).reshape(x.shape[:-1] + (N, N, N))
        return np.einsum('...ijk,...j,...k->...i', H, v, w)

    def bracket(self, other: 'PolynomialVectorField', label: str = '') -> 'PolynomialVectorField':
        """기호적 Lie 괄호 [self, other] = Dw·y − Dy·w"""
        if other.model is not self.model and other.model.spec != self.model.spec:
            raise GeometryError("서로 다른 모델의 벡터장입니다")
        comps = other.symbolic_jacobian * self.components - self.symbolic_jacobian * other.components
        return PolynomialVectorField(self.model, [sp.expand(c) for c in comps],
                                     label or f"[{self.label},{other.label}]")


# ----------------------------------------------------------------------
# 스칼라장
# ----------------------------------------------------------------------
@dataclass(eq=False)
class ScalarField:
    """
    f = F|_M 의 주변 확장 F

    Attributes:
        model: 다양체 모델
        eval: (..., N) -> (...)
        gradient: (..., N) -> (..., N) 주변 기울기 ∇F
        hessian: (x, v, w) -> F″(x)(v, w)
    """
    model: ManifoldModel
    eval: Callable[[np.ndarray], np.ndarray]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = None
    label: str = ''

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.eval(np.asarray(x, dtype=float)), dtype=float)

    def ambient_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.gradient is not None:
            return np.asarray(self.gradient(x), dtype=float)
        h = self.model.tolerances.grad_fd_step * self.model.scale
        eye = np.eye(self.model.ambient_dim)
        return np.stack([(self.eval(x + h * e) - self.eval(x - h * e)) / (2.0 * h) for e in eye], axis=-1)

    def ambient_hessian(self, x, v, w) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hessian is not None:
            return np.asarray(self.hessian(x, v, w), dtype=float)
        h = self.model.tolerances.grad_fd_step * self.model.scale
        dg = (self.ambient_gradient(x + h * np.asarray(v)) - self.ambient_gradient(x - h * np.asarray(v))) / (2.0 * h)
        return np.sum(dg * w, axis=-1)


def _rebuild_polynomial_scalar_field(model, expression, label):
    return PolynomialScalarField(model, expression, label)


class PolynomialScalarField(ScalarField):
    """주변 다항식 F (정확한 ∇F, F″)"""

    def __init__(self, model: ManifoldModel, expression, label: str = ''):
        symbols = ambient_symbols(model.ambient_dim)
        expr = _check_polynomial(_parse_expression(expression, symbols), symbols)
        self.symbols = symbols
        self.expression = expr
        self.symbolic_gradient = [sp.diff(expr, s) for s in symbols]
        self.symbolic_hessian = sp.hessian(expr, symbols)
        value = lambdify_array([expr], symbols)
        grad = lambdify_array(self.symbolic_gradient, symbols)
        hess = lambdify_array(list(self.symbolic_hessian), symbols)
        N = model.ambient_dim

        def hessian(x, v, w):
            x = np.asarray(x, dtype=float)
            H = hess(x).reshape(x.shape[:-1] + (N, N))
            return np.einsum('...ij,...i,...j->...', H, v, w)

        super().__init__(
            model=model,
            eval=lambda x: value(x)[..., 0],
            gradient=grad,
            hessian=hessian,
            label=label or str(expr),
        )

    def __reduce__(self):
        return (_rebuild_polynomial_scalar_field, (self.model, str(self.expression), self.label))


def gradient_field(f: PolynomialScalarField) -> PolynomialVectorField:
    """
    grad f 의 주변 다항식 확장 z(x) = (I − Q(x)) ∇F(x)

    모델이 다항식 사영(symbolic_projection)을 가질 때만 가능하다.
    """
    model = f.model
    if model.symbolic_projection is None:
        raise NonPolynomialError(f"{model.name}: 다항식 사영이 없어 grad f 를 다항식으로 확장할 수 없습니다")
    symbols = f.symbols
    Q = model.symbolic_projection(symbols)
    grad = sp.Matrix(f.symbolic_gradient)
    z = (sp.eye(model.ambient_dim) - Q) * grad
    return PolynomialVectorField(model, [sp.expand(c) for c in z], label=f"grad({f.label})")


def projection_fields(model: ManifoldModel) -> List[VectorField]:
    """
    X_i(x) = P(x) e_i (i=1..N) 벡터장 목록

    다항식 사영이 있으면 PolynomialVectorField, 없으면 클로저 기반 VectorField.
    """
    N = model.ambient_dim
    if model.symbolic_projection is not None:
        symbols = ambient_symbols(N)
        P = sp.eye(N) - model.symbolic_projection(symbols)
        return [PolynomialVectorField(model, list(P[:, i]), label=f"P e{i + 1}") for i in range(N)]

    def make(i: int) -> VectorField:
        def evaluate(x):
            return model.tangent_projection(x, check=False)[..., :, i]

        def derivative(x, v):
            return -model.directional_dq(x, v, check=False)[..., :, i]

        return VectorField(model, evaluate, jacobian=derivative, label=f"P e{i + 1}")

    return [make(i) for i in range(N)]
