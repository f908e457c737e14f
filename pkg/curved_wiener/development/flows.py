"""
RK4 integration on embedded manifolds
단계점 수축을 포함한 RK4 스텝과 벡터장 흐름
"""

from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np

from ..geometry.fields import VectorField
from ..manifold.model import ManifoldModel

State = Tuple[np.ndarray, ...]
Rhs = Callable[[float, State], State]


def _settle(model: ManifoldModel, state: State) -> State:
    """상태의 첫 성분(위치)을 M 위로 수축"""
    return (model.retract(state[0]),) + tuple(state[1:])


def _axpy(state: State, h: float, slope: State) -> State:
    return tuple(s + h * k for s, k in zip(state, slope))


def rk4_step(model: ManifoldModel, state: State, rhs: Rhs, t: float, h: float) -> State:
    """
    결합 상태 (위치, 부가 행렬 ...) 에 대한 고전 RK4 한 스텝

    state[0] 은 (..., N) 위치이며 각 단계점과 스텝 끝에서 수축한다.
    rhs(t, state) 는 같은 구조의 도함수 튜플을 돌려준다.
    """
    k1 = rhs(t, state)
    k2 = rhs(t + 0.5 * h, _settle(model, _axpy(state, 0.5 * h, k1)))
    k3 = rhs(t + 0.5 * h, _settle(model, _axpy(state, 0.5 * h, k2)))
    k4 = rhs(t + h, _settle(model, _axpy(state, h, k3)))
    new = tuple(s + h / 6.0 * (a + 2.0 * b + 2.0 * c + d) for s, a, b, c, d in zip(state, k1, k2, k3, k4))
    return _settle(model, new)


@dataclass(eq=False)
class TimeDependentField:
    """시간 의존 벡터장 X(t, m)"""
    model: ManifoldModel
    eval: Callable[[float, np.ndarray], np.ndarray]
    label: str = ''

    def __call__(self, t: float, x) -> np.ndarray:
        return np.asarray(self.eval(t, np.asarray(x, dtype=float)), dtype=float)


FlowField = Union[VectorField, TimeDependentField]


def integrate_flow(X: FlowField, m, T: float, steps: int, t0: float = 0.0) -> np.ndarray:
    """
    흐름 T_T^X(m) 을 RK4 + 스텝별 수축으로 계산

    Args:
        X: 벡터장 (시간 독립 또는 TimeDependentField)
        m: 시작점 (배치 가능, (..., N))
        T: 적분 시간 (음수면 역방향)
        steps: 스텝 수 (≥ 1)
        t0: 시작 시각 (시간 의존 벡터장용)

    Returns:
        np.ndarray: 도착점
    """
    model = X.model
    m = model.check_on_manifold(m)
    if steps < 1:
        raise ValueError(f"steps 는 1 이상이어야 합니다: {steps}")
    if T == 0:
        return np.array(m, copy=True)

    if isinstance(X, TimeDependentField):
        def rhs(t, state):
            return (X(t, state[0]),)
    else:
        def rhs(t, state):
            return (X(state[0]),)

    h = T / steps
    state: State = (m,)
    for k in range(steps):
        state = rk4_step(model, state, rhs, t0 + k * h, h)
    return state[0]
