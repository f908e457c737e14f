"""
Builtin SDE systems for Malliavin diagnostics
말리아뱅 진단용 내장 SDE 계 팩토리
"""

from typing import Callable, Dict, List

import numpy as np

from ..config.tolerances import NumericalTolerances, DEFAULT_TOLERANCES
from ..errors import ManifoldSpecError
from ..geometry.fields import PolynomialVectorField
from ..manifold.builtin import flat, sphere
from ..sde.system import SdeSystem, projection_bm_system


def elliptic_sphere(tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> SdeSystem:
    """sphere(3,1) 위 X_i = P e_i, 북극에서 출발"""
    model = sphere(3, 1.0, tolerances=tolerances)
    system = projection_bm_system(model, np.array([0.0, 0.0, 1.0]))
    system.name = 'elliptic-sphere'
    return system


def elliptic_flat(tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> SdeSystem:
    """flat(2) 위 X_i = e_i"""
    model = flat(2, tolerances=tolerances)
    fields = [PolynomialVectorField(model, ['1', '0'], 'e1'), PolynomialVectorField(model, ['0', '1'], 'e2')]
    return SdeSystem(model, fields, np.zeros(2), kind='generic', name='elliptic-flat')


def heisenberg(tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> SdeSystem:
    """flat(3) 위 X₁ = (1,0,0), X₂ = (0,1,x₁)"""
    model = flat(3, tolerances=tolerances)
    fields = [
        PolynomialVectorField(model, ['1', '0', '0'], 'X1'),
        PolynomialVectorField(model, ['0', '1', 'x1'], 'X2'),
    ]
    return SdeSystem(model, fields, np.zeros(3), kind='generic', name='heisenberg')


def degenerate_2d(tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> SdeSystem:
    """flat(2) 위 X₁ = ∂x 하나뿐인 퇴화 계"""
    model = flat(2, tolerances=tolerances)
    fields = [PolynomialVectorField(model, ['1', '0'], 'X1')]
    return SdeSystem(model, fields, np.zeros(2), kind='generic', name='degenerate-2d')


def grushin(tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> SdeSystem:
    """flat(2) 위 X₁ = ∂x, X₂ = x∂y, 원점에서 출발"""
    model = flat(2, tolerances=tolerances)
    fields = [
        PolynomialVectorField(model, ['1', '0'], 'X1'),
        PolynomialVectorField(model, ['0', 'x1'], 'X2'),
    ]
    return SdeSystem(model, fields, np.zeros(2), kind='generic', name='grushin')


class SystemFactory:
    """SDE 계 팩토리"""

    # 기본 계 매핑
    _builders: Dict[str, Callable[..., SdeSystem]] = {
        'elliptic-sphere': elliptic_sphere,
        'elliptic-flat': elliptic_flat,
        'heisenberg': heisenberg,
        'degenerate-2d': degenerate_2d,
        'grushin': grushin,
    }

    @classmethod
    def create(cls, name: str, tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> SdeSystem:
        """
        내장 계 생성

        Raises:
            ManifoldSpecError: 알 수 없는 이름
        """
        builder = cls._builders.get(name)
        if builder is None:
            available = ', '.join(cls._builders.keys())
            raise ManifoldSpecError(f"Unknown system: {name}. Available systems: {available}")
        return builder(tolerances=tolerances)

    @classmethod
    def register(cls, name: str, builder: Callable[..., SdeSystem]):
        """새로운 계 생성 함수 등록 (tolerances 키워드를 받아야 함)"""
        if not callable(builder):
            raise TypeError(f"{builder!r} is not callable")
        cls._builders[name] = builder
        print(f"✅ SDE 계 등록 완료: {name}")

    @classmethod
    def unregister(cls, name: str):
        if name in cls._builders:
            del cls._builders[name]
            print(f"✅ SDE 계 등록 해제: {name}")
        else:
            print(f"⚠️ 등록되지 않은 SDE 계: {name}")

    @classmethod
    def available(cls) -> List[str]:
        return list(cls._builders.keys())


def make_system(name: str, tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> SdeSystem:
    return SystemFactory.create(name, tolerances=tolerances)
