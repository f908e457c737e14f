"""
Manifold factory
스펙 문자열로 내장 다양체를 생성하는 팩토리
"""

import inspect
import re
from typing import Callable, Dict, List, Tuple, Any

from ..config.tolerances import NumericalTolerances, DEFAULT_TOLERANCES
from ..errors import ManifoldSpecError
from .builtin import flat, sphere, cylinder, torus, sl2, so3
from .model import ManifoldModel

_CALL_FORM = re.compile(r'^\s*([A-Za-z_][\w-]*)\s*\((.*)\)\s*$')


class ManifoldFactory:
    """다양체 팩토리"""

    # 기본 다양체 매핑
    _builders: Dict[str, Callable[..., ManifoldModel]] = {
        'flat': flat,
        'sphere': sphere,
        'cylinder': cylinder,
        'torus': torus,
        'sl2': sl2,
        'so3': so3,
    }

    @classmethod
    def create(cls, name: str, tolerances: NumericalTolerances = DEFAULT_TOLERANCES,
               **params) -> ManifoldModel:
        """
        다양체 인스턴스 생성

        Args:
            name: 다양체 이름 ('sphere' 등)
            tolerances: 수치 허용오차
            **params: 다양체 파라미터 (N, rho, n)

        Returns:
            ManifoldModel: 생성된 모델

        Raises:
            ManifoldSpecError: 알 수 없는 이름이나 파라미터
        """
        builder = cls._builders.get(name)
        if builder is None:
            available = ', '.join(cls._builders.keys())
            raise ManifoldSpecError(f"Unknown manifold: {name}. Available manifolds: {available}")

        accepted = [p for p in inspect.signature(builder).parameters if p != 'tolerances']
        unknown = set(params) - set(accepted)
        if unknown:
            raise ManifoldSpecError(
                f"{name}: 알 수 없는 파라미터 {', '.join(sorted(unknown))} (허용: {', '.join(accepted) or '없음'})"
            )
        try:
            return builder(**params, tolerances=tolerances)
        except TypeError as e:
            raise ManifoldSpecError(f"{name}: 파라미터 오류 ({e})")

    @classmethod
    def register(cls, name: str, builder: Callable[..., ManifoldModel]):
        """
        새로운 다양체 생성 함수 등록

        Args:
            name: 다양체 식별자
            builder: tolerances 키워드를 받는 생성 함수
        """
        if not callable(builder):
            raise TypeError(f"{builder!r} is not callable")
        cls._builders[name] = builder
        print(f"✅ 다양체 등록 완료: {name} → {getattr(builder, '__name__', builder)}")

    @classmethod
    def unregister(cls, name: str):
        """다양체 등록 해제"""
        if name in cls._builders:
            del cls._builders[name]
            print(f"✅ 다양체 등록 해제: {name}")
        else:
            print(f"⚠️ 등록되지 않은 다양체: {name}")

    @classmethod
    def available(cls) -> List[str]:
        """사용 가능한 다양체 목록"""
        return list(cls._builders.keys())

    @classmethod
    def parameter_names(cls, name: str) -> List[str]:
        """다양체 생성 파라미터 이름 (위치 인자 순서)"""
        builder = cls._builders.get(name)
        if builder is None:
            return []
        return [p for p in inspect.signature(builder).parameters if p != 'tolerances']


def _parse_number(text: str) -> Any:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            raise ManifoldSpecError(f"숫자가 아닌 파라미터 값: {text!r}")


def parse_manifold_spec(spec: str) -> Tuple[str, Dict[str, Any]]:
    """
    스펙 문자열 파싱

    "sphere:N=3,rho=1.0", "flat:N=2", "cylinder", "sphere(3, 2.0)" 형식을 받는다.

    Returns:
        tuple: (이름, 파라미터 딕셔너리)
    """
    if not isinstance(spec, str) or not spec.strip():
        raise ManifoldSpecError(f"빈 다양체 스펙: {spec!r}")

    match = _CALL_FORM.match(spec)
    if match:
        name, body = match.group(1), match.group(2).strip()
        names = ManifoldFactory.parameter_names(name)
        values = [_parse_number(v) for v in body.split(',')] if body else []
        if len(values) > len(names):
            raise ManifoldSpecError(f"{name}: 위치 파라미터가 너무 많습니다 ({len(values)} > {len(names)})")
        return name, dict(zip(names, values))

    name, _, body = spec.strip().partition(':')
    params: Dict[str, Any] = {}
    for item in filter(None, (s.strip() for s in body.split(','))):
        key, sep, value = item.partition('=')
        if not sep or not key.strip():
            raise ManifoldSpecError(f"잘못된 파라미터 항목: {item!r} (key=value 형식)")
        params[key.strip()] = _parse_number(value)
    return name.strip(), params


def make_manifold(spec: str, tolerances: NumericalTolerances = DEFAULT_TOLERANCES) -> ManifoldModel:
    """스펙 문자열에서 다양체 모델 생성"""
    name, params = parse_manifold_spec(spec)
    return ManifoldFactory.create(name, tolerances=tolerances, **params)
