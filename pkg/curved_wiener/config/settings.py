"""
Configuration management for curved-wiener
config.yaml / .env 기반 실행 설정 관리
"""

import os
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from .tolerances import NumericalTolerances, get_tolerances

# .env 파일 로드 (CW_SEED 등)
load_dotenv()

SEED_ENV_VAR = 'CW_SEED'

# config.yaml 이 없을 때 사용하는 기본값
BUILTIN_DEFAULTS: Dict[str, Any] = {
    'dt': 1e-3,
    'paths': 10_000,
    'chunk_size': 1000,
    'workers': None,
    'deterministic': True,
    'n_sub': 4,
    'seed': 0,
}


class Settings:
    """설정 관리 클래스"""

    def __init__(self, config_path: str = 'config.yaml'):
        self.config_path = config_path
        self.config = self._load_config()
        self.defaults = {**BUILTIN_DEFAULTS, **(self.config.get('defaults') or {})}
        self.tolerances = self._load_tolerances()

    def _load_config(self) -> Dict[str, Any]:
        """config.yaml 파일 로드 (없으면 빈 설정)"""
        if not os.path.exists(self.config_path):
            return {}
        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                loaded = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ValueError(f"설정 파일 파싱 오류 ({self.config_path}): {e}")
        if loaded is None:
            return {}
        if not isinstance(loaded, dict):
            raise ValueError(f"설정 파일은 매핑이어야 합니다: {self.config_path}")
        return loaded

    def _load_tolerances(self) -> NumericalTolerances:
        """허용오차 프리셋 + 개별 덮어쓰기"""
        block = dict(self.config.get('tolerances') or {})
        preset = block.pop('preset', 'default')
        return get_tolerances(preset, **block)

    def get_default(self, key: str, fallback: Any = None) -> Any:
        """기본 실행 파라미터 반환"""
        return self.defaults.get(key, fallback)

    def default_seed(self) -> int:
        """기본 시드 (환경변수 CW_SEED 우선)"""
        env_seed = os.environ.get(SEED_ENV_VAR)
        if env_seed not in (None, ''):
            try:
                return int(env_seed)
            except ValueError:
                raise ValueError(f"{SEED_ENV_VAR} 는 정수여야 합니다: {env_seed!r}")
        return int(self.defaults.get('seed', 0))


# 전역 설정 객체 (싱글톤 패턴)
_settings_instance: Optional[Settings] = None


def get_settings(config_path: str = 'config.yaml') -> Settings:
    """설정 객체 반환 (싱글톤)"""
    global _settings_instance
    if _settings_instance is None:
        _settings_instance = Settings(config_path)
    return _settings_instance


def reset_settings() -> None:
    """싱글톤 초기화 (테스트용)"""
    global _settings_instance
    _settings_instance = None
