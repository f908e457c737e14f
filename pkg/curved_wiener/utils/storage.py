"""
Result storage utilities
메타데이터 헤더를 갖는 CSV 결과 저장/로드
"""

import io
import json
import os
import sys
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import UsageError

FLOAT_FORMAT = '%.17g'
METADATA_PREFIX = '# '


def convert_to_serializable(obj: Any) -> Any:
    """numpy 타입을 JSON 직렬화 가능한 타입으로 변환"""
    if isinstance(obj, dict):
        return {str(key): convert_to_serializable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [convert_to_serializable(item) for item in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return convert_to_serializable(obj.tolist())
    return obj


def format_metadata(metadata: Dict[str, Any]) -> str:
    """'# key: <json>' 형식의 헤더 블록 (키 순서 고정)"""
    lines = []
    for key in sorted(metadata):
        value = json.dumps(convert_to_serializable(metadata[key]), sort_keys=True, ensure_ascii=False)
        lines.append(f"{METADATA_PREFIX}{key}: {value}\n")
    return ''.join(lines)


def write_results(df: pd.DataFrame, metadata: Dict[str, Any], out: Optional[str] = None) -> str:
    """
    결과 표를 CSV 로 저장

    Args:
        df: 결과 표
        metadata: 헤더에 기록할 메타데이터 (설정 재구성이 가능해야 함)
        out: 출력 경로 (None 이면 stdout)

    Returns:
        str: 작성된 CSV 텍스트
    """
    buffer = io.StringIO()
    buffer.write(format_metadata(metadata))
    df.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    text = buffer.getvalue()

    if out is None:
        sys.stdout.write(text)
        return text
    directory = os.path.dirname(os.path.abspath(out))
    os.makedirs(directory, exist_ok=True)
    with open(out, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    return text


def read_metadata(path: str) -> Dict[str, Any]:
    """CSV 헤더의 메타데이터 읽기"""
    metadata: Dict[str, Any] = {}
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if not line.startswith(METADATA_PREFIX):
                break
            key, _, value = line[len(METADATA_PREFIX):].rstrip('\n').partition(': ')
            metadata[key] = json.loads(value)
    return metadata


def read_results(path: str) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """메타데이터와 표를 함께 읽기"""
    return pd.read_csv(path, comment='#'), read_metadata(path)


def read_table(path: str, columns: Sequence[str]) -> pd.DataFrame:
    """
    입력 CSV 표 읽기 ('#' 주석 줄 무시)

    Args:
        path: CSV 경로
        columns: 반드시 있어야 하는 열 이름

    Returns:
        pd.DataFrame: 필요한 열만 순서대로, float 로 변환한 표

    Raises:
        UsageError: 파일을 읽을 수 없거나 열이 없거나 값이 숫자가 아닌 경우
    """
    try:
        df = pd.read_csv(path, comment='#')
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise UsageError(f"입력 CSV 를 읽을 수 없습니다: {path} ({e})")
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise UsageError(f"{path}: 열 누락 {', '.join(missing)} (있는 열: {', '.join(map(str, df.columns))})")
    try:
        return df[list(columns)].astype(float)
    except ValueError as e:
        raise UsageError(f"{path}: 숫자가 아닌 값이 있습니다 ({e})")
