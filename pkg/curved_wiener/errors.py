"""
Exception hierarchy for curved-wiener
curved-wiener 예외 계층
"""


class CurvedWienerError(Exception):
    """모든 라이브러리 오류의 기반 클래스"""


class ManifoldSpecError(CurvedWienerError, ValueError):
    """알 수 없는 다양체 이름 또는 잘못된 파라미터"""


class OffManifoldError(CurvedWienerError, ValueError):
    """점이 다양체 위에 있지 않음 (‖F(m)‖ > tol_F)"""


class RankDeficiencyError(CurvedWienerError, ValueError):
    """F′(m) 또는 X(m) 의 계수 부족"""


class RetractionError(CurvedWienerError, RuntimeError):
    """Gauss-Newton 수축이 수렴하지 않음 (상위 스텝이 너무 큼)"""


class GeometryError(CurvedWienerError, ValueError):
    """기저점 불일치, 접벡터가 아닌 결과 등 기하 연산 오류"""


class FrameDriftError(CurvedWienerError, RuntimeError):
    """평행이동 프레임의 직교성 이탈이 frame_fail 을 넘음"""


class PathError(CurvedWienerError, ValueError):
    """잘못된 경로 (비단조 시간 격자, 닫히지 않은 루프 등)"""


class DriverError(CurvedWienerError, ValueError):
    """잘못된 구동 경로 설정 (dt 가 T 를 나누지 않음 등)"""


class NonPolynomialError(CurvedWienerError, ValueError):
    """다항식이어야 하는 식이 다항식이 아님"""


class EstimatorError(CurvedWienerError, ValueError):
    """몬테카를로 추정기 입력 오류 (t0 > t 등)"""


class UsageError(CurvedWienerError, ValueError):
    """CLI 사용법 오류 (알 수 없는 키, 필수 인자 누락)"""
