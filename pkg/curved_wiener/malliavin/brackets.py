"""
Hörmander bracket tables
반복 Lie 괄호 표와 제한 괄호 조건의 계수 판정
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..errors import NonPolynomialError
from ..geometry.calculus import covariant_derivative, lie_bracket
from ..geometry.fields import PolynomialVectorField
from ..manifold.model import TangentVector
from ..sde.system import SdeSystem

MAX_BRACKET_LEVEL = 4


@dataclass(eq=False)
class BracketEntry:
    """
    괄호 표의 한 항목

    Attributes:
        field: 다항식 벡터장
        provenance: 생성 경로 (예: "[X1,[X1,X2]]")
        level: 처음 등장한 세대 (1 = 생성 벡터장)
        parents: 괄호의 (왼쪽, 오른쪽) 항목 (세대 1 은 None)
    """
    field: PolynomialVectorField
    provenance: str
    level: int
    parents: Optional[Tuple['BracketEntry', 'BracketEntry']] = None


@dataclass(eq=False)
class BracketTable:
    """
    세대 K_1 ⊂ K_2 ⊂ … ⊂ K_l

    K_{j+1} = {[X_i, K] : K ∈ K_j} ∪ K_j. 같은 출처 문자열은 한 번만 계산하고
    값이 같은 괄호는 합치지 않는다.
    """
    system: SdeSystem
    level: int
    generations: List[List[BracketEntry]] = field(default_factory=list)

    def generation(self, j: int) -> List[BracketEntry]:
        """K_j (1 부터)"""
        return self.generations[j - 1]

    def entries(self) -> List[BracketEntry]:
        return self.generations[-1]

    def values(self, j: int, m) -> np.ndarray:
        """K_j 의 벡터장을 m 에서 평가한 열 행렬 (N, |K_j|)"""
        return np.stack([e.field(m) for e in self.generation(j)], axis=-1)

    def torsion_residual(self, m) -> float:
        """
        [Y, W] = ∇_Y W − ∇_W Y 의 최대 잔차 (세대 2 이상 항목)

        레비-치비타 접속이 비틀림이 없음을 괄호 표로 확인한다.
        """
        model = self.system.model
        m = model.check_on_manifold(m)
        worst = 0.0
        for entry in self.entries():
            if entry.parents is None:
                continue
            Y, W = entry.parents[0].field, entry.parents[1].field
            bracket = lie_bracket(Y, W, m).vec
            torsion_free = (covariant_derivative(W, TangentVector(m, Y(m))).vec
                            - covariant_derivative(Y, TangentVector(m, W(m))).vec)
            worst = max(worst, float(np.max(np.abs(bracket - torsion_free))))
        return worst

    def to_frame(self, m=None) -> pd.DataFrame:
        """항목 목록 (m 이 주어지면 그 점의 값 포함)"""
        rows = []
        for entry in self.entries():
            row = {'level': entry.level, 'provenance': entry.provenance}
            if m is not None:
                row['value'] = np.asarray(entry.field(m)).tolist()
            rows.append(row)
        return pd.DataFrame(rows)


def bracket_table(system: SdeSystem, level: int) -> BracketTable:
    """
    확산 벡터장 X_1..X_n 의 반복 괄호 표 (표류 X₀ 는 생성원에서 제외)

    Args:
        system: 다항식 벡터장 SDE 계
        level: 최대 세대 l (1 ≤ l ≤ 4)

    Returns:
        BracketTable: 세대별 항목

    Raises:
        NonPolynomialError: 다항식이 아닌 벡터장
    """
    level = int(level)
    if not 1 <= level <= MAX_BRACKET_LEVEL:
        raise ValueError(f"level 은 1..{MAX_BRACKET_LEVEL} 범위여야 합니다: {level}")
    if not all(isinstance(f, PolynomialVectorField) for f in system.fields):
        raise NonPolynomialError(f"괄호 표는 다항식 벡터장만 지원합니다: {system.name or system.kind}")

    base = [BracketEntry(f, f"X{i + 1}", 1) for i, f in enumerate(system.fields)]
    generations = [list(base)]
    newest = base
    for j in range(2, level + 1):
        created = [
            BracketEntry(x.field.bracket(k.field, label=f"[{x.provenance},{k.provenance}]"),
                         f"[{x.provenance},{k.provenance}]", j, parents=(x, k))
            for k in newest for x in base
        ]
        generations.append(generations[-1] + created)
        newest = created
    return BracketTable(system, level, generations)


@dataclass
class HormanderReport:
    """
    제한 괄호 조건 판정 결과

    Attributes:
        ranks: 세대별 τ_mM 안에서의 수치 계수
        satisfied: 어떤 세대에서 계수 = d 인지
        level_achieved: 처음 계수 d 에 도달한 세대 (없으면 None)
        dimension: d
    """
    ranks: Tuple[int, ...]
    satisfied: bool
    level_achieved: Optional[int]
    dimension: int

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'level': np.arange(1, len(self.ranks) + 1),
            'rank': list(self.ranks),
            'dimension': self.dimension,
            'satisfied': [r == self.dimension for r in self.ranks],
        })


def hormander_rank(table: BracketTable, m) -> HormanderReport:
    """
    세대별 span K_j(m) ∩ τ_mM 의 수치 계수 (특이값 > malliavin_rank_tol · 최대 특이값)

    Args:
        table: 괄호 표
        m: 다양체 위의 점

    Returns:
        HormanderReport: 세대별 계수와 만족 여부
    """
    model = table.system.model
    m = model.check_on_manifold(m)
    E = model.tangent_basis(m)
    rank_tol = model.tolerances.malliavin_rank_tol
    ranks = []
    for j in range(1, table.level + 1):
        coords = E.T @ table.values(j, m)
        singular = np.linalg.svd(coords, compute_uv=False)
        top = singular[0] if singular.size else 0.0
        ranks.append(int(np.sum(singular > rank_tol * top)) if top > 0 else 0)
    d = model.manifold_dim
    achieved = next((j + 1 for j, r in enumerate(ranks) if r == d), None)
    return HormanderReport(tuple(ranks), achieved is not None, achieved, d)
