#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
수락 시나리오 실행 스크립트
Acceptance Scenario Runner
"""

import filecmp
import os
import sys
import tempfile

import numpy as np

# 프로젝트 루트를 Python 경로에 추가
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from curved_wiener.cli import main as cli_main
from curved_wiener.development import EuclideanPath, antidevelop, develop
from curved_wiener.estimators import (
    CylinderFunction, McParams, MonteCarloEngine,
    bismut_gradient, clark_ocone_check, fit_loglog_slope, heat_expectation, ibp_residual,
)
from curved_wiener.geometry import PolynomialScalarField, bochner_residual, geometry_check
from curved_wiener.malliavin import bracket_table, hormander_rank, make_system, nondegeneracy_report, reduced_covariance
from curved_wiener.manifold import make_manifold
from curved_wiener.sde import CameronMartinPath, projection_bm_system, sample_drivers, simulate_sde
from curved_wiener.transport import holonomy, latitude_loop, orthogonality_drift, parallel_transport
from curved_wiener.transport.paths import DiscretePath


def _report(name: str, passed: bool, detail: str = "") -> bool:
    mark = "✅" if passed else "❌"
    print(f"{mark} {name} {detail}")
    return passed


def _angle_error(a: float, b: float) -> float:
    gap = abs(a - b) % (2.0 * np.pi)
    return min(gap, 2.0 * np.pi - gap)


def run_geometry_oracles() -> bool:
    """구면 곡률/Ricci 오라클과 원기둥 평탄성"""
    print("🚀 기하 오라클 점검")
    ok = True
    for spec in ('sphere:N=3,rho=1', 'sphere:N=4,rho=2', 'cylinder'):
        table = geometry_check(make_manifold(spec), samples=100, seed=1)
        failed = table[~table['passed']]
        ok &= _report(spec, failed.empty, f"(최대 잔차 {table['residual'].max():.2e}, 실패 {len(failed)})")
    return ok


def run_bochner() -> bool:
    """sphere(3,1) 의 Bochner-Weitzenböck 잔차"""
    print("🚀 Bochner-Weitzenböck 점검")
    model = make_manifold('sphere:N=3,rho=1')
    rng = np.random.default_rng(2)
    points = [model.random_point(rng) for _ in range(50)]
    ok = True
    for expr in ('x3', 'x1*x2'):
        f = PolynomialScalarField(model, expr)
        worst = max(bochner_residual(f, m) for m in points)
        ok &= _report(expr, worst <= model.tolerances.bochner_tol, f"(최대 잔차 {worst:.2e})")
    return ok


def run_transport() -> bool:
    """직교성 이탈, 위도 루프 홀로노미, RK4 수렴 차수"""
    print("🚀 평행이동 점검")
    model = make_manifold('sphere:N=3,rho=1')
    ok = True

    s = np.linspace(0.0, 1.0, 1001)
    arc = DiscretePath(s, np.column_stack([np.cos(s), np.sin(s), np.zeros_like(s)]),
                       np.column_stack([-np.sin(s), np.cos(s), np.zeros_like(s)]))
    drift = orthogonality_drift(parallel_transport(model, arc, reorth_every=0).frames)
    ok &= _report("직교성 이탈", drift <= model.tolerances.frame_tol, f"({drift:.2e})")

    for phi in (np.pi / 6, np.pi / 3, np.pi / 2):
        loop = latitude_loop(model, phi, steps=6284)
        E0 = model.tangent_basis(loop.points[0])
        orientation = np.sign(np.linalg.det(np.column_stack([E0, loop.points[0]])))
        expected = orientation * 2.0 * np.pi * (1.0 - np.cos(phi))
        error = _angle_error(holonomy(model, loop), expected)
        ok &= _report(f"홀로노미 φ={phi:.4f}", error <= model.tolerances.roundtrip_tol, f"(오차 {error:.2e})")

    phi = np.pi / 3
    expected = 2.0 * np.pi * (1.0 - np.cos(phi))
    steps = [32, 64, 128, 256]
    errors = []
    for n in steps:
        loop = latitude_loop(model, phi, steps=n)
        E0 = model.tangent_basis(loop.points[0])
        orientation = np.sign(np.linalg.det(np.column_stack([E0, loop.points[0]])))
        errors.append(_angle_error(holonomy(model, loop, reorth_every=0), orientation * expected))
    slope = -fit_loglog_slope(steps, errors)
    ok &= _report("RK4 차수", slope >= 3.7, f"(기울기 {slope:.2f})")
    return ok


def run_development() -> bool:
    """전개 왕복과 대원 닫힘"""
    print("🚀 전개 왕복 점검")
    model = make_manifold('sphere:N=3,rho=1')
    o = model.origin()
    rng = np.random.default_rng(3)
    times = np.linspace(0.0, 1.0, 1001)
    worst = 0.0
    for _ in range(20):
        # 1000 구간 무작위 구간별 선형 b
        values = np.vstack([np.zeros((1, 2)), np.cumsum(0.001 * rng.standard_normal((1000, 2)), axis=0)])
        b = EuclideanPath(times, values)
        path, _ = develop(model, o, b)
        worst = max(worst, float(np.max(np.abs(antidevelop(model, path).values - values))))
    ok = _report("왕복 오차", worst <= model.tolerances.roundtrip_tol, f"({worst:.2e})")

    times = np.linspace(0.0, 2.0 * np.pi, 2001)
    path, _ = develop(model, o, EuclideanPath(times, np.column_stack([times, np.zeros_like(times)])))
    gap = float(np.linalg.norm(path.points[-1] - o))
    ok &= _report("대원 닫힘", gap <= model.tolerances.roundtrip_tol, f"({gap:.2e})")
    return ok


def run_sphere_bm(engine: MonteCarloEngine) -> bool:
    """북극에서 출발한 브라운 운동의 E[x3(Σ_t)] = e^{-t}"""
    print("🚀 구면 브라운 운동 점검")
    model = make_manifold('sphere:N=3,rho=1')
    f = PolynomialScalarField(model, 'x3')
    estimate = heat_expectation(model, model.origin(), f, 0.5, McParams(dt=1e-3, n_paths=100_000, seed=5), engine)
    ok = _report("E[x3]", estimate.within(np.exp(-0.5), n_sigma=3.0),
                 f"({estimate.mean[0]:.5f} ± {estimate.stderr[0]:.5f}, 기대 {np.exp(-0.5):.5f})")

    system = projection_bm_system(model, model.origin())
    paths = simulate_sde(system, sample_drivers(3, 0.5, 1e-3, 5, range(200)))
    violation = float(np.max(model.constraint_residual(paths.points)))
    ok &= _report("제약 위반", violation <= 1e-10, f"({violation:.2e})")
    return ok


def run_wong_zakai() -> bool:
    """Wong-Zakai 강수렴 차수"""
    print("🚀 Wong-Zakai 강수렴 점검")
    model = make_manifold('sphere:N=3,rho=1')
    system = projection_bm_system(model, model.origin())
    T = 1.0
    fine = sample_drivers(3, T, T * 2.0 ** -12, 7, range(100))
    reference = simulate_sde(system, fine).points[:, -1]
    steps, errors = [], []
    for level in range(8, 12):
        coarse = fine.coarsen(2 ** (12 - level))
        end = simulate_sde(system, coarse).points[:, -1]
        steps.append(coarse.dt)
        errors.append(float(np.mean(np.linalg.norm(end - reference, axis=-1))))
    slope = fit_loglog_slope(steps, errors)
    return _report("강수렴 기울기", slope >= 0.4, f"({slope:.2f})")


def run_bismut(engine: MonteCarloEngine) -> bool:
    """평평한 선형 함수와 구면 x3 의 Bismut 기울기"""
    print("🚀 Bismut 공식 점검")
    ok = True
    flat = make_manifold('flat:N=2')
    c = np.array([1.0, -2.0])
    f = PolynomialScalarField(flat, 'x1 - 2*x2')
    est = bismut_gradient(flat, np.zeros(2), f, 1.0, 0.5, McParams(dt=1e-2, n_paths=20_000, seed=8), engine)
    ok &= _report("평평한 선형", est.within(flat.tangent_basis(np.zeros(2)).T @ c, n_sigma=3.0), f"({est.mean})")

    model = make_manifold('sphere:N=3,rho=1')
    o = np.array([1.0, 0.0, 0.0])
    f = PolynomialScalarField(model, 'x3')
    target = np.exp(-0.5) * np.array([0.0, 0.0, 1.0])
    params = McParams(dt=1e-3, n_paths=200_000, seed=9)
    estimates = [bismut_gradient(model, o, f, 0.5, t0, params, engine) for t0 in (0.25, 0.5)]
    for t0, est in zip((0.25, 0.5), estimates):
        ok &= _report(f"구면 t0={t0}", np.allclose(est.ambient(), target, atol=3.0 * np.max(est.stderr) + 1e-12),
                      f"({est.ambient()})")
    diff = np.abs(estimates[0].mean - estimates[1].mean)
    combined = 3.0 * np.sqrt(estimates[0].stderr ** 2 + estimates[1].stderr ** 2)
    ok &= _report("t0 일치", bool(np.all(diff <= combined)))
    return ok


def run_ibp(engine: MonteCarloEngine) -> bool:
    """sphere(3,1) 부분적분 잔차"""
    print("🚀 부분적분 점검")
    model = make_manifold('sphere:N=3,rho=1')
    F = CylinderFunction([1.0], 'x3', 3)
    h = CameronMartinPath.linear([1.0, 0.0])
    est = ibp_residual(model, model.origin(), h, F, 1.0, McParams(dt=1e-3, n_paths=100_000, seed=10), engine)
    mean, se = est['residual']
    return _report("잔차", abs(mean) <= 3.0 * se, f"({mean:.2e} ± {se:.2e})")


def run_clark_ocone(engine: MonteCarloEngine) -> bool:
    """평평한 Clark-Ocone 결함의 1차 감소"""
    print("🚀 Clark-Ocone 점검")
    ok = True
    dts = [1e-2, 5e-3, 2.5e-3]
    for expr in ('x1', 'x1**2', 'x1**3'):
        defects = [clark_ocone_check(expr, 1, 1.0, McParams(dt=dt, n_paths=20_000, seed=11), engine)['defect_sq'][0]
                   for dt in dts]
        if expr == 'x1':
            ok &= _report(expr, max(defects) <= 1e-20, f"({max(defects):.2e})")
        else:
            slope = fit_loglog_slope(dts, defects)
            ok &= _report(expr, slope >= 0.8, f"(기울기 {slope:.2f})")
    return ok


def run_malliavin(engine: MonteCarloEngine) -> bool:
    """괄호 계수와 축약 공분산"""
    print("🚀 말리아뱅 진단 점검")
    heis = make_system('heisenberg')
    report = hormander_rank(bracket_table(heis, 2), heis.origin)
    ok = _report("Heisenberg 계수", report.ranks == (2, 3) and report.level_achieved == 2, f"{report.ranks}")
    degenerate = make_system('degenerate-2d')
    ok &= _report("degenerate-2d", not hormander_rank(bracket_table(degenerate, 4), degenerate.origin).satisfied)

    elliptic = make_system('elliptic-flat')
    sample = reduced_covariance(elliptic, sample_drivers(2, 1.0, 1e-3, 12, range(4)))
    ok &= _report("C̄_t = tI", np.allclose(sample.covariance, np.eye(2), atol=1e-10))

    table = nondegeneracy_report(heis, 1.0, McParams(dt=1e-3, n_paths=10_000, seed=13),
                                 [1e-1, 1e-2, 1e-3, 1e-4, 1e-5], engine)
    ok &= _report("Heisenberg 비퇴화", bool(table['frac_lambda_min'].iloc[-1] < 1.0), f"\n{table}")
    return ok


def run_determinism() -> bool:
    """같은 시드, 다른 워커 수에서 바이트 동일 CSV"""
    print("🚀 재현성 점검")
    with tempfile.TemporaryDirectory() as tmp:
        outputs = []
        for workers in (1, 2):
            out = os.path.join(tmp, f"heat_{workers}.csv")
            cli_main(['heat', '--manifold', 'sphere:N=3,rho=1', '--function', 'x3', '--t', '0.5',
                      '--dt', '1e-2', '--paths', '4000', '--chunk-size', '500', '--seed', '42',
                      '--workers', str(workers), '--out', out])
            outputs.append(out)
        return _report("바이트 동일", filecmp.cmp(outputs[0], outputs[1], shallow=False))


SCENARIOS = {
    '1': ('기하 오라클', lambda engine: run_geometry_oracles()),
    '2': ('Bochner-Weitzenböck', lambda engine: run_bochner()),
    '3': ('평행이동', lambda engine: run_transport()),
    '4': ('전개 왕복', lambda engine: run_development()),
    '5': ('구면 브라운 운동', run_sphere_bm),
    '6': ('Wong-Zakai 차수', lambda engine: run_wong_zakai()),
    '7': ('Bismut 공식', run_bismut),
    '8': ('부분적분', run_ibp),
    '9': ('Clark-Ocone', run_clark_ocone),
    '10': ('말리아뱅 진단', run_malliavin),
    '11': ('재현성', lambda engine: run_determinism()),
}


def main():
    """메인 함수"""
    print("🚀 curved-wiener 수락 시나리오")
    print("=" * 60)
    engine = MonteCarloEngine.from_settings()

    if len(sys.argv) > 1:
        choices = list(SCENARIOS) if sys.argv[1] == 'all' else sys.argv[1:]
    else:
        for key, (name, _) in SCENARIOS.items():
            print(f"{key}) {name}")
        choice = input("\n선택 (번호 또는 all): ").strip()
        choices = list(SCENARIOS) if choice == 'all' else [choice]

    results = {}
    for key in choices:
        if key not in SCENARIOS:
            print(f"잘못된 선택입니다: {key}")
            continue
        name, scenario = SCENARIOS[key]
        try:
            results[name] = scenario(engine)
        except Exception as e:
            print(f"❌ {name} 오류: {e}")
            results[name] = False

    print("\n📊 결과 요약")
    for name, passed in results.items():
        print(f"   {'✅' if passed else '❌'} {name}")
    return 0 if results and all(results.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
