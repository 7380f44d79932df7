# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/29 15:40
Desc: 分岔条件测试文件
运行 `python -m pytest tests/test_melnikov.py` 进行测试
"""
import math

import numpy as np
import pytest

from bipedtools.core.closedform import alpha2, t2
from bipedtools.core.dynamics import ModelForm
from bipedtools.core.errors import BracketError, DegeneracyError, DomainError, StructureError
from bipedtools.core.integrate import IntegratorOptions
from bipedtools.core.melnikov import (
    build_report,
    check_family_z_independence,
    check_second_derivative_degeneracy,
    eigenstructure_2x2,
    family_jacobian,
    family_structure,
    melnikov_slope,
    melnikov_slope_fd,
    melnikov_slope_unit_y,
    necessary_condition_coefficients,
    necessary_condition_fn,
    rot90,
    solve_theta0,
)

THETA0 = 0.970956


@pytest.fixture(scope="module")
def structure():
    return family_structure()


def test_family_structure(structure) -> None:
    assert structure.rho == pytest.approx(0.48626, abs=1e-5)
    np.testing.assert_allclose(structure.z, (-0.69131, -0.722559), atol=1e-5)
    np.testing.assert_allclose(structure.y, (15.6468, -16.3541), rtol=1e-4)


def test_structure_normalisation(structure) -> None:
    assert np.linalg.norm(structure.z) == pytest.approx(1.0, rel=1e-14)
    assert structure.z @ structure.y == pytest.approx(1.0, rel=1e-12)
    assert structure.z_tilde @ structure.y_tilde == pytest.approx(1.0, rel=1e-12)
    assert structure.z @ structure.y_tilde == pytest.approx(0.0, abs=1e-12)
    assert structure.z_tilde @ structure.y == pytest.approx(0.0, abs=1e-12)
    assert np.linalg.norm(structure.y_tilde) == pytest.approx(1.0, rel=1e-14)


def test_structure_eigenvectors(structure) -> None:
    M = family_jacobian()
    np.testing.assert_allclose(M @ structure.y, structure.y, atol=1e-8 * np.linalg.norm(structure.y))
    np.testing.assert_allclose(structure.z @ M, structure.z, atol=1e-8)
    np.testing.assert_allclose(M @ structure.y_tilde, structure.rho * structure.y_tilde, atol=1e-8)


def test_decompose(structure) -> None:
    zeta = np.array([0.3, -2.0])
    np.testing.assert_allclose(structure.decompose(zeta), zeta, atol=1e-12)


def test_y_along_family(structure) -> None:
    """
    y 与不动点族方向 (1, α(T₂)) 平行
    """
    direction = np.array([1.0, alpha2()])
    cross = structure.y[0] * direction[1] - structure.y[1] * direction[0]
    assert abs(cross) < 1e-8 * np.linalg.norm(structure.y)


def test_eigenstructure_diagonal() -> None:
    result = eigenstructure_2x2(np.diag([1.0, 0.5]))
    assert result.rho == pytest.approx(0.5)
    np.testing.assert_allclose(result.z, (-1.0, 0.0), atol=1e-15)
    np.testing.assert_allclose(result.y, (-1.0, 0.0), atol=1e-15)


def test_eigenstructure_failures() -> None:
    with pytest.raises(StructureError):
        eigenstructure_2x2(np.array([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(StructureError):
        eigenstructure_2x2(np.diag([0.9, 0.5]))
    with pytest.raises(DegeneracyError):
        eigenstructure_2x2(np.eye(2))
    with pytest.raises(DomainError):
        eigenstructure_2x2(np.eye(3))


def test_rot90() -> None:
    v = np.array([2.0, 3.0])
    assert rot90(v) @ v == 0.0


def test_z_independent_along_family() -> None:
    assert check_family_z_independence((1.0, 0.5, 2.0, 4.0)) < 1e-6


def test_z_dependence_detected() -> None:
    def rotating(s: float) -> np.ndarray:
        # 特征值 1 的左特征向量随 s 旋转
        c, si = math.cos(s), math.sin(s)
        R = np.array([[c, -si], [si, c]])
        return R @ np.diag([1.0, 0.5]) @ R.T

    assert check_family_z_independence((0.0, 0.3), rotating) == pytest.approx(0.3, abs=1e-9)


def test_necessary_condition(structure) -> None:
    """
    zᵀP_δ = 1.38262 − 1.51044θ³
    """
    coefficients = necessary_condition_coefficients(structure.z)
    assert coefficients.constant == pytest.approx(1.38262, abs=1e-4)
    assert coefficients.cubic == pytest.approx(-1.51044, abs=1e-4)
    theta = 1.7
    assert necessary_condition_fn(theta, structure.z) == pytest.approx(
        coefficients.constant + coefficients.cubic * theta**3, abs=1e-8
    )


def test_solve_theta0(structure) -> None:
    theta0 = solve_theta0(z=structure.z)
    assert theta0 == pytest.approx(THETA0, abs=1e-5)
    with pytest.raises(BracketError):
        solve_theta0((1.5, 2.0), structure.z)


def test_melnikov_slope(structure) -> None:
    slope = melnikov_slope(structure=structure)
    assert slope == pytest.approx(-66.84, abs=0.05)
    unit = melnikov_slope_unit_y(structure=structure)
    assert unit == pytest.approx(-2.95323, abs=1e-4)
    assert unit * np.linalg.norm(structure.y) == pytest.approx(slope, rel=1e-12)
    frozen = melnikov_slope(structure=structure, variant="frozen")
    assert frozen == pytest.approx(slope, rel=1e-8)


def test_melnikov_slope_fd(structure) -> None:
    slope = melnikov_slope(structure=structure)
    fd = melnikov_slope_fd(1e-3, structure=structure)
    assert fd == pytest.approx(slope, rel=0.03)
    with pytest.raises(DomainError):
        melnikov_slope_fd(0.0, structure=structure)


def test_second_derivative_degeneracy(structure) -> None:
    """
    无扰映射沿 y 方向是线性的
    """
    assert check_second_derivative_degeneracy(structure=structure) < 1e-3


@pytest.fixture(scope="module")
def report():
    return build_report()


def test_report_complete(report) -> None:
    assert report.complete
    assert report.errors == []
    assert report.T2 == pytest.approx(t2())
    assert report.theta0 == pytest.approx(THETA0, abs=1e-5)
    assert report.omega0 == pytest.approx(alpha2() * THETA0, abs=1e-5)
    assert report.melnikov_slope == pytest.approx(-66.84, abs=0.05)
    assert report.melnikov_slope_fd == pytest.approx(report.melnikov_slope, rel=0.03)


def test_report_verdicts(report) -> None:
    verdicts = report.verdicts
    assert verdicts.stable_unperturbed
    assert verdicts.necessary
    assert verdicts.sufficient
    assert verdicts.stable_branch
    assert verdicts.z_independent


def test_synthetic_report_without_root() -> None:
    """
    构造的映射: 必要条件在区间内无根
    """
    report = build_report(
        jacobian_fn=lambda s: np.diag([1.0, 0.5]),
        perturbation_fn=lambda theta: np.array([-(1.0 + theta**2), 0.0]),
        mixed_fn=lambda theta: np.eye(2),
    )
    assert not report.complete
    assert report.errors[0].stage == "necessary"
    assert report.errors[0].type == "BracketError"
    assert report.verdicts.stable_unperturbed
    assert not report.verdicts.necessary


def test_synthetic_report_unstable_branch() -> None:
    report = build_report(
        jacobian_fn=lambda s: np.diag([1.0, 0.5]),
        perturbation_fn=lambda theta: np.array([theta - 1.0, 0.0]),
        mixed_fn=lambda theta: np.array([[2.0, 0.0], [0.0, 0.0]]),
    )
    assert report.complete
    assert report.theta0 == pytest.approx(1.0)
    assert report.melnikov_slope == pytest.approx(2.0)
    assert report.verdicts.sufficient
    assert not report.verdicts.stable_branch


def test_synthetic_report_bad_structure() -> None:
    report = build_report(jacobian_fn=lambda s: np.diag([2.0, 0.5]))
    assert not report.complete
    assert report.errors[0].stage == "eigenstructure"
    assert report.theta0 is None


def test_synthetic_report_unstable_transverse_multiplier() -> None:
    """
    构造的映射: 横向乘子 ρ = 1.2, 无扰周期轨道不稳定
    """
    report = build_report(
        jacobian_fn=lambda s: np.diag([1.0, 1.2]),
        perturbation_fn=lambda theta: np.array([theta - 1.0, 0.0]),
        mixed_fn=lambda theta: np.diag([-2.0, 0.0]),
    )
    assert report.complete
    assert report.rho == pytest.approx(1.2)
    assert not report.verdicts.stable_unperturbed
    assert report.verdicts.necessary
    assert report.verdicts.stable_branch


def test_report_invariant_under_tolerance_halving(report) -> None:
    halved = build_report(opts=IntegratorOptions().scaled(0.5))
    assert halved.complete
    assert halved.rho == pytest.approx(report.rho, rel=1e-10)
    assert halved.theta0 == pytest.approx(report.theta0, rel=1e-10)
    assert halved.melnikov_slope == pytest.approx(report.melnikov_slope, rel=1e-10)
    assert halved.melnikov_slope_fd == pytest.approx(report.melnikov_slope_fd, rel=1e-3)
    assert halved.verdicts == report.verdicts


def test_slope_fd_invariant_under_step_halving(structure) -> None:
    theta0 = solve_theta0(z=structure.z)
    base = melnikov_slope_fd(1e-3, theta0, structure)
    assert melnikov_slope_fd(1e-3, theta0, structure, eps=5e-6) == pytest.approx(base, rel=1e-3)
    assert melnikov_slope_fd(5e-4, theta0, structure) == pytest.approx(base, rel=1e-2)


def test_slope_fd_full_model(structure) -> None:
    theta0 = solve_theta0(z=structure.z)
    full = melnikov_slope_fd(1e-3, theta0, structure, model=ModelForm.FULL)
    assert full == pytest.approx(melnikov_slope(theta0, structure), rel=0.05)
    assert full != melnikov_slope_fd(1e-3, theta0, structure)
