# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/28 16:00
Desc: δ=0 解析公式测试文件
运行 `python -m pytest tests/test_closedform.py` 进行测试
"""
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from bipedtools.core.closedform import (
    alpha,
    alpha2,
    f_coefficients,
    f_eval,
    family_point,
    find_step_period_roots,
    guard_function,
    h_coefficients,
    h_eval,
    monomials,
    step_period_residual,
    step_period_roots,
    symmetric_gait_residual,
    symmetric_gait_roots,
    t2,
    unperturbed_acceleration,
    unperturbed_return_time,
    unperturbed_solution,
)
from bipedtools.core.dynamics import ModelForm, make_field
from bipedtools.core.errors import DomainError, NoHeelstrikeError
from bipedtools.core.integrate import IntegratorOptions, integrate_to_heelstrike

SAMPLE_POINTS = [(1.0, -1.1), (0.7, -0.3), (-0.4, 0.9), (2.0, 1.5)]


def test_step_period_roots() -> None:
    roots = step_period_roots()
    assert roots.t1 == pytest.approx(math.pi, abs=1e-8)
    assert roots.t2 == pytest.approx(3.81209, abs=1e-5)
    for T in roots:
        assert abs(step_period_residual(T)) < 1e-8


def test_roots_info_on_default_interval() -> None:
    roots = find_step_period_roots()
    assert len(roots) == 2
    assert not roots[0].symmetric
    selected = roots[1]
    assert selected.alpha == pytest.approx(-1.045203, abs=1e-6)
    assert selected.symmetric


def test_no_roots_on_4_6() -> None:
    assert find_step_period_roots(4.0, 6.0) == []


def test_root_interval_validation() -> None:
    with pytest.raises(DomainError):
        find_step_period_roots(2.0, 1.0)
    with pytest.raises(DomainError):
        find_step_period_roots(0.0, 1.0)


def test_alpha() -> None:
    assert alpha2() == pytest.approx(-1.045203, abs=1e-6)
    assert alpha(math.pi) == pytest.approx(-1.09033, abs=1e-5)
    assert alpha(1.0) == pytest.approx(-(1 + math.e) / (math.e - 1), rel=1e-14)
    with pytest.raises(DomainError):
        alpha(0.0)


def test_symmetric_gait_residual_formula() -> None:
    """
    −1.5339e^{−t} + 0.0339021e^{t} + 1.5cos t + 0.522601 sin t
    """
    t = np.linspace(0.0, t2(), 50)
    expected = (
        -1.5339 * np.exp(-t)
        + 0.0339021 * np.exp(t)
        + 1.5 * np.cos(t)
        + 0.522601 * np.sin(t)
    )
    np.testing.assert_allclose(symmetric_gait_residual(t), expected, atol=1e-4)


def test_symmetric_gait_root_at_half_period() -> None:
    roots = symmetric_gait_roots()
    assert len(roots) == 1
    assert roots[0] == pytest.approx(0.5 * t2(), abs=1e-9)
    assert symmetric_gait_residual(t2()) == pytest.approx(0.0, abs=1e-9)


def test_family_point() -> None:
    point = family_point(2.0)
    assert point.s == 2.0
    assert point.point.theta == 2.0
    assert point.point.omega == pytest.approx(2.0 * alpha2(), rel=1e-15)


def test_unperturbed_solution_initial_values() -> None:
    for theta, omega in SAMPLE_POINTS:
        sol = unperturbed_solution(0.0, theta, omega)
        np.testing.assert_allclose(sol, (theta, omega, 2 * theta, 0.0), atol=1e-15)


def test_unperturbed_solution_satisfies_field() -> None:
    """
    Θ̈ = Θ, Φ̈ = Θ − Φ, 用数值积分对照
    """
    theta, omega = 0.7, -0.3

    def field(t, y):
        return [y[1], y[0], y[3], y[0] - y[2]]

    sol = solve_ivp(field, (0, 3), [theta, omega, 2 * theta, 0.0], rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(
        sol.y[:, -1], unperturbed_solution(3.0, theta, omega), atol=1e-9
    )
    acc = unperturbed_acceleration(3.0, theta, omega)
    exact = unperturbed_solution(3.0, theta, omega)
    assert acc[0] == pytest.approx(exact[0], rel=1e-14)
    assert acc[1] == pytest.approx(exact[0] - exact[2], abs=1e-12)


def test_guard_function_matches_solution() -> None:
    t = np.linspace(0, 4, 11)
    sol = unperturbed_solution(t, 1.0, -1.1)
    np.testing.assert_allclose(guard_function(t, 1.0, -1.1), sol[2] - 2 * sol[0], atol=1e-12)


def test_unperturbed_return_time() -> None:
    assert unperturbed_return_time(1.0, alpha2()) == pytest.approx(t2(), abs=1e-10)
    # 飞行时间对 (θ, ω) 零阶齐次
    assert unperturbed_return_time(3.0, 3.0 * alpha2()) == pytest.approx(t2(), abs=1e-10)
    assert unperturbed_return_time(0.0, 0.0) == t2()
    with pytest.raises(NoHeelstrikeError):
        unperturbed_return_time(1.0, 0.0)


def _return_time_or_error(fn):
    try:
        return fn()
    except NoHeelstrikeError:
        return "no-heelstrike"


@pytest.mark.parametrize(
    "options",
    [
        IntegratorOptions(),
        IntegratorOptions(theta_margin_factor=1.5),
        IntegratorOptions(grazing_rate_factor=10.0),
        IntegratorOptions(theta_margin_factor=0.01, t_max=3.0),
    ],
)
def test_return_time_follows_integrator_options(options) -> None:
    """
    解析飞行时间与积分器使用同一套着地接受规则
    """
    field = make_field(ModelForm.EXPANDED, 0.0)
    for theta, omega in [(1.0, alpha2()), (1.0, -1.1)]:
        s0 = (theta, omega, 2.0 * theta, 0.0)
        numeric = _return_time_or_error(
            lambda: integrate_to_heelstrike(field, s0, options).t_event
        )
        closed = _return_time_or_error(
            lambda: unperturbed_return_time(theta, omega, **options.acceptance())
        )
        if numeric == "no-heelstrike" or closed == "no-heelstrike":
            assert numeric == closed
        else:
            assert closed == pytest.approx(numeric, abs=1e-8)


def test_h_f_coefficients_at_t2() -> None:
    np.testing.assert_allclose(
        h_coefficients(t2()), (-21.6335, -236.869, -717.864, -726.524, -246.471), rtol=1e-4
    )
    np.testing.assert_allclose(
        f_coefficients(t2()), (-11.7085, 669.091, 1793.6, 1582.73, 458.155), rtol=1e-4
    )


@pytest.mark.parametrize("theta,omega", SAMPLE_POINTS)
def test_h_f_initial_conditions(theta, omega) -> None:
    h, h_dot, _ = h_eval(0.0, theta, omega)
    f, f_dot = f_eval(0.0, theta, omega)
    assert h == pytest.approx(0.0, abs=1e-12)
    assert h_dot == pytest.approx(0.0, abs=1e-12)
    assert f == pytest.approx(0.0, abs=1e-12)
    assert f_dot == pytest.approx(2 * theta**2 * omega, abs=1e-12)


@pytest.mark.parametrize("theta,omega", SAMPLE_POINTS)
def test_h_f_differential_equations(theta, omega) -> None:
    """
    ḧ − h + 1 + Θ³/6 = 0
    f̈ + f = ḧ + Θ̇²Φ + Θ²Φ/2 + Φ³/6
    """
    m = monomials(theta, omega)
    for t in (0.3, 1.7, 3.0, 4.5):
        big_theta, big_theta_dot, big_phi, _ = unperturbed_solution(t, theta, omega)
        h, _, h_ddot = h_eval(t, theta, omega)
        scale = max(1.0, abs(h_ddot))
        assert h_ddot - h + 1 + big_theta**3 / 6 == pytest.approx(0.0, abs=1e-9 * scale)
        f, _ = f_eval(t, theta, omega)
        f_ddot = float(f_coefficients(t, 2) @ m)
        rhs = (
            h_ddot
            + big_theta_dot**2 * big_phi
            + 0.5 * big_theta**2 * big_phi
            + big_phi**3 / 6
        )
        assert f_ddot + f == pytest.approx(rhs, abs=1e-9 * max(1.0, abs(rhs)))


def _variational_points() -> list[tuple[float, float]]:
    rng = np.random.default_rng(2024)
    return [(1.0, alpha2())] + [tuple(p) for p in rng.uniform(-2, 2, (20, 2))]


@pytest.mark.parametrize("theta,omega", _variational_points())
def test_h_f_against_variational_system(theta, omega) -> None:
    """
    直接积分展开模型对 δ 的变分方程
    """

    def field(t, y):
        big_theta, big_theta_dot, big_phi, big_phi_dot, h, h_dot, f, f_dot = y
        h_ddot = h - 1 - big_theta**3 / 6
        f_ddot = (
            -f
            + h_ddot
            + big_theta_dot**2 * big_phi
            + 0.5 * big_theta**2 * big_phi
            + big_phi**3 / 6
        )
        return [
            big_theta_dot,
            big_theta,
            big_phi_dot,
            big_theta - big_phi,
            h_dot,
            h_ddot,
            f_dot,
            f_ddot,
        ]

    y0 = [theta, omega, 2 * theta, 0.0, 0.0, 0.0, 0.0, 2 * theta**2 * omega]
    times = np.linspace(0.0, t2(), 40)
    sol = solve_ivp(field, (0, t2()), y0, t_eval=times, rtol=1e-12, atol=1e-12)
    closed = np.array(
        [h_eval(t, theta, omega)[:2] + f_eval(t, theta, omega) for t in times]
    ).T
    numeric = sol.y[4:]
    # 按各分量在 [0, T₂] 上的最大模取相对误差
    scale = np.maximum(1.0, np.abs(numeric).max(axis=1))
    error = np.abs(closed - numeric).max(axis=1)
    assert np.all(error <= 1e-7 * scale)


def test_negative_derivative_order() -> None:
    with pytest.raises(DomainError):
        h_coefficients(1.0, -1)
