# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/29 9:15
Desc: Poincaré 映射及其导数测试文件
运行 `python -m pytest tests/test_poincare.py` 进行测试
"""
import numpy as np
import pytest

from bipedtools.core.closedform import alpha2, t2
from bipedtools.core.dynamics import ModelForm
from bipedtools.core.errors import DomainError, SingularityError
from bipedtools.core.integrate import IntegratorOptions
from bipedtools.core.melnikov import family_structure
from bipedtools.core.poincare import (
    clear_map_cache,
    dP_ddelta,
    dPdelta_dstate,
    dT_ddelta,
    dT_dstate,
    jacobian_state,
    map_derivatives,
    poincare_map,
    time_of_flight,
    unperturbed_map,
)

TIGHT = IntegratorOptions().tightened(1e-12)
FAMILY_JACOBIAN = np.array([[-5.07075, -5.8082], [5.8082, 6.55701]])


def family(theta: float) -> tuple[float, float]:
    return theta, alpha2() * theta


def test_family_points_are_fixed() -> None:
    for theta in (0.5, 1.0, 2.0):
        result = poincare_map(family(theta), 0.0)
        np.testing.assert_allclose(result.image, family(theta), atol=1e-7 * theta)
        assert result.T == pytest.approx(t2(), abs=1e-7)
        assert result.n_rejected_grazings == 1


def test_map_homogeneous_at_zero_delta() -> None:
    p = np.array([1.0, -1.1])
    image = np.array(poincare_map(p, 0.0).image)
    doubled = np.array(poincare_map(2 * p, 0.0).image)
    np.testing.assert_allclose(doubled, 2 * image, atol=1e-7)
    assert time_of_flight(2 * p, 0.0) == pytest.approx(time_of_flight(p, 0.0), abs=1e-8)


def test_unperturbed_map_matches_integration() -> None:
    for p in ((1.0, -1.1), (0.5, -0.52), family(1.5)):
        np.testing.assert_allclose(
            unperturbed_map(p), poincare_map(p, 0.0).image, atol=1e-7
        )
    assert unperturbed_map((0.0, 0.0)) == (0.0, 0.0)


def test_post_jump_state_on_guard() -> None:
    result = poincare_map(family(1.0), 0.01)
    post = result.post_jump_state
    assert post.phi == pytest.approx(2 * post.theta, abs=1e-12)
    assert result.image == (post.theta, post.theta_dot)
    assert result.model is ModelForm.EXPANDED


def test_map_input_validation() -> None:
    with pytest.raises(DomainError):
        poincare_map((0.0, 0.0), 0.01)
    with pytest.raises(DomainError):
        poincare_map((1.0, -1.0), 0.0, ModelForm.FULL)
    with pytest.raises(DomainError):
        poincare_map((float("nan"), -1.0), 0.01)
    with pytest.raises(DomainError):
        poincare_map((1.0, -1.1), -0.01)


def test_map_cache() -> None:
    clear_map_cache()
    first = poincare_map((1.2, -1.3), 0.02)
    assert poincare_map((1.2, -1.3), 0.02) is first
    clear_map_cache()
    assert poincare_map((1.2, -1.3), 0.02) is not first
    dense = poincare_map((1.2, -1.3), 0.02, dense=True)
    assert dense.dense is not None


def test_full_vs_expanded_second_order() -> None:
    """
    原始模型与展开模型的映射之差为 O(δ²)
    """
    p = family(1.0)

    def gap(delta: float) -> float:
        full = np.array(poincare_map(p, delta, ModelForm.FULL, TIGHT).image)
        expanded = np.array(poincare_map(p, delta, ModelForm.EXPANDED, TIGHT).image)
        return float(np.linalg.norm(full - expanded))

    ratio = gap(2e-3) / gap(1e-3)
    assert 2.5 < ratio < 6.0


def test_analytic_family_jacobian() -> None:
    for theta in (0.5, 1.0, 3.0):
        np.testing.assert_allclose(
            jacobian_state(family(theta), 0.0), FAMILY_JACOBIAN, atol=1e-4
        )


def test_analytic_vs_fd_jacobian() -> None:
    for p in (family(1.0), (1.0, -1.1)):
        analytic = jacobian_state(p, 0.0, method="analytic")
        fd = jacobian_state(p, 0.0, method="fd")
        np.testing.assert_allclose(fd, analytic, atol=1e-4)


def test_jacobian_method_validation() -> None:
    with pytest.raises(DomainError):
        jacobian_state(family(1.0), 0.01, method="analytic")
    with pytest.raises(DomainError):
        jacobian_state(family(1.0), 0.01, method="fd", fd_step=0.0)


def test_dT_dstate() -> None:
    np.testing.assert_allclose(dT_dstate(family(1.0)), (16.8032, 16.0765), atol=1e-3)
    p = np.array([1.0, -1.1])
    h = 1e-6
    fd = [
        (
            time_of_flight(p + e, 0.0, opts=TIGHT) - time_of_flight(p - e, 0.0, opts=TIGHT)
        )
        / (2 * h)
        for e in (np.array([h, 0.0]), np.array([0.0, h]))
    ]
    np.testing.assert_allclose(dT_dstate(p), fd, rtol=1e-4)
    with pytest.raises(DomainError):
        dT_dstate((0.0, 1.0))


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_dP_ddelta_on_family(theta) -> None:
    """
    P_δ = (5.85426 + 0.348762θ³, −7.51458 + 1.75673θ³)
    """
    expected = (5.85426 + 0.348762 * theta**3, -7.51458 + 1.75673 * theta**3)
    np.testing.assert_allclose(dP_ddelta(family(theta)), expected, atol=2e-4 * max(1, theta**3))


def test_dP_ddelta_against_integration() -> None:
    p = (1.0, -1.1)
    base = np.array(poincare_map(p, 0.0, opts=TIGHT).image)

    def quotient(delta: float) -> np.ndarray:
        return (np.array(poincare_map(p, delta, opts=TIGHT).image) - base) / delta

    extrapolated = 2 * quotient(5e-5) - quotient(1e-4)
    np.testing.assert_allclose(dP_ddelta(p), extrapolated, rtol=1e-3)


def test_dT_ddelta_closed_form() -> None:
    """
    T_δ = (0.940403 + 34.0548ω³ + 96.2296ω²θ + 90.4622ωθ² + 28.3414θ³)/(ω + 0.982912θ)
    """

    def formula(theta: float, omega: float) -> float:
        numerator = (
            0.940403
            + 34.0548 * omega**3
            + 96.2296 * omega**2 * theta
            + 90.4622 * omega * theta**2
            + 28.3414 * theta**3
        )
        return numerator / (omega + 0.982912 * theta)

    frozen = dT_ddelta((1.0, 0.0), frozen_period=True)
    assert frozen == pytest.approx(formula(1.0, 0.0), rel=1e-4)
    assert dT_ddelta(family(1.0)) == pytest.approx(formula(*family(1.0)), rel=1e-3)
    assert dT_ddelta(family(1.0)) == pytest.approx(-15.6, abs=0.1)
    # 不动点族上冻结周期与真实周期一致
    assert dT_ddelta(family(1.0), frozen_period=True) == pytest.approx(
        dT_ddelta(family(1.0)), rel=1e-8
    )
    with pytest.raises(SingularityError):
        dT_ddelta((0.0, 0.0))


def test_dT_ddelta_matches_integration_off_family() -> None:
    """
    离开不动点族时 T_δ 取 p 自身的飞行时间, 与 P_δ 一致
    """
    p = (1.0, -1.1)
    base = time_of_flight(p, 0.0, opts=TIGHT)

    def quotient(delta: float) -> float:
        return (time_of_flight(p, delta, opts=TIGHT) - base) / delta

    extrapolated = 2 * quotient(5e-5) - quotient(1e-4)
    assert dT_ddelta(p) == pytest.approx(extrapolated, rel=1e-3)
    assert map_derivatives(p).dT_ddelta == pytest.approx(dT_ddelta(p))
    assert dT_ddelta(p, frozen_period=True) != pytest.approx(dT_ddelta(p), rel=1e-3)


def test_frozen_mixed_derivative() -> None:
    """
    θ=1 的参考矩阵: 第一行与 frozen 一致,
    第二行相差 c·T_(θ,ω) (c ≈ 7.888), 该项在族方向 y 上为零
    """
    reference = np.array([[214.649, 204.365], [-116.234, -116.250]])
    frozen = dPdelta_dstate(family(1.0), "frozen")
    np.testing.assert_allclose(frozen[0], reference[0], atol=2e-2)

    gap = frozen[1] - reference[1]
    t_x = dT_dstate(family(1.0))
    assert gap[0] / t_x[0] == pytest.approx(gap[1] / t_x[1], rel=1e-3)
    assert gap[0] / t_x[0] == pytest.approx(-7.888, abs=0.01)

    structure = family_structure()
    assert gap @ structure.y == pytest.approx(0.0, abs=0.1)
    assert structure.z @ frozen @ structure.y == pytest.approx(
        structure.z @ reference @ structure.y, abs=0.1
    )


def test_exact_mixed_derivative_matches_fd() -> None:
    p = np.array(family(1.0))
    step = 1e-5
    columns = []
    for i in range(2):
        e = np.zeros(2)
        e[i] = step
        columns.append((dP_ddelta(p + e) - dP_ddelta(p - e)) / (2 * step))
    np.testing.assert_allclose(
        dPdelta_dstate(p, "exact"), np.column_stack(columns), rtol=1e-5, atol=1e-4
    )


def test_mixed_derivative_variants_agree_on_z() -> None:
    """
    两种混合导数相差一个被 z 消去的秩一项
    """
    z = family_structure().z
    for theta in (0.5, 1.0, 2.0):
        exact = dPdelta_dstate(family(theta), "exact")
        frozen = dPdelta_dstate(family(theta), "frozen")
        np.testing.assert_allclose(z @ exact, z @ frozen, atol=1e-8 * np.abs(exact).max())


def test_mixed_derivative_validation() -> None:
    with pytest.raises(DomainError):
        dPdelta_dstate((0.0, 1.0))
    with pytest.raises(DomainError):
        dPdelta_dstate(family(1.0), "other")


def test_map_derivatives() -> None:
    analytic = map_derivatives(family(1.0))
    assert analytic.method == "analytic-delta0"
    np.testing.assert_allclose(analytic.dP_dstate, FAMILY_JACOBIAN, atol=1e-4)
    assert analytic.dT_ddelta == pytest.approx(dT_ddelta(family(1.0)))

    numeric = map_derivatives(family(1.0), 0.01)
    assert numeric.method == "finite-difference"
    assert numeric.dP_ddelta is None
    assert numeric.dP_dstate.shape == (2, 2)
    assert np.all(np.isfinite(numeric.dT_dstate))
