# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/21 16:40
Desc: 双摆切换系统的向量场与跳变映射
Full 为原始变量 (θ, φ) 下的非线性模型, 斜坡 γ;
Expanded 为缩放变量 (Θ, Φ) 下按 δ 展开的模型, 丢弃高阶余项
"""

import math
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np

from bipedtools.core.errors import DomainError, GuardViolationError

GUARD_TOL = 1e-9

VectorField = Callable[[float, np.ndarray], np.ndarray]


class State4(NamedTuple):
    """
    混合系统的完整状态: 支撑腿角度/角速度, 两腿夹角/角速度
    """

    theta: float
    theta_dot: float
    phi: float
    phi_dot: float


class SlopeParam(NamedTuple):
    delta: float

    @property
    def gamma(self) -> float:
        return self.delta**1.5

    @classmethod
    def from_delta(cls, delta: float) -> "SlopeParam":
        if not math.isfinite(delta) or delta < 0:
            raise DomainError(f"delta must be finite and >= 0, got {delta!r}")
        return cls(float(delta))


class ModelForm(str, Enum):
    FULL = "full"
    EXPANDED = "expanded"


def _as_state(s: Sequence[float]) -> np.ndarray:
    arr = np.asarray(s, dtype=float)
    if arr.shape != (4,):
        raise DomainError(f"state must have 4 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"state must be finite, got {arr.tolist()}")
    return arr


def _full_rhs(y: np.ndarray, gamma: float) -> np.ndarray:
    theta, theta_dot, phi, phi_dot = y
    theta_ddot = math.sin(theta - gamma)
    sin_phi = math.sin(phi)
    phi_ddot = (
        theta_ddot + theta_dot**2 * sin_phi - math.cos(theta - gamma) * sin_phi
    )
    return np.array([theta_dot, theta_ddot, phi_dot, phi_ddot])


def _expanded_rhs(y: np.ndarray, delta: float) -> np.ndarray:
    theta, theta_dot, phi, phi_dot = y
    theta_ddot = theta - delta - delta * theta**3 / 6.0
    phi_ddot = (
        theta_ddot
        - phi
        + delta * (theta_dot**2 * phi + 0.5 * theta**2 * phi + phi**3 / 6.0)
    )
    return np.array([theta_dot, theta_ddot, phi_dot, phi_ddot])


def eval_full_field(s: Sequence[float], gamma: float) -> np.ndarray:
    """
    原始模型的向量场
    :param s: 状态 (θ, θ̇, φ, φ̇)
    :type s: Sequence[float]
    :param gamma: 斜坡角 γ
    :type gamma: float
    :return: 状态导数
    :rtype: numpy.ndarray
    """
    arr = _as_state(s)
    if not math.isfinite(gamma):
        raise DomainError(f"gamma must be finite, got {gamma!r}")
    return _full_rhs(arr, gamma)


def eval_expanded_field(s: Sequence[float], delta: float) -> np.ndarray:
    """
    展开模型的向量场
    Θ̈ = Θ − δ − δΘ³/6
    Φ̈ = Θ̈ − Φ + δ(Θ̇²Φ + Θ²Φ/2 + Φ³/6)
    :param s: 缩放状态 (Θ, Θ̇, Φ, Φ̇)
    :type s: Sequence[float]
    :param delta: 展开参数 δ
    :type delta: float
    :return: 状态导数
    :rtype: numpy.ndarray
    """
    arr = _as_state(s)
    SlopeParam.from_delta(delta)
    return _expanded_rhs(arr, delta)


def guard(s: Sequence[float]) -> tuple[float, float]:
    """
    脚跟着地切换面 φ = 2θ
    :return: (value, rate), value = φ − 2θ, rate 为其沿轨线的时间导数
    :rtype: tuple
    """
    theta, theta_dot, phi, phi_dot = np.asarray(s, dtype=float)
    return float(phi - 2.0 * theta), float(phi_dot - 2.0 * theta_dot)


def _check_on_guard(s: np.ndarray, guard_tol: float) -> None:
    value, _ = guard(s)
    if abs(value) > guard_tol:
        raise GuardViolationError(
            f"jump requested off the guard: |phi - 2 theta| = {abs(value):.3e} "
            f"> {guard_tol:.1e}"
        )


def apply_jump_full(s: Sequence[float], guard_tol: float = GUARD_TOL) -> State4:
    """
    原始模型的跳变: 支撑腿与摆动腿交换角色
    """
    arr = _as_state(s)
    _check_on_guard(arr, guard_tol)
    theta, theta_dot = arr[0], arr[1]
    c2 = math.cos(2.0 * theta)
    return State4(
        float(-theta),
        float(c2 * theta_dot),
        float(-2.0 * theta),
        float((1.0 - c2) * c2 * theta_dot),
    )


def apply_jump_expanded(
    s: Sequence[float], delta: float, guard_tol: float = GUARD_TOL
) -> State4:
    """
    展开模型的跳变, 第四分量截断到 δ 的一阶 (2δΘ²Θ̇)
    """
    arr = _as_state(s)
    SlopeParam.from_delta(delta)
    _check_on_guard(arr, guard_tol)
    theta, theta_dot = arr[0], arr[1]
    return State4(
        float(-theta),
        float((1.0 - 2.0 * delta * theta**2) * theta_dot),
        float(-2.0 * theta),
        float(2.0 * delta * theta**2 * theta_dot),
    )


def section_state(
    theta: float, omega: float, delta: float, model: ModelForm
) -> State4:
    """
    截面点 (θ, ω) 对应的跳变后初始状态
    Expanded: (θ, ω, 2θ, 2δθ²ω), 缩放变量
    Full: 先按 √δ 缩放为原始变量, 再取 (θ, ω, 2θ, (1 − cos 2θ)ω)
    """
    if model is ModelForm.EXPANDED:
        return State4(theta, omega, 2.0 * theta, 2.0 * delta * theta**2 * omega)
    scale = math.sqrt(delta)
    th, om = scale * theta, scale * omega
    return State4(th, om, 2.0 * th, (1.0 - math.cos(2.0 * th)) * om)


def make_field(model: ModelForm, delta: float) -> VectorField:
    """
    生成 solve_ivp/DOP853 所需的 f(t, y)
    """
    SlopeParam.from_delta(delta)
    if model is ModelForm.FULL:
        if delta <= 0:
            raise DomainError("the full model needs delta > 0 (gamma = delta^1.5)")
        gamma = delta**1.5

        def full(t: float, y: np.ndarray) -> np.ndarray:
            return _full_rhs(y, gamma)

        return full

    def expanded(t: float, y: np.ndarray) -> np.ndarray:
        return _expanded_rhs(y, delta)

    return expanded


def apply_jump(s: Sequence[float], delta: float, model: ModelForm) -> State4:
    if model is ModelForm.FULL:
        return apply_jump_full(s)
    return apply_jump_expanded(s, delta)


def state_scale(delta: float, model: ModelForm) -> float:
    """原始变量 = scale × 缩放变量"""
    return math.sqrt(delta) if model is ModelForm.FULL else 1.0
