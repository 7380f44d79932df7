# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/22 10:15
Desc: δ=0 系统的解析公式
无扰解、不动点族斜率 α(T)、步周期方程、对称步态残差, 以及 δ 方向导数 h(t), f(t)
"""

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from bipedtools.core.errors import BracketError, DomainError, NoHeelstrikeError

ROOT_INTERVAL = (0.1, 2.0 * math.pi)
SCAN_STEP = 1e-2
ROOT_XTOL = 1e-12
THETA_MARGIN_FACTOR = 0.25
GRAZING_RATE_FACTOR = 1e-3


class SectionPoint(NamedTuple):
    """
    Poincaré 截面上的坐标 (θ, ω)
    """

    theta: float
    omega: float


class FamilyPoint(NamedTuple):
    s: float
    point: SectionPoint


class RootInfo(NamedTuple):
    T: float
    residual: float
    alpha: float
    symmetric: bool


class StepPeriodRoots(NamedTuple):
    t1: float
    t2: float


class GuardPartials(NamedTuple):
    """
    F(t, θ, ω) = Φ − 2Θ 及其偏导数, grad 为对 (θ, ω) 的梯度
    """

    value: float
    t: float
    tt: float
    grad: np.ndarray
    t_grad: np.ndarray


def unperturbed_solution(t, theta: float, omega: float) -> np.ndarray:
    """
    δ=0 时以 (θ, ω, 2θ, 0) 为初值的精确解
    Θ = θ cosh t + ω sinh t
    Φ = Θ/2 + (3θ/2) cos t − (ω/2) sin t
    :param t: 时间, 可以是数组
    :return: (Θ, Θ̇, Φ, Φ̇), 形状为 (4,) 或 (4, n)
    :rtype: numpy.ndarray
    """
    t = np.asarray(t, dtype=float)
    ch, sh = np.cosh(t), np.sinh(t)
    c, s = np.cos(t), np.sin(t)
    big_theta = theta * ch + omega * sh
    big_theta_dot = theta * sh + omega * ch
    big_phi = 0.5 * big_theta + 1.5 * theta * c - 0.5 * omega * s
    big_phi_dot = 0.5 * big_theta_dot - 1.5 * theta * s - 0.5 * omega * c
    return np.array([big_theta, big_theta_dot, big_phi, big_phi_dot])


def unperturbed_acceleration(t, theta: float, omega: float) -> np.ndarray:
    """(Θ̈, Φ̈), Θ̈ = Θ, Φ̈ = Θ/2 − (3θ/2) cos t + (ω/2) sin t"""
    t = np.asarray(t, dtype=float)
    big_theta = theta * np.cosh(t) + omega * np.sinh(t)
    oscillation = 1.5 * theta * np.cos(t) - 0.5 * omega * np.sin(t)
    return np.array([big_theta, 0.5 * big_theta - oscillation])


def state_sensitivity(t: float) -> np.ndarray:
    """∂(Θ, Θ̇)/∂(θ, ω), 与初值无关"""
    ch, sh = math.cosh(t), math.sinh(t)
    return np.array([[ch, sh], [sh, ch]])


def rate_sensitivity(t: float) -> np.ndarray:
    """∂(Θ̇, Θ̈)/∂(θ, ω)"""
    ch, sh = math.cosh(t), math.sinh(t)
    return np.array([[sh, ch], [ch, sh]])


def guard_function(t, theta: float, omega: float):
    """
    F(t, θ, ω) = Φ − 2Θ = (3θ/2) cos t − (ω/2) sin t − (3/2)Θ
    """
    t = np.asarray(t, dtype=float)
    big_theta = theta * np.cosh(t) + omega * np.sinh(t)
    return 1.5 * theta * np.cos(t) - 0.5 * omega * np.sin(t) - 1.5 * big_theta


def guard_partials(t: float, theta: float, omega: float) -> GuardPartials:
    ch, sh = math.cosh(t), math.sinh(t)
    c, s = math.cos(t), math.sin(t)
    big_theta = theta * ch + omega * sh
    big_theta_dot = theta * sh + omega * ch
    oscillation = 1.5 * theta * c - 0.5 * omega * s
    value = oscillation - 1.5 * big_theta
    f_t = -1.5 * theta * s - 0.5 * omega * c - 1.5 * big_theta_dot
    f_tt = -oscillation - 1.5 * big_theta
    grad = np.array([1.5 * c - 1.5 * ch, -0.5 * s - 1.5 * sh])
    t_grad = np.array([-1.5 * s - 1.5 * sh, -0.5 * c - 1.5 * ch])
    return GuardPartials(value, f_t, f_tt, grad, t_grad)


def alpha(T: float) -> float:
    """
    不动点族的斜率 α(T) = −(1 + e^T)/(e^T − 1) = −coth(T/2)
    :param T: 步周期
    :type T: float
    :return: ω/θ
    :rtype: float
    """
    if not T > 0:
        raise DomainError(f"alpha(T) needs T > 0, got {T!r}", stage="closedform")
    return -1.0 / math.tanh(0.5 * T)


def step_period_residual(T):
    """
    步周期方程左端 −3 + 3e^T + 3(e^T − 1) cos T + sin T + e^T sin T
    """
    T = np.asarray(T, dtype=float)
    e = np.exp(T)
    value = -3.0 + 3.0 * e + 3.0 * (e - 1.0) * np.cos(T) + (1.0 + e) * np.sin(T)
    return value if value.ndim else float(value)


def _scan_roots(func, lo: float, hi: float, step: float) -> list[float]:
    """
    等步长扫描符号变化, 再用 brentq 细化
    """
    n = max(int(math.ceil((hi - lo) / step)), 1)
    grid = np.linspace(lo, hi, n + 1)
    values = np.asarray(func(grid), dtype=float)
    roots = []
    for i in range(n):
        a, b = values[i], values[i + 1]
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(brentq(func, grid[i], grid[i + 1], xtol=ROOT_XTOL))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def _is_symmetric(T: float) -> bool:
    # 对称步态: 以 ω = α(T)θ 出发, 切换函数在 T/2 处为零
    return abs(float(guard_function(0.5 * T, 1.0, alpha(T)))) < 1e-8


def find_step_period_roots(
    lo: float = ROOT_INTERVAL[0], hi: float = ROOT_INTERVAL[1], step: float = SCAN_STEP
) -> list[RootInfo]:
    """
    在 [lo, hi] 内求步周期方程的所有根
    :param lo: 区间左端, 必须 > 0
    :type lo: float
    :param hi: 区间右端
    :type hi: float
    :param step: 扫描步长
    :type step: float
    :return: 根的列表, 按从小到大排列
    :rtype: list
    """
    if not (0 < lo < hi) or not math.isfinite(hi):
        raise DomainError(
            f"root interval must satisfy 0 < lo < hi, got ({lo}, {hi})",
            stage="closedform",
        )
    return [
        RootInfo(T, step_period_residual(T), alpha(T), _is_symmetric(T))
        for T in _scan_roots(step_period_residual, lo, hi, step)
    ]


@lru_cache()
def step_period_roots() -> StepPeriodRoots:
    roots = find_step_period_roots()
    if len(roots) != 2:
        raise BracketError(
            f"expected two step-period roots on (0.1, 2 pi), found {len(roots)}"
        )
    return StepPeriodRoots(roots[0].T, roots[1].T)


def t2() -> float:
    """步态周期 T₂"""
    return step_period_roots().t2


def alpha2() -> float:
    return alpha(t2())


def symmetric_gait_residual(t):
    """
    以 θ = 1, ω = α(T₂) 出发的 Φ − 2Θ
    """
    value = guard_function(t, 1.0, alpha2())
    return value if np.ndim(value) else float(value)


def symmetric_gait_roots(
    lo: float = 0.1, hi: float | None = None, step: float = 1e-3
) -> list[float]:
    hi = t2() - 0.1 if hi is None else hi
    return _scan_roots(symmetric_gait_residual, lo, hi, step)


def family_point(s: float) -> FamilyPoint:
    return FamilyPoint(s, SectionPoint(s, alpha2() * s))


def unperturbed_return_time(
    theta: float,
    omega: float,
    t_max: float | None = None,
    step: float = SCAN_STEP,
    theta_margin_factor: float = THETA_MARGIN_FACTOR,
    grazing_rate_factor: float = GRAZING_RATE_FACTOR,
) -> float:
    """
    δ=0 时的飞行时间: F 的第一个被接受的零点
    接受规则与积分器相同: Θ < −theta_margin_factor·|θ| 且 |F_t| ≥ grazing_rate_factor·|θ|,
    两个系数的默认值也是 IntegratorOptions 的默认值
    :param theta: 截面点 θ
    :type theta: float
    :param omega: 截面点 ω
    :type omega: float
    :param t_max: 搜索时限, 默认 3·T₂
    :type t_max: float
    :return: 飞行时间
    :rtype: float
    """
    if theta == 0.0 and omega == 0.0:
        # 原点是所有射线的公共极限, 取不动点族上的值
        return t2()
    t_max = 3.0 * t2() if t_max is None else t_max
    n = int(math.ceil(t_max / step))
    grid = np.linspace(0.0, t_max, n + 1)
    values = guard_function(grid, theta, omega)
    scale = abs(theta)

    def func(t: float) -> float:
        return float(guard_function(t, theta, omega))

    for i in range(n):
        if values[i] * values[i + 1] < 0:
            root = brentq(func, grid[i], grid[i + 1], xtol=ROOT_XTOL)
            big_theta = theta * math.cosh(root) + omega * math.sinh(root)
            partials = guard_partials(root, theta, omega)
            if (
                big_theta < -theta_margin_factor * scale
                and abs(partials.t) >= grazing_rate_factor * scale
            ):
                return root
    raise NoHeelstrikeError(
        f"no accepted unperturbed heelstrike for (theta, omega) = ({theta}, {omega})",
        stage="closedform",
    )


# ==============================================================================
# h(t), f(t): 展开模型解对 δ 的导数 (Θ_δ, Φ_δ) 在 δ=0 处的解析式
# 每一项为 coef · t^j · e^{kt} · {1, cos(mt), sin(mt)}, coef 为单项式
# [1, ω³, ω²θ, ωθ², θ³] 上的系数, 整体因子 e^{−3t}/384 与 e^{−3t}/7680 已并入
# ==============================================================================

_H_TABLE = (
    # (coef, j, k, m, use_sin)
    ((384, 0, 0, 0, 0), 0, 0, 0, False),
    ((0, 1, -3, 3, -1), 0, -3, 0, False),
    ((0, -1, -3, -3, -1), 0, 3, 0, False),
    ((-192, 9, 3, -21, 1), 0, -1, 0, False),
    ((0, 12, -12, -12, 12), 1, -1, 0, False),
    ((-192, -9, 3, 21, 1), 0, 1, 0, False),
    ((0, 12, 12, -12, -12), 1, 1, 0, False),
)

_F_TABLE = (
    ((0, -56, 168, -168, 56), 0, -3, 0, False),
    ((-1920, 60, 60, -780, 580), 0, -1, 0, False),
    ((-1920, -60, 60, 780, 580), 0, 1, 0, False),
    ((0, 56, 168, 168, 56), 0, 3, 0, False),
    ((0, 120, -120, -120, 120), 1, -1, 0, False),
    ((0, 120, 120, -120, -120), 1, 1, 0, False),
    ((0, -195, 975, -1365, 585), 0, -2, 1, False),
    ((0, 195, 975, 1365, 585), 0, 2, 1, False),
    ((3840, 0, -2763, 0, -2091), 0, 0, 1, False),
    ((0, 420, 0, 180, 0), 1, 0, 1, False),
    ((0, -12, 156, -36, -108), 0, -1, 2, False),
    ((0, 12, 156, 36, -108), 0, 1, 2, False),
    ((0, 0, 45, 0, -135), 0, 0, 3, False),
    ((0, -195, -195, 975, -585), 0, -2, 1, True),
    ((0, -1179, 0, 3813, 0), 0, 0, 1, True),
    ((0, -195, 195, 975, 585), 0, 2, 1, True),
    ((0, 0, 1260, 0, 540), 1, 0, 1, True),
    ((0, -24, -48, 288, -216), 0, -1, 2, True),
    ((0, -24, 48, 288, 216), 0, 1, 2, True),
    ((0, -5, 0, 135, 0), 0, 0, 3, True),
)


class _TermTable:
    """
    指数-三角项之和, 可对 t 求任意阶导数
    d^n/dt^n e^{st} = s^n e^{st}
    d^n/dt^n (t e^{st}) = (s^n t + n s^{n−1}) e^{st}
    """

    def __init__(self, table, denominator: float):
        self.coef = np.array([row[0] for row in table], dtype=float) / denominator
        self.power = np.array([row[1] for row in table])
        self.rate = np.array([complex(row[2], row[3]) for row in table])
        self.use_sin = np.array([row[4] for row in table])

    def coefficients(self, t: float, order: int = 0) -> np.ndarray:
        if order < 0:
            raise DomainError(f"derivative order must be >= 0, got {order}")
        s = self.rate
        growth = np.exp(s * t)
        factor = s**order * np.where(self.power == 1, t, 1.0)
        if order > 0:
            factor = factor + np.where(self.power == 1, order * s ** (order - 1), 0.0)
        basis = factor * growth
        basis = np.where(self.use_sin, basis.imag, basis.real)
        return basis @ self.coef


_H = _TermTable(_H_TABLE, 384.0)
_F = _TermTable(_F_TABLE, 7680.0)


def monomials(theta: float, omega: float) -> np.ndarray:
    """[1, ω³, ω²θ, ωθ², θ³]"""
    return np.array(
        [1.0, omega**3, omega**2 * theta, omega * theta**2, theta**3]
    )


def monomial_gradient(theta: float, omega: float) -> np.ndarray:
    """单项式对 (θ, ω) 的梯度, 形状 (5, 2)"""
    return np.array(
        [
            [0.0, 0.0],
            [0.0, 3.0 * omega**2],
            [omega**2, 2.0 * omega * theta],
            [2.0 * omega * theta, theta**2],
            [3.0 * theta**2, 0.0],
        ]
    )


def h_coefficients(t: float, order: int = 0) -> np.ndarray:
    """
    d^n h/dt^n 在单项式 [1, ω³, ω²θ, ωθ², θ³] 上的系数
    :param t: 时间
    :type t: float
    :param order: 对 t 的求导阶数
    :type order: int
    :return: 5 个系数
    :rtype: numpy.ndarray
    """
    return _H.coefficients(t, order)


def f_coefficients(t: float, order: int = 0) -> np.ndarray:
    return _F.coefficients(t, order)


def h_eval(t: float, theta: float, omega: float) -> tuple[float, float, float]:
    """
    Θ_δ 在 δ=0 处的解 h 及其一阶, 二阶时间导数
    满足 ḧ − h + 1 + Θ³/6 = 0, h(0) = ḣ(0) = 0
    """
    m = monomials(theta, omega)
    return tuple(float(h_coefficients(t, n) @ m) for n in range(3))


def f_eval(t: float, theta: float, omega: float) -> tuple[float, float]:
    """
    Φ_δ 在 δ=0 处的解 f 及其时间导数
    满足 f̈ + f = ḧ + Θ̇²Φ + Θ²Φ/2 + Φ³/6, f(0) = 0, ḟ(0) = 2θ²ω
    """
    m = monomials(theta, omega)
    return tuple(float(f_coefficients(t, n) @ m) for n in range(2))


def h_gradient(t: float, theta: float, omega: float, order: int = 0) -> np.ndarray:
    """d^n h/dt^n 对 (θ, ω) 的梯度"""
    return h_coefficients(t, order) @ monomial_gradient(theta, omega)


def f_gradient(t: float, theta: float, omega: float, order: int = 0) -> np.ndarray:
    return f_coefficients(t, order) @ monomial_gradient(theta, omega)
