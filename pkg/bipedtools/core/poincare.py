# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/23 9:40
Desc: 脚跟着地 Poincaré 映射 P(θ, ω, δ) 及其导数
δ=0 的导数全部由解析式与隐函数定理给出, δ>0 的 Jacobian 用中心差分
"""

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np
from cachetools import LRUCache
from cachetools.keys import hashkey
from scipy.integrate import OdeSolution

from bipedtools.config import get_settings
from bipedtools.core import closedform as cf
from bipedtools.core.closedform import SectionPoint
from bipedtools.core.dynamics import (
    ModelForm,
    SlopeParam,
    State4,
    apply_jump,
    make_field,
    section_state,
    state_scale,
)
from bipedtools.core.errors import DomainError, SingularityError
from bipedtools.core.integrate import IntegratorOptions, integrate_to_heelstrike

logger = logging.getLogger(name="BipedToolsLog")

FD_STEP = 1e-6
FD_TOL = 1e-12
SINGULAR_RATE = 1e-5

DELTA0 = np.diag([-1.0, 1.0])


@dataclass(frozen=True)
class StepResult:
    """
    一次 Poincaré 映射的结果, 状态均为缩放变量
    """

    image: SectionPoint
    T: float
    pre_jump_state: State4
    post_jump_state: State4
    n_rejected_grazings: int
    rate_at_event: float
    delta: float
    model: ModelForm
    dense: Optional[OdeSolution] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class MapDerivatives:
    dP_dstate: np.ndarray
    dT_dstate: np.ndarray
    method: Literal["analytic-delta0", "finite-difference"]
    dP_ddelta: Optional[np.ndarray] = None
    dT_ddelta: Optional[float] = None
    dPdelta_dstate: Optional[np.ndarray] = None


_map_cache: LRUCache = LRUCache(maxsize=get_settings().cache_maxsize)
_cache_lock = threading.Lock()


def clear_map_cache() -> None:
    with _cache_lock:
        _map_cache.clear()


def _section_point(p: Sequence[float]) -> SectionPoint:
    theta, omega = (float(v) for v in p)
    if not (math.isfinite(theta) and math.isfinite(omega)):
        raise DomainError(f"section point must be finite, got {p!r}", stage="poincare")
    return SectionPoint(theta, omega)


def _step(
    p: SectionPoint,
    delta: float,
    model: ModelForm,
    opts: IntegratorOptions,
    dense: bool,
) -> StepResult:
    if model is ModelForm.FULL:
        # 原始变量量级为 √δ, 绝对容差随之缩放
        opts = opts.model_copy(update={"abs_tol": opts.abs_tol * math.sqrt(delta)})
    scale = state_scale(delta, model)
    s0 = section_state(p.theta, p.omega, delta, model)
    outcome = integrate_to_heelstrike(make_field(model, delta), s0, opts, dense=dense)
    pre = outcome.state_at_event
    post = apply_jump(pre, delta, model)
    return StepResult(
        image=SectionPoint(post.theta / scale, post.theta_dot / scale),
        T=outcome.t_event,
        pre_jump_state=State4(*(v / scale for v in pre)),
        post_jump_state=State4(*(v / scale for v in post)),
        n_rejected_grazings=outcome.n_rejected_grazings,
        rate_at_event=outcome.rate_at_event / scale,
        delta=delta,
        model=model,
        dense=outcome.dense,
    )


def poincare_map(
    p: Sequence[float],
    delta: float,
    model: ModelForm = ModelForm.EXPANDED,
    opts: Optional[IntegratorOptions] = None,
    dense: bool = False,
) -> StepResult:
    """
    Poincaré 映射: 从截面点出发积分到被接受的脚跟着地, 再施加跳变
    Full 模型先按 θ_full = √δ·θ 缩放, 结果再缩放回来
    :param p: 截面点 (θ, ω)
    :type p: Sequence[float]
    :param delta: 展开参数 δ
    :type delta: float
    :param model: 模型形式
    :type model: ModelForm
    :param opts: 积分器参数
    :type opts: IntegratorOptions
    :param dense: 是否保留稠密输出, 为 True 时不走缓存
    :type dense: bool
    :return: 映射结果
    :rtype: StepResult
    """
    point = _section_point(p)
    SlopeParam.from_delta(delta)
    model = ModelForm(model)
    if point.theta == 0.0 and point.omega == 0.0:
        raise DomainError("the origin has no accepted heelstrike", stage="poincare")
    if model is ModelForm.FULL and delta <= 0:
        raise DomainError("the full model needs delta > 0", stage="poincare")
    opts = opts or IntegratorOptions()
    settings = get_settings()
    if dense or not settings.cache_enable:
        return _step(point, delta, model, opts, dense)

    key = hashkey(point.theta, point.omega, float(delta), model.value, opts)
    with _cache_lock:
        cached = _map_cache.get(key)
    if cached is not None:
        logger.debug(f"映射缓存命中 HIT: {point}, delta={delta}")
        return cached
    result = _step(point, delta, model, opts, dense)
    with _cache_lock:
        _map_cache[key] = result
    logger.debug(f"映射缓存未命中 MISS: {point}, delta={delta}")
    return result


def time_of_flight(
    p: Sequence[float],
    delta: float,
    model: ModelForm = ModelForm.EXPANDED,
    opts: Optional[IntegratorOptions] = None,
) -> float:
    return poincare_map(p, delta, model, opts).T


def _fd_jacobian(
    p: SectionPoint,
    delta: float,
    model: ModelForm,
    opts: IntegratorOptions,
    step: float,
) -> np.ndarray:
    x = np.array(p, dtype=float)
    jac = np.empty((2, 2))
    for i in range(2):
        h = max(step, step * abs(x[i]))
        e = np.zeros(2)
        e[i] = h
        plus = poincare_map(x + e, delta, model, opts).image
        minus = poincare_map(x - e, delta, model, opts).image
        jac[:, i] = (np.array(plus) - np.array(minus)) / (2.0 * h)
    return jac


# ==============================================================================
# δ=0 的解析导数
# F(t, θ, ω) 关于 (θ, ω) 线性, 飞行时间只依赖方向 (θ, ω)/|(θ, ω)|
# ==============================================================================


@dataclass(frozen=True)
class _Unperturbed:
    x: np.ndarray
    direction: np.ndarray
    T: float
    state: np.ndarray  # (Θ, Θ̇)(T)
    rate: np.ndarray  # (Θ̇, Θ̈)(T)
    partials: cf.GuardPartials
    direction_rate: float  # F_t(T, direction)


def _family_direction() -> np.ndarray:
    d = np.array([1.0, cf.alpha2()])
    return d / np.linalg.norm(d)


def _unperturbed(p: SectionPoint, period: Optional[float] = None) -> _Unperturbed:
    x = np.array(p, dtype=float)
    norm = float(np.hypot(*x))
    direction = x / norm if norm > 0 else _family_direction()
    if period is None:
        period = cf.unperturbed_return_time(*direction)
    sol = cf.unperturbed_solution(period, *x)
    state = sol[:2]
    rate = np.array([sol[1], sol[0]])
    partials = cf.guard_partials(period, *x)
    direction_rate = cf.guard_partials(period, *direction).t
    if abs(direction_rate) < SINGULAR_RATE * np.linalg.norm(partials.t_grad):
        raise SingularityError(
            f"guard rate vanishes at T={period:.6f} for direction {direction.tolist()}"
        )
    return _Unperturbed(x, direction, period, state, rate, partials, direction_rate)


def _time_shift_gain(geo: _Unperturbed) -> np.ndarray:
    """(Θ̇, Θ̈)(T)/F_t, 对 (θ, ω) 零阶齐次"""
    direction_rate = cf.unperturbed_solution(geo.T, *geo.direction)
    return np.array([direction_rate[1], direction_rate[0]]) / geo.direction_rate


def _perturbation_rate(geo: _Unperturbed) -> float:
    """F_δ = f − 2h 在 (T, θ, ω) 处的值"""
    theta, omega = geo.x
    f_value, _ = cf.f_eval(geo.T, theta, omega)
    h_value = cf.h_eval(geo.T, theta, omega)[0]
    return f_value - 2.0 * h_value


def unperturbed_map(p: Sequence[float]) -> SectionPoint:
    """
    δ=0 映射的解析形式 P(p, 0) = Δ₀(Θ, Θ̇)(T₀(p))
    """
    point = _section_point(p)
    if point.theta == 0.0 and point.omega == 0.0:
        return SectionPoint(0.0, 0.0)
    geo = _unperturbed(point)
    return SectionPoint(float(-geo.state[0]), float(geo.state[1]))


def _analytic_jacobian(geo: _Unperturbed) -> np.ndarray:
    gain = _time_shift_gain(geo)
    state_x = -np.outer(gain, geo.partials.grad) + cf.state_sensitivity(geo.T)
    return DELTA0 @ state_x


def jacobian_state(
    p: Sequence[float],
    delta: float,
    model: ModelForm = ModelForm.EXPANDED,
    opts: Optional[IntegratorOptions] = None,
    method: Literal["auto", "analytic", "fd"] = "auto",
    fd_step: float = FD_STEP,
) -> np.ndarray:
    """
    映射对截面点的 Jacobian P_(θ,ω)
    δ=0 且 Expanded 时默认走解析路径, 其余情况对紧容差积分的映射做中心差分
    :param p: 截面点
    :type p: Sequence[float]
    :param delta: δ
    :type delta: float
    :param method: auto, analytic 或 fd
    :type method: str
    :param fd_step: 差分步长, 实际步长 max(fd_step, fd_step·|x_i|)
    :type fd_step: float
    :return: 2×2 矩阵
    :rtype: numpy.ndarray
    """
    point = _section_point(p)
    SlopeParam.from_delta(delta)
    model = ModelForm(model)
    analytic_ok = delta == 0 and model is ModelForm.EXPANDED
    if method == "analytic" and not analytic_ok:
        raise DomainError("analytic Jacobian only exists at delta=0 (expanded model)")
    if method == "analytic" or (method == "auto" and analytic_ok):
        return _analytic_jacobian(_unperturbed(point))
    if not fd_step > 0:
        raise DomainError(f"finite-difference step must be > 0, got {fd_step!r}")
    opts = (opts or IntegratorOptions()).tightened(FD_TOL)
    return _fd_jacobian(point, delta, model, opts, fd_step)


def dT_dstate(p: Sequence[float]) -> np.ndarray:
    """
    T_(θ,ω) = −F_(θ,ω)/F_t, δ=0
    """
    point = _section_point(p)
    if point.theta == 0.0:
        raise DomainError("dT_dstate has a 1/theta factor; theta must be nonzero")
    geo = _unperturbed(point)
    return -geo.partials.grad / geo.partials.t


def dP_ddelta(p: Sequence[float]) -> np.ndarray:
    """
    P_δ(θ, ω, 0) = Δ₀[(Θ̇, Θ̈)T_δ + (h, ḣ)] + Δ_δ
    Δ_δ = (0, −2X²V), (X, V) 为着地前的 (Θ, Θ̇)
    :param p: 截面点, 可以不在不动点族上
    :type p: Sequence[float]
    :return: 2 维向量
    :rtype: numpy.ndarray
    """
    point = _section_point(p)
    geo = _unperturbed(point)
    theta, omega = geo.x
    h_value, h_dot, _ = cf.h_eval(geo.T, theta, omega)
    shift = -_time_shift_gain(geo) * _perturbation_rate(geo)
    jump = np.array([0.0, -2.0 * geo.state[0] ** 2 * geo.state[1]])
    return DELTA0 @ (shift + np.array([h_value, h_dot])) + jump


def dT_ddelta(p: Sequence[float], frozen_period: bool = False) -> float:
    """
    T_δ(θ, ω, 0) = −F_δ/F_t
    默认在 p 自身的飞行时间处取值, 与 dP_ddelta 一致;
    frozen_period 为 True 时在 t = T₂ 处取值, 即 T_δ 的有理式 (不动点族上两者相同)
    """
    point = _section_point(p)
    period = cf.t2() if frozen_period else None
    if point.theta == 0.0 and point.omega == 0.0:
        raise SingularityError("T_delta is unbounded at the origin")
    geo = _unperturbed(point, period)
    return -_perturbation_rate(geo) / geo.partials.t


def dPdelta_dstate(
    p: Sequence[float], variant: Literal["exact", "frozen"] = "exact"
) -> np.ndarray:
    """
    混合导数 P_δ(θ,ω)(θ, ω, 0)
    exact: T_δ 对 (θ, ω) 求导时计入飞行时间的变化, 与 P_δ 的中心差分一致
    frozen: 在固定的 t = T 处对 T_δ 求导
    两者之差为秩一项 Δ₀(Θ̇, Θ̈)ᵀ·c, 被左特征向量 z 消去
    :param p: 截面点, θ 不能为 0
    :type p: Sequence[float]
    :param variant: exact 或 frozen
    :type variant: str
    :return: 2×2 矩阵
    :rtype: numpy.ndarray
    """
    point = _section_point(p)
    if point.theta == 0.0:
        raise DomainError("dPdelta_dstate has a 1/theta factor; theta must be nonzero")
    if variant not in ("exact", "frozen"):
        raise DomainError(f"unknown variant {variant!r}")
    geo = _unperturbed(point)
    theta, omega = geo.x
    T = geo.T
    gp = geo.partials
    state, rate = geo.state, geo.rate

    t_x = -gp.grad / gp.t
    f_delta = _perturbation_rate(geo)
    f_delta_t = cf.f_eval(T, theta, omega)[1] - 2.0 * cf.h_eval(T, theta, omega)[1]
    f_delta_x = cf.f_gradient(T, theta, omega) - 2.0 * cf.h_gradient(T, theta, omega)
    t_delta = -f_delta / gp.t

    if variant == "exact":
        numerator = (f_delta_t * t_x + f_delta_x) * gp.t - f_delta * (
            gp.tt * t_x + gp.t_grad
        )
    else:
        numerator = f_delta_x * gp.t - f_delta * gp.t_grad
    t_delta_x = -numerator / gp.t**2

    h_value, h_dot, h_ddot = cf.h_eval(T, theta, omega)
    h_t = np.array([h_dot, h_ddot])
    h_x = np.vstack(
        [cf.h_gradient(T, theta, omega, 0), cf.h_gradient(T, theta, omega, 1)]
    )

    state_x = np.outer(rate, t_x) + cf.state_sensitivity(T)
    rate_x = np.outer(state, t_x) + cf.rate_sensitivity(T)
    perturbation_x = np.outer(h_t, t_x) + h_x
    jump_x = np.array(
        [[0.0, 0.0], [-4.0 * state[0] * state[1], -2.0 * state[0] ** 2]]
    )
    return (
        DELTA0 @ (rate_x * t_delta + np.outer(rate, t_delta_x) + perturbation_x)
        + jump_x @ state_x
    )


def map_derivatives(
    p: Sequence[float],
    delta: float = 0.0,
    model: ModelForm = ModelForm.EXPANDED,
    opts: Optional[IntegratorOptions] = None,
) -> MapDerivatives:
    """
    汇总映射的一阶导数; δ>0 时只给出差分 Jacobian 与 T_(θ,ω)
    """
    point = _section_point(p)
    model = ModelForm(model)
    if delta == 0 and model is ModelForm.EXPANDED:
        return MapDerivatives(
            dP_dstate=jacobian_state(point, 0.0),
            dT_dstate=dT_dstate(point),
            method="analytic-delta0",
            dP_ddelta=dP_ddelta(point),
            dT_ddelta=dT_ddelta(point),
            dPdelta_dstate=dPdelta_dstate(point),
        )
    tight = (opts or IntegratorOptions()).tightened(FD_TOL)
    x = np.array(point)
    t_x = np.empty(2)
    for i in range(2):
        h = max(FD_STEP, FD_STEP * abs(x[i]))
        e = np.zeros(2)
        e[i] = h
        t_x[i] = (
            time_of_flight(x + e, delta, model, tight)
            - time_of_flight(x - e, delta, model, tight)
        ) / (2.0 * h)
    return MapDerivatives(
        dP_dstate=jacobian_state(point, delta, model, opts),
        dT_dstate=t_x,
        method="finite-difference",
    )
