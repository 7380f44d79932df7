# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/22 15:30
Desc: 带稠密输出的自适应积分与脚跟着地事件定位
逐步推进 DOP853, 在相邻的已接受步之间检查切换函数的符号变化,
用 brentq 在稠密插值上细化事件时间, 再做一次牛顿修正
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import DOP853, OdeSolution, solve_ivp
from scipy.optimize import brentq

from bipedtools.core.closedform import GRAZING_RATE_FACTOR, THETA_MARGIN_FACTOR, t2
from bipedtools.core.dynamics import State4, VectorField, guard
from bipedtools.core.errors import DomainError, IntegrationError, NoHeelstrikeError

logger = logging.getLogger(name="BipedToolsLog")

_EPS = np.finfo(float).eps


class IntegratorOptions(BaseModel):
    """
    积分器参数
    theta_margin_factor 与 grazing_rate_factor 相对于初始支撑角 |Θ(0)|:
    被接受的着地事件需满足 Θ < −theta_margin_factor·|Θ(0)|
    且 |切换速率| ≥ grazing_rate_factor·|Θ(0)|
    """

    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(default=1e-10, gt=0)
    abs_tol: float = Field(default=1e-10, gt=0)
    max_step: float = Field(default=0.1, gt=0)
    event_tol: float = Field(default=1e-12, gt=0)
    grazing_rate_factor: float = Field(default=GRAZING_RATE_FACTOR, gt=0)
    theta_margin_factor: float = Field(default=THETA_MARGIN_FACTOR, gt=0)
    t_max: Optional[float] = Field(default=None, gt=0)

    def horizon(self) -> float:
        """积分时限, 默认 3·T₂"""
        return self.t_max if self.t_max is not None else 3.0 * t2()

    def acceptance(self) -> dict:
        """unperturbed_return_time 使用的着地接受规则"""
        return {
            "t_max": self.horizon(),
            "theta_margin_factor": self.theta_margin_factor,
            "grazing_rate_factor": self.grazing_rate_factor,
        }

    def scaled(self, factor: float) -> "IntegratorOptions":
        """
        按比例缩放 rel_tol 与 abs_tol
        :param factor: 缩放系数
        :type factor: float
        :return: 新的参数对象
        :rtype: IntegratorOptions
        """
        if not (factor > 0 and math.isfinite(factor)):
            raise DomainError(f"tolerance scale must be > 0, got {factor!r}")
        return self.model_copy(
            update={"rel_tol": self.rel_tol * factor, "abs_tol": self.abs_tol * factor}
        )

    def tightened(self, tol: float = 1e-12) -> "IntegratorOptions":
        return self.model_copy(
            update={"rel_tol": min(self.rel_tol, tol), "abs_tol": min(self.abs_tol, tol)}
        )


@dataclass(frozen=True)
class EventOutcome:
    t_event: float
    state_at_event: State4
    rate_at_event: float
    n_rejected_grazings: int
    rejected_times: tuple[float, ...] = ()
    dense: Optional[OdeSolution] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class HorizonResult:
    t_end: float
    state: State4
    dense: Optional[OdeSolution] = field(default=None, repr=False, compare=False)

    def sample(self, samples: int) -> tuple[np.ndarray, np.ndarray]:
        """
        在 [0, t_end] 上等距采样稠密输出
        :return: (t, y), y 的形状为 (samples, 4)
        """
        if samples < 2:
            raise DomainError(f"need at least 2 samples, got {samples}")
        times = np.linspace(0.0, self.t_end, samples)
        if self.dense is None:
            return times, np.tile(np.asarray(self.state), (samples, 1))
        return times, self.dense(times).T


def _initial_state(s0: Sequence[float]) -> np.ndarray:
    y0 = np.asarray(s0, dtype=float)
    if y0.shape != (4,) or not np.all(np.isfinite(y0)):
        raise DomainError(f"initial state must be 4 finite numbers, got {s0!r}")
    return y0


def _guard_value(y: np.ndarray) -> float:
    return float(y[2] - 2.0 * y[0])


def _locate_event(interp, t_lo: float, t_hi: float, tol: float) -> float:
    """
    在一个积分步内定位 φ − 2θ 的零点
    """

    def value(t: float) -> float:
        return _guard_value(interp(t))

    root = brentq(value, t_lo, t_hi, xtol=tol, rtol=4 * _EPS)
    y = interp(root)
    rate = y[3] - 2.0 * y[1]
    if rate != 0.0:
        polished = root - _guard_value(y) / rate
        if t_lo <= polished <= t_hi:
            root = polished
    return float(root)


def integrate_to_heelstrike(
    vector_field: VectorField,
    s0: Sequence[float],
    opts: Optional[IntegratorOptions] = None,
    dense: bool = False,
) -> EventOutcome:
    """
    从跳变后状态积分到下一次被接受的脚跟着地
    :param vector_field: f(t, y)
    :type vector_field: callable
    :param s0: 初始状态, 允许位于切换面上
    :type s0: Sequence[float]
    :param opts: 积分器参数
    :type opts: IntegratorOptions
    :param dense: 是否保留稠密输出
    :type dense: bool
    :return: 事件结果
    :rtype: EventOutcome
    """
    opts = opts or IntegratorOptions()
    y0 = _initial_state(s0)
    theta_ref = abs(y0[0])
    margin = opts.theta_margin_factor * theta_ref
    rate_min = opts.grazing_rate_factor * theta_ref
    t_max = opts.horizon()

    solver = DOP853(
        vector_field,
        0.0,
        y0,
        t_bound=t_max,
        rtol=opts.rel_tol,
        atol=opts.abs_tol,
        max_step=opts.max_step,
    )
    g_prev = _guard_value(y0)
    times, interpolants, rejected = [0.0], [], []
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"DOP853 failed at t={solver.t:.6g}: {message}")
        t_old, t_new = solver.t_old, solver.t
        g_new = _guard_value(solver.y)
        interp = solver.dense_output()
        if dense:
            times.append(t_new)
            interpolants.append(interp)
        if g_new == 0.0 or g_prev * g_new < 0:
            t_event = t_new if g_new == 0.0 else _locate_event(
                interp, t_old, t_new, opts.event_tol
            )
            y_event = interp(t_event)
            _, rate = guard(y_event)
            if y_event[0] < -margin and abs(rate) >= rate_min:
                return EventOutcome(
                    t_event=t_event,
                    state_at_event=State4(*map(float, y_event)),
                    rate_at_event=rate,
                    n_rejected_grazings=len(rejected),
                    rejected_times=tuple(rejected),
                    dense=OdeSolution(times, interpolants) if dense else None,
                )
            rejected.append(t_event)
            logger.debug(
                f"忽略切换面穿越: t={t_event:.6f}, Θ={y_event[0]:.3e}, 速率={rate:.3e}"
            )
        g_prev = g_new
    raise NoHeelstrikeError(
        f"no accepted heelstrike before t_max={t_max:.6g} "
        f"({len(rejected)} crossing(s) rejected)"
    )


def integrate_fixed_horizon(
    vector_field: VectorField,
    s0: Sequence[float],
    t_end: float,
    opts: Optional[IntegratorOptions] = None,
) -> HorizonResult:
    """
    积分到固定时刻 t_end, 返回终点状态和 [0, t_end] 上的稠密输出
    """
    opts = opts or IntegratorOptions()
    y0 = _initial_state(s0)
    if not (t_end >= 0 and math.isfinite(t_end)):
        raise DomainError(f"t_end must be finite and >= 0, got {t_end!r}")
    if t_end == 0:
        return HorizonResult(0.0, State4(*map(float, y0)))
    sol = solve_ivp(
        vector_field,
        (0.0, t_end),
        y0,
        method="DOP853",
        rtol=opts.rel_tol,
        atol=opts.abs_tol,
        max_step=opts.max_step,
        dense_output=True,
    )
    if not sol.success:
        raise IntegrationError(f"solve_ivp failed: {sol.message}")
    return HorizonResult(float(t_end), State4(*map(float, sol.y[:, -1])), sol.sol)
