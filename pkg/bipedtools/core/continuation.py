# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/26 16:50
Desc: δ>0 时步行周期不动点的牛顿延拓, Floquet 乘子跟踪与步态仿真
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from bipedtools.config import get_settings
from bipedtools.core import closedform as cf
from bipedtools.core.closedform import SectionPoint
from bipedtools.core.dynamics import ModelForm, SlopeParam, State4
from bipedtools.core.errors import (
    BipedError,
    ConvergenceError,
    DegeneracyError,
    DomainError,
    IntegrationError,
    NoHeelstrikeError,
)
from bipedtools.core.integrate import IntegratorOptions
from bipedtools.core.melnikov import family_structure, solve_theta0
from bipedtools.core.poincare import FD_STEP, FD_TOL, jacobian_state, poincare_map

logger = logging.getLogger(name="BipedToolsLog")

DELTA_MIN = 1e-6
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 25
FLOQUET_STEP = 1e-5
FALL_THETA = 10.0
DISTANCE_FLOOR = 1e-9


@dataclass(frozen=True)
class BranchPoint:
    """
    分支上的一个不动点
    rho_delta: 乘子为实数时取最接近 1 的那个, 为复共轭对时取其模
    """

    delta: float
    fixed_point: SectionPoint
    T: float
    rho_delta: float
    multipliers: tuple[complex, complex]
    spectral_radius: float
    newton_iters: int
    residual: float
    jacobian: np.ndarray = field(repr=False, compare=False)

    @property
    def stable(self) -> bool:
        return self.spectral_radius < 1.0


@dataclass(frozen=True)
class Branch:
    points: tuple[BranchPoint, ...]
    model: ModelForm
    truncated_at: Optional[float] = None
    failure: Optional[BipedError] = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([p.delta for p in self.points])

    @property
    def fixed_points(self) -> np.ndarray:
        return np.array([p.fixed_point for p in self.points]).reshape(-1, 2)

    def extrapolate(self) -> Optional[SectionPoint]:
        """用最小的两个 δ 线性外推 δ→0 的极限"""
        if len(self.points) < 2:
            return None
        (d1, d2), (x1, x2) = self.deltas[:2], self.fixed_points[:2]
        limit = x1 - d1 * (x2 - x1) / (d2 - d1)
        return SectionPoint(float(limit[0]), float(limit[1]))


def _default_guess() -> np.ndarray:
    return np.array(cf.family_point(solve_theta0()).point)


def _multipliers(jacobian: np.ndarray) -> tuple[tuple[complex, complex], float, float]:
    values = np.linalg.eigvals(jacobian)
    radius = float(np.max(np.abs(values)))
    if np.all(np.abs(values.imag) <= 1e-12 * max(1.0, radius)):
        rho = float(values.real[np.argmin(np.abs(values.real - 1.0))])
    else:
        rho = radius
    pair = (complex(values[0]), complex(values[1]))
    return pair, rho, radius


def newton_fixed_point(
    delta: float,
    guess: Optional[Sequence[float]] = None,
    model: ModelForm = ModelForm.EXPANDED,
    opts: Optional[IntegratorOptions] = None,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
    fd_step: float = FD_STEP,
    floquet_step: float = FLOQUET_STEP,
) -> BranchPoint:
    """
    牛顿法求解 P(x, δ) − x = 0, Jacobian 用中心差分
    δ=0 时不动点构成一族, I − P' 奇异, 因此要求 δ ≥ δ_min
    :param delta: 展开参数
    :type delta: float
    :param guess: 初值, 默认取 (θ₀, α(T₂)θ₀)
    :type guess: Sequence[float]
    :param model: 模型形式
    :type model: ModelForm
    :param tol: 残差范数的收敛阈值
    :type tol: float
    :param max_iter: 最大迭代次数
    :type max_iter: int
    :param floquet_step: 在收敛点计算 Floquet 乘子的差分步长
    :type floquet_step: float
    :return: 分支点
    :rtype: BranchPoint
    """
    SlopeParam.from_delta(delta)
    if delta < DELTA_MIN:
        raise DegeneracyError(
            f"delta={delta!r} is below {DELTA_MIN}: the unperturbed fixed points form "
            "a family, use closedform.family_point instead",
            stage="continuation",
        )
    model = ModelForm(model)
    tight = (opts or IntegratorOptions()).tightened(FD_TOL)
    x = _default_guess() if guess is None else np.array(guess, dtype=float)

    def residual(point: np.ndarray) -> np.ndarray:
        return np.array(poincare_map(point, delta, model, tight).image) - point

    r = residual(x)
    r_norm = float(np.linalg.norm(r))
    iters = 0
    while r_norm >= tol:
        if iters >= max_iter:
            raise ConvergenceError(
                f"Newton did not converge in {max_iter} iterations at delta={delta}, "
                f"residual={r_norm:.3e}"
            )
        jac = jacobian_state(x, delta, model, opts, method="fd", fd_step=fd_step)
        try:
            dx = np.linalg.solve(jac - np.eye(2), -r)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Newton matrix at delta={delta}") from exc
        # 回溯保证残差下降
        lam = 1.0
        for _ in range(8):
            x_try = x + lam * dx
            try:
                r_try = residual(x_try)
            except NoHeelstrikeError:
                lam *= 0.5
                continue
            if np.linalg.norm(r_try) < r_norm or lam < 0.01:
                break
            lam *= 0.5
        else:
            raise ConvergenceError(f"Newton line search failed at delta={delta}")
        x, r = x_try, r_try
        r_norm = float(np.linalg.norm(r))
        iters += 1
        logger.debug(f"牛顿迭代: delta={delta}, iter={iters}, residual={r_norm:.3e}")

    jacobian = jacobian_state(x, delta, model, opts, method="fd", fd_step=floquet_step)
    pair, rho, radius = _multipliers(jacobian)
    return BranchPoint(
        delta=float(delta),
        fixed_point=SectionPoint(float(x[0]), float(x[1])),
        T=poincare_map(x, delta, model, tight).T,
        rho_delta=rho,
        multipliers=pair,
        spectral_radius=radius,
        newton_iters=iters,
        residual=r_norm,
        jacobian=jacobian,
    )


def _check_grid(delta_grid: Sequence[float]) -> list[float]:
    grid = [float(d) for d in delta_grid]
    if any(not math.isfinite(d) for d in grid):
        raise DomainError(f"delta grid must be finite, got {grid}")
    if grid and grid[0] < DELTA_MIN:
        raise DomainError(f"delta grid must start at or above {DELTA_MIN}, got {grid[0]}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError(f"delta grid must be strictly ascending, got {grid}")
    return grid


def continue_branch(
    delta_grid: Sequence[float],
    model: ModelForm = ModelForm.EXPANDED,
    guess: Optional[Sequence[float]] = None,
    opts: Optional[IntegratorOptions] = None,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
    fd_step: float = FD_STEP,
    floquet_step: float = FLOQUET_STEP,
) -> Branch:
    """
    沿递增的 δ 网格延拓不动点, 预测步用前两个点的割线外推
    某个 δ 上牛顿法失败时分支在此截断, 失败原因记录在 Branch.failure
    :param delta_grid: 严格递增的 δ 网格
    :type delta_grid: Sequence[float]
    :return: 分支
    :rtype: Branch
    """
    grid = _check_grid(delta_grid)
    model = ModelForm(model)
    points: list[BranchPoint] = []
    if not grid:
        return Branch((), model)
    seed = _default_guess() if guess is None else np.array(guess, dtype=float)
    for delta in grid:
        if len(points) >= 2:
            p1, p2 = points[-2], points[-1]
            slope = (np.array(p2.fixed_point) - np.array(p1.fixed_point)) / (
                p2.delta - p1.delta
            )
            predictor = np.array(p2.fixed_point) + slope * (delta - p2.delta)
        elif points:
            predictor = np.array(points[-1].fixed_point)
        else:
            predictor = seed
        try:
            point = newton_fixed_point(
                delta, predictor, model, opts, tol, max_iter, fd_step, floquet_step
            )
        except BipedError as exc:
            logger.warning(f"分支在 delta={delta} 处截断: {exc}")
            return Branch(tuple(points), model, truncated_at=delta, failure=exc)
        points.append(point)
    return Branch(tuple(points), model)


@dataclass(frozen=True)
class FloquetFit:
    """
    g(δ) = −det(I − J_δ)/((1 − ρ)δ) 的多项式拟合, 截距即 λ*
    """

    slope: float
    deltas: np.ndarray
    g_values: np.ndarray
    degree: int
    rho0: float
    all_stable: bool
    branch: Branch = field(repr=False, compare=False)


def floquet_slope(
    delta_grid: Sequence[float] = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2),
    model: ModelForm = ModelForm.EXPANDED,
    opts: Optional[IntegratorOptions] = None,
    branch: Optional[Branch] = None,
    rho0: Optional[float] = None,
    floquet_step: float = FLOQUET_STEP,
) -> FloquetFit:
    """
    拟合接近 1 的乘子的变化率 λ*, ρ_δ ≈ 1 + λ*δ
    直接用 det(I − J_δ) = (1 − ρ_δ)(1 − ρ'_δ), 两个乘子合并为复共轭对时依然光滑
    :param delta_grid: δ 网格, 提供 branch 时忽略
    :type delta_grid: Sequence[float]
    :param branch: 已计算的分支
    :type branch: Branch
    :param rho0: δ=0 时的第二个特征值, 默认取不动点族上的 ρ
    :type rho0: float
    :return: 拟合结果
    :rtype: FloquetFit
    """
    if branch is None:
        branch = continue_branch(delta_grid, model, opts=opts, floquet_step=floquet_step)
    if len(branch) < 3:
        raise ConvergenceError(
            f"Floquet fit needs at least 3 branch points, got {len(branch)}"
        )
    if rho0 is None:
        rho0 = family_structure().rho
    deltas = branch.deltas
    g_values = np.array(
        [
            -np.linalg.det(np.eye(2) - p.jacobian) / ((1.0 - rho0) * p.delta)
            for p in branch
        ]
    )
    degree = 2 if len(branch) >= 4 else 1
    coefficients = np.polyfit(deltas, g_values, degree, w=1.0 / deltas)
    return FloquetFit(
        slope=float(coefficients[-1]),
        deltas=deltas,
        g_values=g_values,
        degree=degree,
        rho0=float(rho0),
        all_stable=all(p.stable for p in branch),
        branch=branch,
    )


@dataclass(frozen=True)
class GaitStep:
    index: int
    section_point: SectionPoint
    image: SectionPoint
    heelstrike_state: State4
    T: float
    step_length: float
    distance: float


@dataclass(frozen=True)
class GaitTrace:
    steps: tuple[GaitStep, ...]
    delta: float
    model: ModelForm
    fell: bool = False
    fall_step: Optional[int] = None
    fall_reason: Optional[str] = None

    @property
    def distances(self) -> np.ndarray:
        return np.array([s.distance for s in self.steps])

    def contraction_ratio(self, skip: int = 3) -> Optional[float]:
        """
        收敛度量的几何衰减率: 跳过前 skip 步后对 log 距离做最小二乘
        可用的点不足两个时返回 None
        """
        distances = self.distances[skip:]
        index = np.arange(skip, skip + len(distances))
        mask = distances > DISTANCE_FLOOR
        if mask.sum() < 2:
            return None
        slope, _ = np.polyfit(index[mask], np.log(distances[mask]), 1)
        return float(math.exp(slope))


def simulate_gait(
    delta: float,
    x0: Sequence[float],
    n_steps: int,
    model: ModelForm = ModelForm.EXPANDED,
    opts: Optional[IntegratorOptions] = None,
) -> GaitTrace:
    """
    迭代脚跟着地映射 n_steps 次
    没有被接受的脚跟着地, 积分发散, 或 |θ| 超过 10 (缩放变量), 视为摔倒, 轨迹截断
    :param delta: 展开参数
    :type delta: float
    :param x0: 初始截面点
    :type x0: Sequence[float]
    :param n_steps: 步数
    :type n_steps: int
    :return: 步态轨迹
    :rtype: GaitTrace
    """
    if n_steps < 1:
        raise DomainError(f"n_steps must be >= 1, got {n_steps}")
    model = ModelForm(model)
    x = SectionPoint(*(float(v) for v in x0))
    steps: list[GaitStep] = []
    for index in range(n_steps):
        try:
            result = poincare_map(x, delta, model, opts)
        except (NoHeelstrikeError, IntegrationError) as exc:
            logger.info(f"第 {index} 步摔倒: {exc}")
            return GaitTrace(tuple(steps), delta, model, True, index, str(exc))
        image = result.image
        steps.append(
            GaitStep(
                index=index,
                section_point=x,
                image=image,
                heelstrike_state=result.pre_jump_state,
                T=result.T,
                step_length=2.0 * abs(result.pre_jump_state.theta),
                distance=float(np.hypot(image.theta - x.theta, image.omega - x.omega)),
            )
        )
        if abs(image.theta) > FALL_THETA:
            reason = f"|theta|={abs(image.theta):.3g} exceeds {FALL_THETA}"
            logger.info(f"第 {index} 步摔倒: {reason}")
            return GaitTrace(tuple(steps), delta, model, True, index, reason)
        x = image
    return GaitTrace(tuple(steps), delta, model)


@dataclass(frozen=True)
class BranchComparison:
    deltas: np.ndarray
    discrepancies: np.ndarray
    full: Branch = field(repr=False)
    expanded: Branch = field(repr=False)
    full_limit: Optional[SectionPoint] = None
    expanded_limit: Optional[SectionPoint] = None


def compare_branches(
    delta_grid: Sequence[float],
    opts: Optional[IntegratorOptions] = None,
    floquet_step: float = FLOQUET_STEP,
) -> BranchComparison:
    """
    并发计算 Full 与 Expanded 两条分支, 比较缩放坐标下的不动点
    """
    grid = _check_grid(delta_grid)
    workers = min(2, get_settings().seed_threads)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {
            form: executor.submit(
                continue_branch, grid, form, opts=opts, floquet_step=floquet_step
            )
            for form in (ModelForm.FULL, ModelForm.EXPANDED)
        }
        full = futures[ModelForm.FULL].result()
        expanded = futures[ModelForm.EXPANDED].result()
    n = min(len(full), len(expanded))
    discrepancies = np.linalg.norm(
        full.fixed_points[:n] - expanded.fixed_points[:n], axis=1
    )
    return BranchComparison(
        deltas=full.deltas[:n],
        discrepancies=discrepancies,
        full=full,
        expanded=expanded,
        full_limit=full.extrapolate(),
        expanded_limit=expanded.extrapolate(),
    )
