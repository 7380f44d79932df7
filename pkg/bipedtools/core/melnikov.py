# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/25 14:20
Desc: 不动点族上的分岔条件验证
特征结构 (ρ, y, ỹ, z, z̃), 必要条件 zᵀP_δ = 0, 投影斜率 zᵀP_δ(θ,ω)y 及其符号
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from bipedtools.config import get_settings
from bipedtools.core import closedform as cf
from bipedtools.core.dynamics import ModelForm
from bipedtools.core.errors import (
    BipedError,
    BracketError,
    DegeneracyError,
    DomainError,
    StructureError,
)
from bipedtools.core.integrate import IntegratorOptions
from bipedtools.core.poincare import (
    FD_TOL,
    dP_ddelta,
    dPdelta_dstate,
    jacobian_state,
    poincare_map,
    unperturbed_map,
)
from bipedtools.schema.report import (
    DEFAULT_FAMILY_SAMPLES,
    BifurcationReport,
    StageError,
    Verdicts,
)

logger = logging.getLogger(name="BipedToolsLog")

UNIT_EIGEN_TOL = 1e-6
COMPLEX_TOL = 1e-12
Z_INDEPENDENCE_TOL = 1e-6
SLOPE_ZERO_TOL = 1e-12

JacobianFn = Callable[[float], np.ndarray]
VectorFn = Callable[[float], np.ndarray]


def rot90(v: np.ndarray) -> np.ndarray:
    return np.array([v[1], -v[0]])


@dataclass(frozen=True)
class EigenStructure:
    """
    特征值 1 与 ρ 对应的右特征向量 y, ỹ 和左特征向量 z, z̃
    归一化: |z| = 1 且 z[0] ≤ 0, zᵀy = 1, z̃ᵀỹ = 1, |ỹ| = 1
    """

    rho: float
    y: np.ndarray
    y_tilde: np.ndarray
    z: np.ndarray
    z_tilde: np.ndarray

    def decompose(self, zeta: Sequence[float]) -> np.ndarray:
        """ζ = (zᵀζ)y + (z̃ᵀζ)ỹ"""
        zeta = np.asarray(zeta, dtype=float)
        return (self.z @ zeta) * self.y + (self.z_tilde @ zeta) * self.y_tilde


class CubicCoefficients(NamedTuple):
    """zᵀP_δ(θ, α(T₂)θ, 0) = constant + cubic·θ³"""

    constant: float
    cubic: float


def _null_vector(rows: np.ndarray) -> np.ndarray:
    """与 rows 中范数最大的一行正交的单位向量"""
    norms = np.linalg.norm(rows, axis=1)
    v = rot90(rows[int(np.argmax(norms))])
    return v / np.linalg.norm(v)


def eigenstructure_2x2(M: np.ndarray) -> EigenStructure:
    """
    2×2 矩阵的特征结构, 要求一个特征值为 1, 另一个为实数 ρ ≠ 1
    特征值 1 的向量由 M − I 的零空间给出, 即把该特征值修正为精确的 1
    :param M: 不动点族上的 Jacobian
    :type M: numpy.ndarray
    :return: 特征结构
    :rtype: EigenStructure
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2) or not np.all(np.isfinite(M)):
        raise DomainError(f"expected a finite 2x2 matrix, got shape {M.shape}")
    eigenvalues = np.linalg.eigvals(M)
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    if np.max(np.abs(eigenvalues.imag)) > COMPLEX_TOL * scale:
        raise StructureError(f"complex spectrum {eigenvalues.tolist()}")
    eigenvalues = eigenvalues.real
    unit = int(np.argmin(np.abs(eigenvalues - 1.0)))
    if abs(eigenvalues[unit] - 1.0) > UNIT_EIGEN_TOL:
        raise StructureError(f"no eigenvalue 1 in spectrum {eigenvalues.tolist()}")
    rho = float(eigenvalues[1 - unit])
    if abs(rho - 1.0) < UNIT_EIGEN_TOL:
        raise DegeneracyError(f"second eigenvalue rho={rho!r} is too close to 1")

    shifted = M - np.eye(2)
    y = _null_vector(shifted)
    z = _null_vector(shifted.T)
    if z[0] > 0 or (z[0] == 0 and z[1] > 0):
        z = -z
    overlap = z @ y
    if abs(overlap) < 1e-12:
        raise StructureError("defective eigenvalue 1: z is orthogonal to y")
    y = y / overlap

    y_tilde = rot90(z)
    y_tilde = y_tilde / np.linalg.norm(y_tilde)
    z_tilde = rot90(y)
    z_tilde = z_tilde / (z_tilde @ y_tilde)
    return EigenStructure(rho, y, y_tilde, z, z_tilde)


def family_jacobian(s: float = 1.0) -> np.ndarray:
    """δ=0 时不动点族 (s, α(T₂)s) 上的解析 Jacobian"""
    return jacobian_state(cf.family_point(s).point, 0.0)


def family_structure() -> EigenStructure:
    return eigenstructure_2x2(family_jacobian())


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    cross = u[0] * v[1] - u[1] * v[0]
    return math.atan2(abs(cross), abs(u @ v))


def check_family_z_independence(
    samples: Sequence[float] = DEFAULT_FAMILY_SAMPLES,
    jacobian_fn: Optional[JacobianFn] = None,
) -> float:
    """
    左特征向量 z 沿不动点族的最大偏转角
    :param samples: 族参数 s 的采样点, 第一个为参考点 s₀
    :type samples: Sequence[float]
    :param jacobian_fn: s -> P_(θ,ω)(ξ(s), 0), 默认使用解析 Jacobian
    :type jacobian_fn: callable
    :return: max angle(z(s), z(s₀)), 弧度
    :rtype: float
    """
    samples = list(samples)
    if not samples:
        raise DomainError("need at least one family sample")
    jacobian_fn = jacobian_fn or family_jacobian
    with ThreadPoolExecutor(max_workers=get_settings().seed_threads) as executor:
        matrices = list(executor.map(jacobian_fn, samples))
    z_ref = eigenstructure_2x2(matrices[0]).z
    deviation = 0.0
    for s, M in zip(samples[1:], matrices[1:]):
        angle = _angle(z_ref, eigenstructure_2x2(M).z)
        logger.debug(f"z 偏转角: s={s}, angle={angle:.3e}")
        deviation = max(deviation, angle)
    return deviation


def necessary_condition_fn(theta: float, z: Optional[np.ndarray] = None) -> float:
    """
    zᵀP_δ(θ, α(T₂)θ, 0)
    """
    if z is None:
        z = family_structure().z
    return float(z @ dP_ddelta(cf.family_point(theta).point))


def necessary_condition_coefficients(
    z: Optional[np.ndarray] = None,
) -> CubicCoefficients:
    """
    沿不动点族 zᵀP_δ 是 θ 的三次式 c₀ + c₃θ³
    """
    if z is None:
        z = family_structure().z
    constant = necessary_condition_fn(0.0, z)
    return CubicCoefficients(constant, necessary_condition_fn(1.0, z) - constant)


def _solve_root(
    func: Callable[[float], float], bracket: tuple[float, float]
) -> float:
    lo, hi = bracket
    f_lo, f_hi = func(lo), func(hi)
    if f_lo * f_hi > 0:
        raise BracketError(
            f"no sign change on [{lo}, {hi}]: f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g}",
            stage="melnikov",
        )
    return float(brentq(func, lo, hi, xtol=1e-14))


def solve_theta0(
    bracket: tuple[float, float] = (0.1, 2.0), z: Optional[np.ndarray] = None
) -> float:
    """
    必要条件 zᵀP_δ(θ₀, α(T₂)θ₀, 0) = 0 的根
    :param bracket: 求根区间
    :type bracket: tuple
    :return: θ₀
    :rtype: float
    """
    if z is None:
        z = family_structure().z
    return _solve_root(lambda theta: necessary_condition_fn(theta, z), bracket)


def melnikov_slope(
    theta0: Optional[float] = None,
    structure: Optional[EigenStructure] = None,
    variant: str = "exact",
) -> float:
    """
    投影斜率 zᵀP_δ(θ,ω)(θ₀, α(T₂)θ₀, 0)y, zᵀy = 1
    等于 δ>0 时接近 1 的乘子的变化率 λ*
    :param theta0: 必要条件的根, 默认重新求解
    :type theta0: float
    :param structure: 特征结构, 默认取不动点族上的
    :type structure: EigenStructure
    :param variant: 混合导数的形式, exact 或 frozen
    :type variant: str
    :return: 斜率
    :rtype: float
    """
    structure = structure or family_structure()
    if theta0 is None:
        theta0 = solve_theta0(z=structure.z)
    mixed = dPdelta_dstate(cf.family_point(theta0).point, variant=variant)
    return float(structure.z @ mixed @ structure.y)


def melnikov_slope_unit_y(
    theta0: Optional[float] = None,
    structure: Optional[EigenStructure] = None,
    variant: str = "exact",
) -> float:
    """同上, 但 y 取单位长度"""
    structure = structure or family_structure()
    slope = melnikov_slope(theta0, structure, variant)
    return slope / float(np.linalg.norm(structure.y))


def _projected_derivative(
    x0: np.ndarray,
    delta: float,
    structure: EigenStructure,
    eps: float,
    model: ModelForm,
    opts: IntegratorOptions,
) -> float:
    """zᵀP_(θ,ω)(x₀, δ)y, 沿 y 方向做中心差分"""
    norm_y = float(np.linalg.norm(structure.y))
    step = eps * structure.y / norm_y
    plus = np.array(poincare_map(x0 + step, delta, model, opts).image)
    minus = np.array(poincare_map(x0 - step, delta, model, opts).image)
    return float(structure.z @ (plus - minus)) / (2.0 * eps) * norm_y


def melnikov_slope_fd(
    delta: float = 1e-3,
    theta0: Optional[float] = None,
    structure: Optional[EigenStructure] = None,
    eps: float = 1e-5,
    model: ModelForm = ModelForm.EXPANDED,
    opts: Optional[IntegratorOptions] = None,
) -> float:
    """
    投影斜率的差分验证: s(δ) = zᵀ[P_(θ,ω)(x₀, δ) − P_(θ,ω)(x₀, 0)]y/δ,
    返回 Richardson 外推 2s(δ/2) − s(δ)
    """
    if not delta > 0:
        raise DomainError(f"delta must be > 0, got {delta!r}")
    structure = structure or family_structure()
    if theta0 is None:
        theta0 = solve_theta0(z=structure.z)
    x0 = np.array(cf.family_point(theta0).point)
    opts = (opts or IntegratorOptions()).tightened(FD_TOL)

    def projected(d: float) -> float:
        # Full 模型在 δ=0 没有定义, 此时的基准统一取展开模型
        form = model if d > 0 else ModelForm.EXPANDED
        return _projected_derivative(x0, d, structure, eps, form, opts)

    base = projected(0.0)
    s_full = (projected(delta) - base) / delta
    s_half = (projected(0.5 * delta) - base) / (0.5 * delta)
    logger.debug(f"差分斜率: s(δ)={s_full:.6g}, s(δ/2)={s_half:.6g}")
    return 2.0 * s_half - s_full


def check_second_derivative_degeneracy(
    samples: Sequence[float] = (0.5, 1.0, 2.0),
    structure: Optional[EigenStructure] = None,
    eps: float = 1e-3,
) -> float:
    """
    max |zᵀP''(ξ(s), 0)[y, y]|, 用无扰映射的解析形式做二阶中心差分
    """
    structure = structure or family_structure()
    norm_y = float(np.linalg.norm(structure.y))
    direction = structure.y / norm_y
    worst = 0.0
    for s in samples:
        x = np.array(cf.family_point(s).point)
        h = eps * max(1.0, float(np.linalg.norm(x)))
        plus = np.array(unperturbed_map(x + h * direction))
        center = np.array(unperturbed_map(x))
        minus = np.array(unperturbed_map(x - h * direction))
        second = (plus - 2.0 * center + minus) / h**2 * norm_y**2
        worst = max(worst, abs(float(structure.z @ second)))
    return worst


def build_report(
    theta0_bracket: tuple[float, float] = (0.1, 2.0),
    family_samples: Sequence[float] = DEFAULT_FAMILY_SAMPLES,
    fd_delta: Optional[float] = 1e-3,
    opts: Optional[IntegratorOptions] = None,
    model: ModelForm = ModelForm.EXPANDED,
    jacobian_fn: Optional[JacobianFn] = None,
    perturbation_fn: Optional[VectorFn] = None,
    mixed_fn: Optional[JacobianFn] = None,
) -> BifurcationReport:
    """
    汇总分岔分析的全部结果与判定
    jacobian_fn, perturbation_fn, mixed_fn 分别替换 P_(θ,ω)(ξ(s),0), P_δ(ξ(θ),0)
    与 P_δ(θ,ω)(ξ(θ),0), 用于在构造的映射上检验判定逻辑; 此时跳过基于积分的检查
    :param theta0_bracket: θ₀ 的求根区间
    :type theta0_bracket: tuple
    :param family_samples: z 不变性检查的采样点
    :type family_samples: Sequence[float]
    :param fd_delta: 差分验证所用的 δ, None 表示跳过
    :type fd_delta: float
    :param model: 差分验证所积分的模型
    :type model: ModelForm
    :return: 分岔报告, 子步骤失败时 complete 为 False 并记录在 errors 中
    :rtype: BifurcationReport
    """
    synthetic = any(fn is not None for fn in (jacobian_fn, perturbation_fn, mixed_fn))
    jacobian_fn = jacobian_fn or family_jacobian
    report = BifurcationReport(model=model, T2=cf.t2(), alpha2=cf.alpha2())
    verdicts = Verdicts()

    def record(stage: str, exc: BipedError) -> None:
        logger.warning(f"分岔分析步骤 {stage} 失败: {exc}")
        report.errors.append(StageError(stage=stage, error=str(exc), type=type(exc).__name__))
        report.complete = False

    try:
        M = np.asarray(jacobian_fn(family_samples[0] if family_samples else 1.0))
        report.jacobian = M.tolist()
        structure = eigenstructure_2x2(M)
    except BipedError as exc:
        record("eigenstructure", exc)
        report.verdicts = verdicts
        return report
    report.rho = structure.rho
    report.z, report.y = structure.z.tolist(), structure.y.tolist()
    report.z_tilde, report.y_tilde = structure.z_tilde.tolist(), structure.y_tilde.tolist()
    verdicts.stable_unperturbed = abs(structure.rho) < 1.0

    try:
        deviation = check_family_z_independence(family_samples, jacobian_fn)
        report.z_family_independence = deviation
        verdicts.z_independent = deviation < Z_INDEPENDENCE_TOL
    except BipedError as exc:
        record("family", exc)

    z = structure.z
    if perturbation_fn is None:

        def projected(theta: float) -> float:
            return necessary_condition_fn(theta, z)

    else:

        def projected(theta: float) -> float:
            return float(z @ np.asarray(perturbation_fn(theta)))

    try:
        constant = projected(0.0)
        report.necessary_coefficients = [constant, projected(1.0) - constant]
        theta0 = _solve_root(projected, theta0_bracket)
        report.theta0 = theta0
        report.omega0 = cf.alpha2() * theta0
        verdicts.necessary = True
    except BipedError as exc:
        record("necessary", exc)
        report.verdicts = verdicts
        return report

    try:
        if mixed_fn is None:
            slope = melnikov_slope(theta0, structure)
        else:
            slope = float(z @ np.asarray(mixed_fn(theta0)) @ structure.y)
        report.melnikov_slope = slope
        report.melnikov_slope_unit_y = slope / float(np.linalg.norm(structure.y))
        verdicts.sufficient = abs(slope) > SLOPE_ZERO_TOL
        verdicts.stable_branch = slope < 0
    except BipedError as exc:
        record("slope", exc)

    if not synthetic:
        try:
            report.second_derivative_residual = check_second_derivative_degeneracy(
                structure=structure
            )
        except BipedError as exc:
            record("degeneracy", exc)
        if fd_delta is not None:
            try:
                report.melnikov_slope_fd = melnikov_slope_fd(
                    fd_delta, theta0, structure, model=model, opts=opts
                )
            except BipedError as exc:
                record("slope-fd", exc)

    report.verdicts = verdicts
    return report
