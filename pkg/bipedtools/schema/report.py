# -*- coding:utf-8 -*-
# /usr/bin/env python
"""
Date: 2026/9/24 11:30
Desc: scheme 模型层
运行配置与各命令输出的报告模型
"""

import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from bipedtools.core.dynamics import ModelForm
from bipedtools.core.integrate import IntegratorOptions

SCHEMA_VERSION = "1.0"

DEFAULT_FAMILY_SAMPLES = (0.25, 0.5, 1.0, 2.0)
DEFAULT_CONTINUE_GRID = (1e-4, 1e-3, 1e-2, 0.05)
DEFAULT_FLOQUET_GRID = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)


class RunConfig(BaseModel):
    """
    运行配置, 优先级: 命令行参数 > --config 文件 > 默认值
    """

    model_config = ConfigDict(extra="forbid")

    model: ModelForm = ModelForm.EXPANDED
    integrator: IntegratorOptions = IntegratorOptions()
    tol_scale: float = Field(default=1.0, gt=0)
    root_interval: tuple[float, float] = (0.1, 2.0 * math.pi)
    theta0_bracket: tuple[float, float] = (0.1, 2.0)
    family_samples: tuple[float, ...] = DEFAULT_FAMILY_SAMPLES
    melnikov_fd_delta: Optional[float] = Field(default=1e-3, gt=0)
    continue_grid: tuple[float, ...] = DEFAULT_CONTINUE_GRID
    floquet_grid: tuple[float, ...] = DEFAULT_FLOQUET_GRID
    fd_step: float = Field(default=1e-6, gt=0)
    floquet_step: float = Field(default=1e-5, gt=0)
    newton_tol: float = Field(default=1e-10, gt=0)
    newton_max_iter: int = Field(default=25, ge=1)
    output_format: Optional[Literal["json", "csv"]] = None
    out: Optional[str] = None

    @field_validator("root_interval", "theta0_bracket")
    @classmethod
    def _check_interval(cls, value: tuple[float, float]) -> tuple[float, float]:
        lo, hi = value
        if not lo < hi:
            raise ValueError(f"interval must satisfy lo < hi, got {value}")
        return value

    @model_validator(mode="after")
    def _check_grids(self) -> "RunConfig":
        for grid in (self.continue_grid, self.floquet_grid):
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"delta grid must be strictly ascending, got {grid}")
        return self

    def integrator_options(self) -> IntegratorOptions:
        if self.tol_scale == 1.0:
            return self.integrator
        return self.integrator.scaled(self.tol_scale)


class ReportBase(BaseModel):
    schema_version: str = SCHEMA_VERSION
    config: Optional[dict] = None


class RootEntry(BaseModel):
    T: float
    residual: float
    alpha: float
    symmetric: bool
    selected: bool


class RootsReport(ReportBase):
    interval: tuple[float, float]
    roots: list[RootEntry]
    T1: Optional[float] = None
    T2: Optional[float] = None
    alpha_T2: Optional[float] = None


class MapReport(ReportBase):
    model: ModelForm
    delta: float
    theta: float
    omega: float
    image_theta: float
    image_omega: float
    T: float
    pre_jump_state: list[float]
    n_rejected_grazings: int
    rate_at_event: float


class Verdicts(BaseModel):
    """
    各项条件的判定结果
    stable_unperturbed: |ρ| < 1
    necessary: zᵀP_δ 在不动点族上有根 θ₀
    sufficient: 投影斜率不为零
    stable_branch: 投影斜率小于零
    z_independent: 左特征向量 z 沿不动点族不变
    """

    stable_unperturbed: bool = False
    necessary: bool = False
    sufficient: bool = False
    stable_branch: bool = False
    z_independent: bool = False


class StageError(BaseModel):
    stage: str
    error: str
    type: str


class BifurcationReport(ReportBase):
    """
    δ=0 上的分析对两种模型相同, model 只影响差分验证 melnikov_slope_fd
    """

    model: ModelForm = ModelForm.EXPANDED
    T2: float
    alpha2: float
    rho: Optional[float] = None
    jacobian: Optional[list[list[float]]] = None
    z: Optional[list[float]] = None
    y: Optional[list[float]] = None
    z_tilde: Optional[list[float]] = None
    y_tilde: Optional[list[float]] = None
    necessary_coefficients: Optional[list[float]] = None
    theta0: Optional[float] = None
    omega0: Optional[float] = None
    melnikov_slope: Optional[float] = None
    melnikov_slope_unit_y: Optional[float] = None
    melnikov_slope_fd: Optional[float] = None
    z_family_independence: Optional[float] = None
    second_derivative_residual: Optional[float] = None
    verdicts: Verdicts = Verdicts()
    complete: bool = True
    errors: list[StageError] = []


class BranchRow(BaseModel):
    delta: float
    theta: float
    omega: float
    T: float
    rho_delta: float
    spectral_radius: float
    multiplier_1_re: float
    multiplier_1_im: float
    multiplier_2_re: float
    multiplier_2_im: float
    newton_iters: int
    residual: float
    stable: bool


class BranchReport(ReportBase):
    model: ModelForm
    points: list[BranchRow]
    truncated_at: Optional[float] = None
    failure: Optional[StageError] = None
    theta_limit: Optional[float] = None


class GaitRow(BaseModel):
    step: int
    theta: float
    omega: float
    T: float
    heelstrike_theta: float
    heelstrike_theta_dot: float
    step_length: float
    distance: float


class GaitReport(ReportBase):
    model: ModelForm
    delta: float
    fixed_point: list[float]
    spectral_radius: float
    contraction_ratio: Optional[float] = None
    fell: bool = False
    fall_step: Optional[int] = None
    fall_reason: Optional[str] = None
    steps: list[GaitRow]


class TrajectoryRow(BaseModel):
    t: float
    Theta: float
    Theta_dot: float
    Phi: float
    Phi_dot: float


class TrajectoryReport(ReportBase):
    model: ModelForm
    delta: float
    theta: float
    omega: float
    t_end: float
    rows: list[TrajectoryRow]
