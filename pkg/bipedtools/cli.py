# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/27 15:10
Desc: CLI 命令文件
报告写到 stdout (或 --out 指定的文件), 失败时在 stderr 输出错误 JSON
退出码: 0 成功, 2 输入校验错误, 3 数值计算失败
"""

import json
import logging
from pathlib import Path
from typing import Annotated, Callable, Optional

import typer
from pydantic import ValidationError

import bipedtools
from bipedtools.config import setup_logging
from bipedtools.core import closedform as cf
from bipedtools.core.continuation import (
    continue_branch,
    floquet_slope,
    newton_fixed_point,
    simulate_gait,
)
from bipedtools.core.dynamics import ModelForm, make_field, section_state, state_scale
from bipedtools.core.errors import BipedError, DomainError, exit_code_for
from bipedtools.core.integrate import integrate_fixed_horizon
from bipedtools.core.melnikov import build_report
from bipedtools.core.poincare import poincare_map
from bipedtools.schema.report import (
    BranchReport,
    BranchRow,
    GaitReport,
    GaitRow,
    MapReport,
    RootEntry,
    RootsReport,
    RunConfig,
    StageError,
    TrajectoryReport,
    TrajectoryRow,
)
from bipedtools.utils import report_to_csv, rows_to_csv, to_json, write_output

app = typer.Typer()

log = logging.getLogger(name="BipedToolsLog")

ARGS = {"ignore_unknown_options": True}

ModelOpt = Annotated[
    Optional[ModelForm], typer.Option("--model", help="模型形式: full 或 expanded")
]
FormatOpt = Annotated[
    Optional[bool], typer.Option("--json/--csv", help="输出格式, 默认由命令决定")
]
OutOpt = Annotated[Optional[Path], typer.Option("--out", help="输出文件路径")]
TolOpt = Annotated[
    Optional[float], typer.Option("--tol-scale", help="积分容差的缩放系数")
]
ConfigOpt = Annotated[
    Optional[Path], typer.Option("--config", help="JSON 格式的运行配置文件")
]


def version_callback(value: bool):
    if value:
        typer.echo(f"{bipedtools.__title__} v{bipedtools.__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-v",
        help="查看 BipedTools 的版本",
        callback=version_callback,
        is_eager=True,
    ),
) -> None:
    """
    被动双足步行器的步周期、Poincaré 映射、分岔条件与步态延拓
    """
    setup_logging()


def _fail(body: dict, code: int) -> None:
    typer.echo(json.dumps(body, sort_keys=True), err=True)
    raise typer.Exit(code=code)


def _run(command: str, body: Callable[[], None]) -> None:
    log.info(f"开始执行 {command}")
    try:
        body()
    except ValidationError as exc:
        _fail({"error": str(exc), "stage": "config", "type": "ValidationError"}, 2)
    except BipedError as exc:
        _fail(exc.to_dict(), exit_code_for(exc))
    log.info(f"{command} 执行完成")


def _load_config(
    config: Optional[Path],
    model: Optional[ModelForm],
    fmt: Optional[bool],
    out: Optional[Path],
    tol_scale: Optional[float],
    **overrides,
) -> RunConfig:
    """
    合并运行配置: 命令行参数 > 配置文件 > 默认值
    """
    data: dict = {}
    if config is not None:
        try:
            data = json.loads(Path(config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {config}: {exc}", stage="config")
        if not isinstance(data, dict):
            raise DomainError(f"config {config} must hold a JSON object", stage="config")
    flags = {
        "model": model,
        "output_format": None if fmt is None else ("json" if fmt else "csv"),
        "out": None if out is None else str(out),
        "tol_scale": tol_scale,
        **overrides,
    }
    data.update({key: value for key, value in flags.items() if value is not None})
    return RunConfig.model_validate(data)


def _emit(
    rc: RunConfig,
    default: str,
    json_text: Callable[[], str],
    csv_text: Callable[[], str],
) -> None:
    fmt = rc.output_format or default
    text = json_text() if fmt == "json" else csv_text()
    write_output(text, Path(rc.out) if rc.out else None)


def _audit(rc: RunConfig) -> dict:
    return rc.model_dump(mode="json")


@app.command(context_settings=ARGS)
def roots(
    interval: Annotated[
        Optional[tuple[float, float]],
        typer.Option("--interval", help="求根区间 lo hi"),
    ] = None,
    model: ModelOpt = None,
    fmt: FormatOpt = None,
    out: OutOpt = None,
    tol_scale: TolOpt = None,
    config: ConfigOpt = None,
) -> None:
    """
    步周期方程在区间内的根, 标出给出对称步态的根
    """

    def body() -> None:
        rc = _load_config(config, model, fmt, out, tol_scale, root_interval=interval)
        found = cf.find_step_period_roots(*rc.root_interval)
        entries = [
            RootEntry(
                T=r.T,
                residual=r.residual,
                alpha=r.alpha,
                symmetric=r.symmetric,
                selected=r.symmetric,
            )
            for r in found
        ]
        others = [r.T for r in found if not r.symmetric]
        chosen = [r for r in found if r.symmetric]
        report = RootsReport(
            config=_audit(rc),
            interval=rc.root_interval,
            roots=entries,
            T1=others[0] if others else None,
            T2=chosen[0].T if chosen else None,
            alpha_T2=chosen[0].alpha if chosen else None,
        )
        _emit(
            rc,
            "json",
            lambda: to_json(report),
            lambda: rows_to_csv(entries, list(RootEntry.model_fields)),
        )

    _run("roots", body)


@app.command(context_settings=ARGS)
def verify(
    bracket: Annotated[
        Optional[tuple[float, float]],
        typer.Option("--bracket", help="θ₀ 的求根区间 lo hi"),
    ] = None,
    model: ModelOpt = None,
    fmt: FormatOpt = None,
    out: OutOpt = None,
    tol_scale: TolOpt = None,
    config: ConfigOpt = None,
) -> None:
    """
    完整的分岔分析报告: ρ, z, y, θ₀, 投影斜率与各项判定
    """

    def body() -> None:
        rc = _load_config(config, model, fmt, out, tol_scale, theta0_bracket=bracket)
        report = build_report(
            theta0_bracket=rc.theta0_bracket,
            family_samples=rc.family_samples,
            fd_delta=rc.melnikov_fd_delta,
            opts=rc.integrator_options(),
            model=rc.model,
        )
        report.config = _audit(rc)
        _emit(rc, "json", lambda: to_json(report), lambda: report_to_csv(report))
        if not report.complete:
            _fail(report.errors[0].model_dump(), 3)

    _run("verify", body)


@app.command("map", context_settings=ARGS)
def map_(
    theta: Annotated[float, typer.Argument(help="截面点 θ")],
    omega: Annotated[float, typer.Argument(help="截面点 ω")],
    delta: Annotated[float, typer.Argument(help="展开参数 δ")],
    model: ModelOpt = None,
    fmt: FormatOpt = None,
    out: OutOpt = None,
    tol_scale: TolOpt = None,
    config: ConfigOpt = None,
) -> None:
    """
    一次 Poincaré 映射
    """

    def body() -> None:
        rc = _load_config(config, model, fmt, out, tol_scale)
        result = poincare_map((theta, omega), delta, rc.model, rc.integrator_options())
        report = MapReport(
            config=_audit(rc),
            model=rc.model,
            delta=delta,
            theta=theta,
            omega=omega,
            image_theta=result.image.theta,
            image_omega=result.image.omega,
            T=result.T,
            pre_jump_state=list(result.pre_jump_state),
            n_rejected_grazings=result.n_rejected_grazings,
            rate_at_event=result.rate_at_event,
        )
        _emit(rc, "json", lambda: to_json(report), lambda: report_to_csv(report))

    _run("map", body)


def _branch_rows(branch) -> list[BranchRow]:
    rows = []
    for p in branch:
        (m1, m2) = p.multipliers
        rows.append(
            BranchRow(
                delta=p.delta,
                theta=p.fixed_point.theta,
                omega=p.fixed_point.omega,
                T=p.T,
                rho_delta=p.rho_delta,
                spectral_radius=p.spectral_radius,
                multiplier_1_re=m1.real,
                multiplier_1_im=m1.imag,
                multiplier_2_re=m2.real,
                multiplier_2_im=m2.imag,
                newton_iters=p.newton_iters,
                residual=p.residual,
                stable=p.stable,
            )
        )
    return rows


@app.command("continue", context_settings=ARGS)
def continue_(
    deltas: Annotated[
        Optional[list[float]], typer.Argument(help="严格递增的 δ 网格")
    ] = None,
    model: ModelOpt = None,
    fmt: FormatOpt = None,
    out: OutOpt = None,
    tol_scale: TolOpt = None,
    config: ConfigOpt = None,
) -> None:
    """
    沿 δ 网格延拓步行周期不动点
    """

    def body() -> None:
        rc = _load_config(
            config, model, fmt, out, tol_scale, continue_grid=tuple(deltas) if deltas else None,
        )
        branch = continue_branch(
            rc.continue_grid,
            rc.model,
            opts=rc.integrator_options(),
            tol=rc.newton_tol,
            max_iter=rc.newton_max_iter,
            fd_step=rc.fd_step,
            floquet_step=rc.floquet_step,
        )
        rows = _branch_rows(branch)
        limit = branch.extrapolate()
        failure = branch.failure
        report = BranchReport(
            config=_audit(rc),
            model=rc.model,
            points=rows,
            truncated_at=branch.truncated_at,
            failure=None if failure is None else StageError(**failure.to_dict()),
            theta_limit=None if limit is None else limit.theta,
        )
        _emit(
            rc,
            "csv",
            lambda: to_json(report),
            lambda: rows_to_csv(rows, list(BranchRow.model_fields)),
        )
        if failure is not None:
            typer.echo(json.dumps(failure.to_dict(), sort_keys=True), err=True)

    _run("continue", body)


@app.command(context_settings=ARGS)
def floquet(
    deltas: Annotated[
        Optional[list[float]], typer.Argument(help="严格递增的 δ 网格")
    ] = None,
    model: ModelOpt = None,
    fmt: FormatOpt = None,
    out: OutOpt = None,
    tol_scale: TolOpt = None,
    config: ConfigOpt = None,
) -> None:
    """
    拟合接近 1 的 Floquet 乘子的变化率 λ*
    """

    def body() -> None:
        rc = _load_config(
            config, model, fmt, out, tol_scale, floquet_grid=tuple(deltas) if deltas else None,
        )
        fit = floquet_slope(
            rc.floquet_grid,
            rc.model,
            opts=rc.integrator_options(),
            floquet_step=rc.floquet_step,
        )
        rows = _branch_rows(fit.branch)
        report = BranchReport(
            config=_audit(rc),
            model=rc.model,
            points=rows,
            truncated_at=fit.branch.truncated_at,
        )
        summary = {
            "floquet_slope": fit.slope,
            "degree": fit.degree,
            "rho0": fit.rho0,
            "all_stable": fit.all_stable,
        }

        def as_json() -> str:
            payload = report.model_dump(mode="json")
            payload.update(summary)
            return json.dumps(payload, sort_keys=True, indent=2) + "\n"

        _emit(
            rc,
            "json",
            as_json,
            lambda: rows_to_csv(rows, list(BranchRow.model_fields)),
        )

    _run("floquet", body)


@app.command(context_settings=ARGS)
def gait(
    delta: Annotated[float, typer.Argument(help="展开参数 δ")],
    n_steps: Annotated[int, typer.Argument(help="步数")],
    perturbation: Annotated[float, typer.Argument(help="初始 θ 相对不动点的偏移")] = 0.0,
    model: ModelOpt = None,
    fmt: FormatOpt = None,
    out: OutOpt = None,
    tol_scale: TolOpt = None,
    config: ConfigOpt = None,
) -> None:
    """
    从扰动后的不动点出发仿真步态, CSV 输出每一步, 摘要写到 stderr
    """

    def body() -> None:
        rc = _load_config(config, model, fmt, out, tol_scale)
        opts = rc.integrator_options()
        point = newton_fixed_point(
            delta,
            model=rc.model,
            opts=opts,
            tol=rc.newton_tol,
            max_iter=rc.newton_max_iter,
            fd_step=rc.fd_step,
            floquet_step=rc.floquet_step,
        )
        x0 = (point.fixed_point.theta + perturbation, point.fixed_point.omega)
        trace = simulate_gait(delta, x0, n_steps, rc.model, opts)
        rows = [
            GaitRow(
                step=s.index,
                theta=s.section_point.theta,
                omega=s.section_point.omega,
                T=s.T,
                heelstrike_theta=s.heelstrike_state.theta,
                heelstrike_theta_dot=s.heelstrike_state.theta_dot,
                step_length=s.step_length,
                distance=s.distance,
            )
            for s in trace.steps
        ]
        report = GaitReport(
            config=_audit(rc),
            model=rc.model,
            delta=delta,
            fixed_point=list(point.fixed_point),
            spectral_radius=point.spectral_radius,
            contraction_ratio=trace.contraction_ratio(),
            fell=trace.fell,
            fall_step=trace.fall_step,
            fall_reason=trace.fall_reason,
            steps=rows,
        )
        summary = report.model_dump(mode="json", exclude={"steps", "config"})
        _emit(
            rc,
            "csv",
            lambda: to_json(report),
            lambda: rows_to_csv(rows, list(GaitRow.model_fields)),
        )
        if (rc.output_format or "csv") == "csv":
            typer.echo(json.dumps(summary, sort_keys=True), err=True)

    _run("gait", body)


@app.command(context_settings=ARGS)
def traj(
    theta: Annotated[float, typer.Argument(help="截面点 θ")],
    omega: Annotated[float, typer.Argument(help="截面点 ω")],
    delta: Annotated[float, typer.Argument(help="展开参数 δ")],
    t_end: Annotated[float, typer.Argument(help="积分终止时刻")],
    samples: Annotated[int, typer.Argument(help="等距采样点数")] = 400,
    model: ModelOpt = None,
    fmt: FormatOpt = None,
    out: OutOpt = None,
    tol_scale: TolOpt = None,
    config: ConfigOpt = None,
) -> None:
    """
    固定时长的稠密轨迹, 以缩放变量 (Θ, Θ̇, Φ, Φ̇) 输出, 用于离线绘图
    """

    def body() -> None:
        rc = _load_config(config, model, fmt, out, tol_scale)
        s0 = section_state(theta, omega, delta, rc.model)
        field = make_field(rc.model, delta)
        result = integrate_fixed_horizon(field, s0, t_end, rc.integrator_options())
        times, states = result.sample(samples)
        states = states / state_scale(delta, rc.model)
        rows = [
            TrajectoryRow(t=t, Theta=y[0], Theta_dot=y[1], Phi=y[2], Phi_dot=y[3])
            for t, y in zip(times.tolist(), states.tolist())
        ]
        report = TrajectoryReport(
            config=_audit(rc),
            model=rc.model,
            delta=delta,
            theta=theta,
            omega=omega,
            t_end=t_end,
            rows=rows,
        )
        _emit(
            rc,
            "csv",
            lambda: to_json(report),
            lambda: rows_to_csv(rows, list(TrajectoryRow.model_fields)),
        )

    _run("traj", body)


if __name__ == "__main__":
    app()
