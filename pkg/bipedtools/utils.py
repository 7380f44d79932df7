# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/27 9:30
Desc: 工具函数
报告的 JSON/CSV 序列化与输出; 浮点数一律使用最短往返表示
"""

import json
from pathlib import Path
from typing import Any, Optional, Sequence

import pandas as pd
import typer
from pydantic import BaseModel


def to_json(report: BaseModel) -> str:
    """
    报告序列化为 JSON, 键排序, 多次运行结果逐字节一致
    :param report: 报告模型
    :type report: pydantic.BaseModel
    :return: JSON 文本
    :rtype: str
    """
    return json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def rows_to_csv(rows: Sequence[BaseModel], columns: Optional[list[str]] = None) -> str:
    """
    行模型列表转为 CSV, 带表头, LF 换行
    """
    frame = pd.DataFrame([row.model_dump(mode="json") for row in rows], columns=columns)
    return frame.to_csv(index=False, lineterminator="\n")


def _flatten(prefix: str, value: Any, out: list[tuple[str, Any]]) -> None:
    if isinstance(value, dict):
        for key in sorted(value):
            _flatten(f"{prefix}.{key}" if prefix else key, value[key], out)
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _flatten(f"{prefix}.{i}", item, out)
    else:
        out.append((prefix, value))


def report_to_csv(report: BaseModel) -> str:
    """
    把嵌套报告展开为 field,value 两列
    """
    pairs: list[tuple[str, Any]] = []
    _flatten("", report.model_dump(mode="json"), pairs)
    frame = pd.DataFrame(pairs, columns=["field", "value"])
    return frame.to_csv(index=False, lineterminator="\n")


def write_output(text: str, out: Optional[Path]) -> None:
    """
    写入文件, 未指定路径时输出到 stdout
    """
    if out is None:
        typer.echo(text, nl=False)
        return
    Path(out).write_text(text, encoding="utf-8", newline="\n")
