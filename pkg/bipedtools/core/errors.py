# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/21 16:10
Desc: 异常定义
每个异常都带有 stage 属性, 用于在 CLI 的错误 JSON 中标明出错的计算阶段
"""


class BipedError(Exception):
    """
    所有数值计算异常的基类
    """

    default_stage = "numerics"

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage or self.default_stage

    def to_dict(self) -> dict:
        return {"error": str(self), "stage": self.stage, "type": type(self).__name__}


class DomainError(BipedError, ValueError):
    """输入不在定义域内"""

    default_stage = "validation"


class GuardViolationError(DomainError):
    """在切换面之外调用跳变映射"""

    default_stage = "dynamics"


class NoHeelstrikeError(BipedError):
    """积分区间内没有被接受的脚跟着地事件"""

    default_stage = "integrate"


class IntegrationError(BipedError):
    default_stage = "integrate"


class SingularityError(BipedError):
    """切换面速率为零, 隐函数定理失效"""

    default_stage = "poincare"


class BracketError(BipedError):
    default_stage = "closedform"


class StructureError(BipedError):
    """特征结构不满足要求: 复特征值, 缺少特征值 1 等"""

    default_stage = "melnikov"


class DegeneracyError(StructureError):
    default_stage = "melnikov"


class ConvergenceError(BipedError):
    default_stage = "continuation"


def exit_code_for(exc: BaseException) -> int:
    """
    异常对应的 CLI 退出码: 2 为输入校验错误, 3 为数值失败
    :param exc: 异常
    :type exc: BaseException
    :return: 退出码
    :rtype: int
    """
    if isinstance(exc, DomainError):
        return 2
    return 3
