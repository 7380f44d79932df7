# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/27 15:40
Desc: CLI 执行入口文件
`python -m bipedtools` 与安装后的 `bipedtools` 命令都从这里进入
"""
from bipedtools import __title__, cli


def main() -> None:
    cli.app(prog_name=__title__)


if __name__ == "__main__":
    main()
