# -*- coding:utf-8 -*-
# !/usr/bin/env python
"""
Date: 2026/9/24 10:05
Desc: 配置文件
环境变量统一使用 BIPED_ 前缀, 可以写在项目根目录的 .env 文件中
"""

import logging
import sys
from functools import lru_cache
from logging.handlers import TimedRotatingFileHandler
from typing import Optional

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

LOGGER_NAME = "BipedToolsLog"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

log = logging.getLogger(name=LOGGER_NAME)

_stream_handler: Optional[logging.StreamHandler] = None


class Settings(BaseSettings):
    """
    环境变量配置模型类
    """

    model_config = SettingsConfigDict(env_prefix="BIPED_", env_file=".env", extra="ignore")

    seed_threads: int = Field(default=4, ge=1)
    log_level: str = "WARNING"
    log_file: Optional[str] = None
    cache_enable: bool = True
    cache_maxsize: int = Field(default=4096, ge=1)


@lru_cache()
def get_settings() -> Settings:
    settings = Settings()
    log.info(
        f"加载环境变量成功: seed_threads={settings.seed_threads}, "
        f"cache_enable={settings.cache_enable}"
    )
    return settings


def setup_logging(level: Optional[str] = None) -> logging.Logger:
    """
    配置 BipedToolsLog: stderr 输出, 设置了 BIPED_LOG_FILE 时按天轮转写入文件
    重复调用只更新日志级别与输出流
    :param level: 日志级别, 默认读取 BIPED_LOG_LEVEL
    :type level: str
    :return: 日志对象
    :rtype: logging.Logger
    """
    global _stream_handler
    settings = get_settings()
    log.setLevel((level or settings.log_level).upper())
    if _stream_handler is not None:
        # 测试或嵌入调用时 sys.stderr 可能已被替换, 旧流也可能已关闭, 不能 flush
        with _stream_handler.lock:
            _stream_handler.stream = sys.stderr
        return log
    formatter = logging.Formatter(LOG_FORMAT)
    _stream_handler = logging.StreamHandler(sys.stderr)
    _stream_handler.setFormatter(formatter)
    log.addHandler(_stream_handler)
    if settings.log_file:
        file_handler = TimedRotatingFileHandler(
            filename=settings.log_file,
            when="midnight",
            interval=1,
            backupCount=7,
            encoding="utf-8",
        )
        file_handler.setFormatter(formatter)
        log.addHandler(file_handler)
    log.propagate = False
    return log
