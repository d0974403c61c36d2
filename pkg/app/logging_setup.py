# app/logging_setup.py
import logging
import logging.config

from app.config import get_app_settings


def setup_logging(level: str | None = None) -> None:
    level = level or get_app_settings().LOG_LEVEL
    fmt_console = "%(asctime)s %(levelname)s %(name)s - %(message)s"

    # stdout carries --json results, so log lines go to stderr
    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "console": {"format": fmt_console},
            },
            "handlers": {
                "console": {
                    "class": "logging.StreamHandler",
                    "stream": "ext://sys.stderr",
                    "formatter": "console",
                }
            },
            "root": {
                "level": level.upper(),
                "handlers": ["console"],
            },
            "loggers": {
                "matplotlib": {"level": "WARNING", "propagate": True},
                "joblib": {"level": "WARNING", "propagate": True},
                "numba": {"level": "WARNING", "propagate": True},
            },
        }
    )
