import logging
import sys

import structlog

from app.settings import settings


def configure_logging(level: str | None = None) -> None:
    """Configure structlog once per process; library modules only call get_logger()"""
    level_name = (level or settings.log).upper()
    # getLevelNamesMapping() is 3.11+; it returns a copy of _nameToLevel
    names = getattr(logging, 'getLevelNamesMapping', lambda: dict(logging._nameToLevel))()
    min_level = names.get(level_name, logging.WARNING)

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt='iso'),
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(min_level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
