# logs/log_setup.py
# Logger bersama untuk semua package.

import logging

from config import LOG_LEVEL

_configured = False


def get_logger(name: str) -> logging.Logger:
    global _configured
    if not _configured:
        logging.basicConfig(
            level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
            format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        )
        _configured = True
    return logging.getLogger(name)
