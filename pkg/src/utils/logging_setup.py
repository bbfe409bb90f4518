import logging

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(level="WARNING"):
    """Attach a stream handler to the root logger (CLI entry point only)"""
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.WARNING)
    root = logging.getLogger()
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
    root.setLevel(level)
    # matplotlib's font manager is chatty at INFO
    logging.getLogger("matplotlib").setLevel(max(level, logging.WARNING))
