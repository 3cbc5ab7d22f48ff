from loguru import logger
import inspect
import os
import sys
from datetime import datetime
from typing import Optional

# Global variables to track logger state
_logger_initialized = False
_console_handler_id: Optional[int] = None
_file_handler_id: Optional[int] = None

CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{extra[module]}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {extra[module]} | {message}"


# Route Python warnings (numpy/scipy) through the logger
def _redirect_warnings():
    import warnings

    def warning_to_logger(message, category, filename, lineno, *args, **kwargs):
        module_name = os.path.basename(filename).split('.')[0]
        logger.bind(module=module_name).warning(f"{category.__name__}: {message} (in {filename}:{lineno})")

    warnings.showwarning = warning_to_logger


_redirect_warnings()


def _caller_module(default: str, depth: int) -> str:
    """Short module name of the frame `depth` levels above this one"""
    caller = inspect.currentframe()
    for _ in range(depth):
        caller = caller.f_back if caller is not None else None
    module = inspect.getmodule(caller) if caller else None
    if module is None:
        return default
    return module.__name__.split('.')[-1]


def _add_file_sink(directory: str, level: str) -> int:
    os.makedirs(directory, exist_ok=True)
    log_file = os.path.join(directory, f"{datetime.now().strftime('%Y%m%d')}.log")
    return logger.add(
        log_file,
        format=FILE_FORMAT,
        level=level,
        rotation="1 day",
        retention="30 days",
        compression="zip",
        enqueue=True,
        backtrace=True,
        diagnose=False,
    )


# Track logger instances to avoid duplicates
_logger_instances = {}


class Logger:
    """Application logger built on loguru.

    A single set of sinks is shared by every instance; each instance only
    binds the name of the module it logs for.
    """

    @classmethod
    def get_instance(cls, name: str = "bell_geometry") -> "Logger":
        """Get or create a logger instance with the given name"""
        if name not in _logger_instances:
            _logger_instances[name] = cls(name)
        return _logger_instances[name]

    @classmethod
    def configure(cls, console_level: str = "INFO", directory: Optional[str] = None,
                  file_level: str = "DEBUG") -> None:
        """Reconfigure the shared sinks (console level and optional log directory)"""
        global _console_handler_id, _file_handler_id, _logger_initialized
        if not _logger_initialized:
            cls._initialize()
        if _console_handler_id is not None:
            logger.remove(_console_handler_id)
        _console_handler_id = logger.add(
            sys.stderr,
            format=CONSOLE_FORMAT,
            level=console_level,
            colorize=True,
            enqueue=True,
            backtrace=True,
            diagnose=False,
        )
        if directory:
            if _file_handler_id is not None:
                logger.remove(_file_handler_id)
            _file_handler_id = _add_file_sink(directory, file_level)

    @staticmethod
    def _initialize() -> None:
        global _console_handler_id, _file_handler_id, _logger_initialized
        from ..config import Settings

        logger.remove()
        logger.configure(extra={"module": "bell_geometry"})
        _console_handler_id = logger.add(
            sys.stderr,
            format=CONSOLE_FORMAT,
            level=Settings.LOGGING.get('console_level', 'INFO'),
            colorize=True,
            enqueue=True,
            backtrace=True,
            diagnose=False,
        )
        directory = Settings.LOGGING.get('directory')
        if directory:
            _file_handler_id = _add_file_sink(directory, Settings.LOGGING.get('file_level', 'DEBUG'))
        _logger_initialized = True

    def __init__(self, name: str = "bell_geometry"):
        if not _logger_initialized:
            self._initialize()
        self.name = name
        self.logger = logger.bind(module=name)

    def _emit(self, level: str, msg: str) -> None:
        caller_logger = logger.bind(module=_caller_module(self.name, 3))
        # One record per line keeps the console columns aligned
        for line in str(msg).split('\n'):
            if line.strip():
                caller_logger.log(level, line)

    def debug(self, msg: str) -> None:
        self._emit("DEBUG", msg)

    def info(self, msg: str) -> None:
        self._emit("INFO", msg)

    def warning(self, msg: str) -> None:
        self._emit("WARNING", msg)

    def error(self, msg: str) -> None:
        self._emit("ERROR", msg)

    def critical(self, msg: str) -> None:
        self._emit("CRITICAL", msg)

    def exception(self, msg: str) -> None:
        """Log exception with full traceback"""
        logger.bind(module=_caller_module(self.name, 2)).opt(exception=True).error(msg)
