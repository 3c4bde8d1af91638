import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def getenv_int(key: str, default: int = 0) -> int:
    """
    Get the value of an integer environment value.
    Empty values are treated as unset.

    :param key: Name of the environment value.
    :param default: Value if not set.
    :return: Environment variable value or default.
    """
    value = os.environ.get(key, "").strip()
    if not value:
        return default

    try:
        return int(value)
    except ValueError:
        raise ValueError(f"Not an integer: {key}={repr(value)}") from None


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """
    Map a function over items in worker processes, keeping the input order.
    The width is capped by SEAQT_SIM_THREADS (0 or unset: one per CPU);
    a width of 1 maps in-process.

    :param fn: Picklable function.
    :param items: Items to map over.
    :return: Results in input order.
    """
    width = getenv_int("SEAQT_SIM_THREADS", 0)
    if width < 0:
        raise ValueError(f"SEAQT_SIM_THREADS must be non-negative: {width}")

    width = min(width or os.cpu_count() or 1, len(items))
    if width <= 1:
        return [fn(item) for item in items]

    with ProcessPoolExecutor(max_workers=width) as pool:
        return list(pool.map(fn, items))
