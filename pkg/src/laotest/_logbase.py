"""Active logarithm base for divergences and exponents.

Exponents are reported in units of ``log_base`` (2 means bits).  The active
base lives in a context variable so concurrent callers never see each
other's setting.
"""

from __future__ import annotations

import contextlib
import contextvars
import math

DEFAULT_LOG_BASE = 2.0

_active_base: contextvars.ContextVar[float] = contextvars.ContextVar(
    "laotest_log_base", default=DEFAULT_LOG_BASE
)


def _check(base: float) -> float:
    base = float(base)
    if not math.isfinite(base) or base <= 1.0:
        raise ValueError(f"log base must be a finite number > 1, got {base!r}")
    return base


def get_log_base() -> float:
    return _active_base.get()


def set_log_base(base: float) -> None:
    """Change the active base for the current context."""
    _active_base.set(_check(base))


@contextlib.contextmanager
def log_base(base: float):
    """Temporarily switch the active base::

        with log_base(math.e):
            nats = kl_divergence(q, g)
    """
    token = _active_base.set(_check(base))
    try:
        yield base
    finally:
        _active_base.reset(token)


def resolve_base(base: float | None) -> float:
    return get_log_base() if base is None else _check(base)


def nat_scale(base: float | None) -> float:
    """Factor converting natural-log quantities into ``base`` units."""
    return 1.0 / math.log(resolve_base(base))
