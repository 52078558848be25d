"""Exception capture: sweep cells and metadata probes report failures as values."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Generic, Optional, Tuple, Type, TypeVar

T = TypeVar("T")


@dataclass(frozen=True)
class Captured(Generic[T]):
    value: Optional[T] = None
    error: Optional[BaseException] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def capture(fn: Callable[..., T], *args: Any,
            catch: Tuple[Type[BaseException], ...] = (Exception,), **kwargs: Any) -> Captured[T]:
    """Run fn(*args, **kwargs); an exception in `catch` becomes Captured.error.

    Anything outside `catch` (KeyboardInterrupt by default) propagates.
    """
    try:
        return Captured(value=fn(*args, **kwargs))
    except catch as exc:
        return Captured(error=exc)


def safe_call(fn: Callable[[], T], *, default: Optional[T] = None,
              log: Optional[Callable[[BaseException], Any]] = None) -> Optional[T]:
    """fn() or `default`; `log` receives the swallowed exception."""
    got = capture(fn)
    if got.ok:
        return got.value
    if log is not None:
        log(got.error)
    return default
