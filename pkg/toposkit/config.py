import os

from toposkit.errors import ResourceLimitError

MAX_ENUM_ENV = "TOPOSKIT_MAX_ENUM"
DEFAULT_MAX_ENUM = 10**7

_max_enum: int | None = None


def get_max_enum() -> int:
    if _max_enum is not None:
        return _max_enum
    return int(os.getenv(MAX_ENUM_ENV, DEFAULT_MAX_ENUM))


def set_max_enum(value: int | None) -> None:
    """
    Override the enumeration bound for the rest of the process.
    `None` falls back to the environment variable, then to the default.
    """
    global _max_enum
    _max_enum = value


class EnumerationGuard:
    def __init__(self, limit: int | None = None, what: str = "candidates"):
        self.limit = limit if limit is not None else get_max_enum()
        self.what = what
        self.count = 0

    def tick(self, n: int = 1) -> None:
        self.count += n
        if self.count > self.limit:
            raise ResourceLimitError(
                f"Enumeration of {self.what} exceeded the bound of {self.limit} "
                f"(raise it with --max-enum or {MAX_ENUM_ENV})"
            )

    def expect(self, estimate: int) -> None:
        """Refuse up front when a known candidate count is already over the bound."""
        if estimate > self.limit:
            raise ResourceLimitError(
                f"Refusing to enumerate {estimate} {self.what}: bound is {self.limit} "
                f"(raise it with --max-enum or {MAX_ENUM_ENV})"
            )

    def __repr__(self):
        return f"EnumerationGuard({self.count}/{self.limit} {self.what})"
