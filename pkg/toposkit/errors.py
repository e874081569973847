class ToposkitError(Exception):
    pass


class ResourceLimitError(ToposkitError):
    """Raised when an enumeration would visit more candidates than the configured bound."""

    pass


class ValidationError(ToposkitError):
    def __init__(self, report):
        self.report = report
        super().__init__(str(report))
