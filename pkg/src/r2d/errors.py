class R2DError(Exception):
    """Error carrying a stable machine-readable code (e.g. ``"empty-language"``)."""

    def __init__(self, code, message=""):
        self.code = code
        self.message = message or code
        super().__init__(f"[{code}] {self.message}")


class ValidationError(R2DError):
    def __init__(self, report):
        self.report = report
        first = report.errors[0]
        super().__init__(first[0], "; ".join(f"{c}: {m}" for c, m in report.errors))
