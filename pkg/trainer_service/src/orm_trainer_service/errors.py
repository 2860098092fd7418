"""Service-level exception types."""


class TrainerError(Exception):
    pass


class SchemaViolation(TrainerError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class SingleClassData(TrainerError):
    pass


class ModelLoadFailure(TrainerError):
    pass


class ResourceExhausted(TrainerError):
    pass
