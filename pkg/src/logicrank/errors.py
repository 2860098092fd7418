"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class MalformedRecord(PipelineError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class UnknownLabel(PipelineError):
    def __init__(self, value: object):
        super().__init__(f"not a recognized label: {value!r}")
        self.value = value


class EmptyReasoning(PipelineError):
    pass


class BackendUnavailable(PipelineError):
    pass


class MalformedBackendReply(PipelineError):
    pass


class ScriptMiss(PipelineError):
    def __init__(self, tag: str, digest: str):
        super().__init__(f"no mock rule matches tag={tag!r} digest={digest}")
        self.tag = tag
        self.digest = digest


class DoubleAssignment(PipelineError):
    pass


class DuplicateKey(PipelineError):
    pass


class EmptyReferences(PipelineError):
    pass


class GroupTooSmall(PipelineError):
    pass


class UnassignedReward(PipelineError):
    pass


class IdMismatch(PipelineError):
    pass


class StepTagCollision(PipelineError):
    pass


class IoFailure(PipelineError):
    pass


class SingleClassData(PipelineError):
    pass


class RemoteUnavailable(PipelineError):
    pass


class ProtocolViolation(PipelineError):
    pass


class ModelNotLoaded(PipelineError):
    pass


class NotEnoughCandidates(PipelineError):
    pass


class ConfigInvalid(PipelineError):
    def __init__(self, field_path: str, reason: str):
        super().__init__(f"{field_path}: {reason}")
        self.field_path = field_path
        self.reason = reason


class UnknownCommand(PipelineError):
    pass


class RunLocked(PipelineError):
    pass


class StageOutputMismatch(PipelineError):
    pass
