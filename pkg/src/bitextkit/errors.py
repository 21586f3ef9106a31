"""Exception hierarchy shared by all bitextkit modules."""


class BitextError(Exception):
    """Base class for every error raised by bitextkit."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class EmptyCorpus(BitextError):
    code = "empty_corpus"


class EmptyReference(BitextError):
    code = "empty_reference"


class LengthMismatch(BitextError):
    code = "length_mismatch"


class DanglingMarker(BitextError):
    code = "dangling_marker"


class BackendUnavailable(BitextError):
    code = "backend_unavailable"


class MalformedBackendOutput(BitextError):
    code = "malformed_backend_output"


class PivotMismatch(BitextError):
    code = "pivot_mismatch"


class EmptyCollection(BitextError):
    code = "empty_collection"


class EmptyDocument(BitextError):
    code = "empty_document"


class EmptyParagraph(BitextError):
    code = "empty_paragraph"


class FetchFailed(BitextError):
    code = "fetch_failed"


class HostNotAllowed(BitextError):
    code = "host_not_allowed"


class ExtractionFailed(BitextError):
    code = "extraction_failed"


class BadDate(BitextError):
    code = "bad_date"


class StoreCorrupt(BitextError):
    code = "store_corrupt"

    def __init__(self, path, lineno, reason):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.path = path
        self.lineno = lineno


class SampleTooLarge(BitextError):
    code = "sample_too_large"


class MalformedFile(BitextError):
    code = "malformed_file"

    def __init__(self, path, location, reason):
        super().__init__(f"{path}:{location}: {reason}")
        self.path = path
        self.location = location


class MissingInput(BitextError):
    code = "missing_input"


class ConfigInvalid(BitextError):
    code = "config_invalid"

    def __init__(self, problems):
        self.problems = dict(problems)
        msg = "; ".join(f"{k}: {v}" for k, v in self.problems.items())
        super().__init__(msg)

    def to_dict(self):
        return {"error": self.code, "message": str(self), "fields": self.problems}


class UnknownLanguage(BitextError, ValueError):
    code = "unknown_language"
