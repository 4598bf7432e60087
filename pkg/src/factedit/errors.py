"""Exception types shared across the toolkit."""


class FacteditError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgument(FacteditError):
    """An argument violates an operation's precondition."""


class InvalidSpans(FacteditError):
    """Character spans overlap or do not match their host text."""


class MissingAnnotation(FacteditError):
    """The precomputed entity backend was requested but no annotation exists."""


class MalformedMarkup(FacteditError):
    """Special-token markup is unbalanced or nested."""


class ParseAlignment(FacteditError):
    """A supplied dependency parse does not align with the tokenized text."""


class ExchangeError(FacteditError):
    """A file-exchange with an external editor or perturber went wrong."""


class MissingResponse(ExchangeError):
    def __init__(self, ids):
        self.ids = sorted(ids)
        super().__init__("no response for ids: " + ", ".join(self.ids))


class DuplicateResponse(ExchangeError):
    """The response file contains the same id more than once."""


class AlignmentError(FacteditError):
    """Two record streams that must align by id do not."""


class EmptyCorpus(FacteditError):
    """An aggregate was requested over zero records."""


class ValidationError(FacteditError):
    """An input file failed validation; the message names file and line."""
