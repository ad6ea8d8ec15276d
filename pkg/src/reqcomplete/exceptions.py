"""Exception hierarchy shared by all reqcomplete modules."""


class ReqCompleteError(Exception):
    """Base class for every error raised by this package."""


class EmptyDocument(ReqCompleteError):
    pass


class BackendUnavailable(ReqCompleteError):
    pass


class QueryTooLong(ReqCompleteError):
    def __init__(self, n_tokens, limit):
        super().__init__(f"query has {n_tokens} tokens, backend context window is {limit}")
        self.n_tokens = n_tokens
        self.limit = limit


class ModelNotFound(ReqCompleteError):
    pass


class PredictionError(ReqCompleteError):
    """Wraps a gateway error together with the mask instance that triggered it."""

    def __init__(self, instance, cause):
        super().__init__(f"prediction failed at {instance}: {cause}")
        self.instance = instance
        self.cause = cause


class NetworkUnavailable(ReqCompleteError):
    pass


class NoArticlesFound(ReqCompleteError):
    pass


class EmptyCorpus(ReqCompleteError):
    pass


class DegenerateDataset(ReqCompleteError):
    pass


class UnsupportedAlgorithm(ReqCompleteError):
    pass


class TooFewRows(ReqCompleteError):
    pass


class SchemaMismatch(ReqCompleteError):
    pass


class TooSmall(ReqCompleteError):
    pass
