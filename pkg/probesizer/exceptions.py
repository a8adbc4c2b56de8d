class ProbeSizerError(Exception):
    default_message = "probesizer failed"

    def __init__(self, *args):
        super().__init__(*args)
        if args:
            self.message = args[0]
        else:
            self.message = None

    def __str__(self):
        if self.message:
            return f"{self.message}"
        else:
            return self.default_message


class DomainError(ProbeSizerError, ValueError):
    default_message = "An argument lies outside the domain the operation is defined on"


class MetricRangeError(DomainError):
    default_message = "comparison gap exceeds metric range"


class CrossTaskComparisonError(ProbeSizerError, ValueError):
    default_message = "Both configurations of a comparison problem should share the same task. McNemar's test requires paired predictions, so cross-task comparisons are not supported"


class CollapsedComparisonError(ProbeSizerError):
    default_message = "collapsed comparison: the pilot performances are identical, run collapse detection before asking for a data requirement"


class InsufficientDataError(ProbeSizerError, ValueError):
    default_message = "Not enough samples in the source dataset to draw the requested subsample"


class UnknownSeedError(ProbeSizerError, KeyError):
    default_message = "Seed not found in the paired predictions"

    def __str__(self):
        # KeyError.__str__ would quote the message
        return ProbeSizerError.__str__(self)


class MalformedInputError(ProbeSizerError, ValueError):
    default_message = "Malformed input file"

    def __init__(self, *args, row_number=None):
        super().__init__(*args)
        self.row_number = row_number

    def __str__(self):
        text = super().__str__()
        if self.row_number is not None:
            return f"row {self.row_number}: {text}"
        return text


class ConfigError(ProbeSizerError, ValueError):
    default_message = "Invalid experiment configuration"
