"""Exception hierarchy shared across the pipeline stages."""


class KpiClusterError(Exception):
    """Base class for all errors raised by kpicluster."""


class FormatError(KpiClusterError, ValueError):
    """Input file has a missing or garbled header."""


class ConfigurationError(KpiClusterError, ValueError):
    """Invalid parameter combination (e.g. Ward with a non-Euclidean metric)."""


class DegenerateJobError(KpiClusterError, ValueError):
    """A (job, KPI) pair cannot be turned into a usable time x nodes matrix."""


class UndefinedIndexError(KpiClusterError, ValueError):
    """A validation index is undefined for the given partition."""
