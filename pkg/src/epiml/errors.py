"""Error taxonomy mapped onto CLI exit codes."""


class ConfigurationError(Exception):
    """Bad run configuration (missing columns, invalid flags). Exit code 2."""


class DataError(Exception):
    """Invalid or degenerate data content. Exit code 3."""


class PipelineError(Exception):
    """Runtime failure inside a pipeline stage. Exit code 4."""
