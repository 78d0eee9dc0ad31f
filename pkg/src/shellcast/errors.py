"""Exception types shared across the package."""


class ShellcastError(Exception):
    """Base class for package errors."""


class ParseError(ShellcastError):
    """A raw input file is malformed; message names file and line."""


class ConfigError(ShellcastError):
    """Inputs are inconsistent with the estuary configuration."""


class DataError(ShellcastError):
    """A dataset violates a contract (empty, wrong width, bad labels)."""


class CalibrationError(ShellcastError):
    """Synthetic-rule calibration could not reach its target."""


class TrainingError(ShellcastError):
    """Model training diverged or received unusable data."""
