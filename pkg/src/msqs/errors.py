"""Error taxonomy shared by the library and the command line.

Every user-facing failure carries a machine-parsable class; the CLI prints
it as the first line in the fixed form ``ERROR <CLASS>: <message>`` and
exits nonzero, so scripted drivers can branch on the class without scraping
prose.
"""

from __future__ import annotations

CONFIG_KEY = "CONFIG_KEY"              # unknown section/key in a config file
CONFIG_VALUE = "CONFIG_VALUE"          # value failed parsing or validation
CONFIG_STABILITY = "CONFIG_STABILITY"  # requested steps violate a bound
IO_FORMAT = "IO_FORMAT"                # malformed snapshot/CSV input
RUNTIME_NAN = "RUNTIME_NAN"            # non-finite field/state during a run
RUNTIME_WINDOW = "RUNTIME_WINDOW"      # packet reached the moving-window edge
ANALYZE_INPUT = "ANALYZE_INPUT"        # analysis asked of incompatible data
NOT_ENOUGH_SIDEBANDS = "NOT_ENOUGH_SIDEBANDS"  # spectrum too featureless
VALIDATE = "VALIDATE"                  # built-in invariant suite failed

ALL_CLASSES = (
    CONFIG_KEY, CONFIG_VALUE, CONFIG_STABILITY, IO_FORMAT,
    RUNTIME_NAN, RUNTIME_WINDOW, ANALYZE_INPUT, NOT_ENOUGH_SIDEBANDS,
    VALIDATE,
)


class MsqsError(Exception):
    """Failure with a stable machine-readable class."""

    def __init__(self, code: str, message: str):
        if code not in ALL_CLASSES:
            raise ValueError(f"unknown error class {code!r}")
        self.code = code
        super().__init__(message)

    def cli_text(self) -> str:
        return f"ERROR {self.code}: {self}"

    @classmethod
    def config_key(cls, message: str) -> "MsqsError":
        return cls(CONFIG_KEY, message)

    @classmethod
    def config_value(cls, message: str) -> "MsqsError":
        return cls(CONFIG_VALUE, message)

    @classmethod
    def config_stability(cls, message: str) -> "MsqsError":
        return cls(CONFIG_STABILITY, message)

    @classmethod
    def io_format(cls, message: str) -> "MsqsError":
        return cls(IO_FORMAT, message)

    @classmethod
    def runtime_nan(cls, message: str) -> "MsqsError":
        return cls(RUNTIME_NAN, message)

    @classmethod
    def runtime_window(cls, message: str) -> "MsqsError":
        return cls(RUNTIME_WINDOW, message)

    @classmethod
    def analyze_input(cls, message: str) -> "MsqsError":
        return cls(ANALYZE_INPUT, message)

    @classmethod
    def not_enough_sidebands(cls, message: str) -> "MsqsError":
        return cls(NOT_ENOUGH_SIDEBANDS, message)
