"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto the
documented process exit statuses (1 config, 2 assumption, 3 infeasible,
4 enumeration cap).
"""


class ContractError(Exception):
    exit_code = 1


class ConfigError(ContractError):
    exit_code = 1

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class ParseError(ConfigError):
    pass


class SchemaError(ConfigError):
    pass


class AssumptionViolated(ContractError):
    exit_code = 2


class BadDelta(AssumptionViolated):
    pass


class BadParams(AssumptionViolated):
    pass


class OutOfRange(ContractError):
    exit_code = 3


class NoSolution(ContractError):
    """The break-even recursion demands more knowledge than remains."""

    exit_code = 3


class NoRoot(NoSolution):
    pass


class NoContract(NoSolution):
    pass


class TrivialContract(ContractError):
    exit_code = 3


class CapExceeded(ContractError):
    exit_code = 4
