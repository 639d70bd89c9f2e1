"""Error types shared by the library and the command-line harness."""


class ValidationError(ValueError):
    """Bad input: constructor arguments, config values, CLI options."""


class ConfigError(ValidationError):
    """A config file failed schema validation.

    Collects every offending key so a bad file is reported in one pass.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NumericalIntegrityError(ArithmeticError):
    """An internal numerical guarantee (normalization, finiteness) broke."""
