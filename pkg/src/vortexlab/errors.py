"""Exception type shared by every module of the package."""


class LabError(ValueError):
    """A precondition or numerical failure with a stable, machine-readable code.

    The ``code`` attribute is one of the short kebab-case identifiers listed in
    the module docstrings (``"duplicate-point"``, ``"solver-diverged"``, ...);
    callers should branch on it rather than on the message text.
    """

    def __init__(self, code, message=None):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)
