"""Exception hierarchy shared by the simulator modules."""


class IfomSimError(Exception):
    """Base class for every error raised by ifomsim."""


class DomainError(IfomSimError, ValueError):
    """An argument lies outside the domain of a formula."""


class ConfigError(IfomSimError):
    """Invalid or unknown configuration entry.

    ``key`` and ``line`` are filled in when the error can be traced to a
    location in a configuration file.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class PlacementError(IfomSimError):
    """Rejection sampling could not place a user."""


# binding cache / flow binding errors


class BindingError(IfomSimError):
    pass


class UnknownBinding(BindingError, KeyError):
    pass


class UnknownFlow(BindingError, KeyError):
    pass


class BindingInUse(BindingError):
    pass


class NoMatchingRule(BindingError):
    pass


# MAC-layer admission errors


class DuplicateBearer(IfomSimError):
    pass


class AlreadyAssociated(IfomSimError):
    pass
