"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class ShortmolError(Exception):
    """Base class for all library errors."""


class InputDomainError(ShortmolError, ValueError):
    """An argument lies outside the domain of the operation."""


class AsymmetricChannelError(InputDomainError):
    """A message-independence–dependent analysis was requested on a channel
    with no verified symmetry witness."""


class CapabilityError(ShortmolError, RuntimeError):
    """The request exceeds an enumeration or search budget."""


class UndetectedErrorDetected(ShortmolError, AssertionError):
    """The zero-undetected-error decoder returned a wrong codeword.

    This can only happen through a bug (or a corrupted support mask), so it is
    raised instead of being counted silently.
    """
