from abc import ABC, abstractmethod
import difflib
from typing import Dict, Iterable, List, Optional

import beartype.door
import beartype.roar
from beartype import BeartypeConf

# ints are accepted where floats are expected, as JSON does not tell them apart
BEARTYPE_CONF = BeartypeConf(is_pep484_tower=True)


class ConfigReason(ABC):
    """Everything that can be wrong with one configuration key.

    Messages are rendered lazily so that collecting reasons stays cheap, and all
    configuration messages live in this file."""

    key: str

    @abstractmethod
    def __str__(self):
        return super().__str__()


class UnknownKey(ConfigReason):
    def __init__(self, key: str, known: Iterable[str]):
        self.key = key
        self.known = sorted(known)

    def __str__(self):
        message = f"Unknown configuration key '{self.key}'."
        suggestions = difflib.get_close_matches(self.key, self.known, n=1, cutoff=0.8)
        if suggestions:
            message += f" Did you mean '{suggestions[0]}'?"
        return message


class TypeMismatch(ConfigReason):
    """die_if_unbearable is a lot slower than is_bearable, so the beartype message is
    only produced when the reason is printed."""

    def __init__(self, key: str, value: object, type_hint: object):
        self.key = key
        self.value = value
        self.type_hint = type_hint

    def __str__(self):
        try:
            beartype.door.die_if_unbearable(self.value, self.type_hint, conf=BEARTYPE_CONF)
        except beartype.roar.BeartypeDoorHintViolation as e:
            return f"There is a type mismatch for key '{self.key}': {e}"
        return f"There is a type mismatch for key '{self.key}'."


class OutOfRange(ConfigReason):
    def __init__(self, key: str, error_message: str, value: object = None):
        self.key = key
        self.error_message = error_message
        self.value = value

    def __str__(self):
        return f"Invalid value {self.value!r} for key '{self.key}': {self.error_message}"


class MissingFile(ConfigReason):
    def __init__(self, key: str, path: str, hint: Optional[str] = None):
        self.key = key
        self.path = path
        self.hint = hint

    def __str__(self):
        message = f"The file '{self.path}' given by '{self.key}' does not exist."
        if self.hint:
            message += " " + self.hint
        return message


class FullConfigReason(ConfigReason):
    def __init__(self, source: str, reasons: List[ConfigReason]):
        self.key = source
        self.source = source
        self.reasons = reasons

    def __str__(self):
        full_message = f"The configuration from {self.source} is invalid, here is why:"
        for reason in self.reasons:
            full_message += "\n"
            full_message += str(reason)
        return full_message


class ConfigError(Exception):
    """All the problems found while resolving one configuration."""

    def __init__(self, reason: FullConfigReason):
        super().__init__(reason)
        self.reason = reason

    @property
    def keys(self) -> List[str]:
        return [reason.key for reason in self.reason.reasons]

    def __reduce__(self):
        return (self.__class__, (self.reason,))


def check_value(key: str, value: object, type_hint: object) -> Optional[ConfigReason]:
    if beartype.door.is_bearable(value, type_hint, conf=BEARTYPE_CONF):
        return None
    return TypeMismatch(key, value, type_hint)


def out_of_range_reasons(
    prefix: str, error, aliases: Optional[Dict[str, str]] = None
) -> List[ConfigReason]:
    """One reason per entry of a pydantic ValidationError, keyed by dotted path.

    `aliases` renames top-level fields whose key differs from the field name.
    """
    aliases = aliases or {}
    reasons: List[ConfigReason] = []
    for entry in error.errors():
        location = ".".join(str(part) for part in entry.get("loc", ()))
        if location in aliases:
            key = aliases[location]
        else:
            key = ".".join(part for part in (prefix, location) if part) or "config"
        reasons.append(OutOfRange(key, entry.get("msg", ""), entry.get("input")))
    return reasons
