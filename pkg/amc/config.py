"""Command options from flags and flat ``key=value`` config files.

Precedence: explicit flag, then config file, then the option's default.
Config keys are the long option names with dashes written as underscores.
"""
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

from dotenv import dotenv_values

from .exceptions import InvalidArgumentError


@dataclass(frozen=True)
class Option:
    parse: Callable = str
    default: Any = None
    required: bool = False
    flag: bool = False  # store_true switch
    help: Optional[str] = None
    choices: Optional[tuple] = None

    def convert(self, raw):
        if isinstance(raw, bool):
            return raw
        value = self.parse(raw)
        if self.choices and value not in self.choices:
            raise InvalidArgumentError(f"must be one of {', '.join(map(str, self.choices))}")
        return value


def flag_name(name):
    return '--' + name.replace('_', '-')


def parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise InvalidArgumentError(f"expected a boolean, got {text!r}")


def positive_int(text):
    value = int(text)
    if value < 1:
        raise InvalidArgumentError(f"expected a positive integer, got {text!r}")
    return value


def non_negative_int(text):
    value = int(text)
    if value < 0:
        raise InvalidArgumentError(f"expected a non-negative integer, got {text!r}")
    return value


def positive_float(text):
    value = float(text)
    if not value > 0:
        raise InvalidArgumentError(f"expected a positive number, got {text!r}")
    return value


def seed_list(text):
    seeds = tuple(non_negative_int(part) for part in str(text).split(',') if part.strip())
    if not seeds:
        raise InvalidArgumentError("seed list is empty")
    return seeds


def load_config_file(path):
    path = Path(path)
    if not path.is_file():
        raise InvalidArgumentError(f"config file {path} does not exist")
    values = dotenv_values(path, interpolate=False)
    missing = sorted(key for key, value in values.items() if value is None)
    if missing:
        raise InvalidArgumentError(f"{path}: keys without a value: {', '.join(missing)}")
    return dict(values)


def add_options(parser, options):
    """Register every option on an argparse parser, defaulting to None so unset flags are visible."""
    for name, option in options.items():
        if option.flag:
            parser.add_argument(flag_name(name), dest=name, action='store_true', default=None, help=option.help)
        else:
            parser.add_argument(flag_name(name), dest=name, default=None, help=option.help)


# Values such as "-20:18:2" that argparse would otherwise read as an unknown flag
_DASH_VALUE = re.compile(r'-[\d.]')


def join_dash_values(args, options):
    """Rewrite ``--opt -x`` as ``--opt=-x`` for value-taking options whose value starts with a dash."""
    value_flags = {flag_name(name) for name, option in options.items() if not option.flag}
    joined = []
    for arg in args:
        if joined and joined[-1] in value_flags and _DASH_VALUE.match(arg):
            joined[-1] = f'{joined[-1]}={arg}'
        else:
            joined.append(arg)
    return joined


def resolve_options(options, cli_values, config_path=None):
    file_values = load_config_file(config_path) if config_path else {}
    unknown = sorted(set(file_values) - set(options))
    if unknown:
        raise InvalidArgumentError(f"unknown config keys: {', '.join(unknown)}")

    resolved = {}
    for name, option in options.items():
        raw = cli_values.get(name)
        if raw is None:
            raw = file_values.get(name)
        if raw is None:
            if option.required:
                raise InvalidArgumentError(f"{flag_name(name)} is required")
            resolved[name] = option.default
            continue
        try:
            resolved[name] = option.convert(raw)
        except (ValueError, InvalidArgumentError) as exc:
            raise InvalidArgumentError(f"bad value for {flag_name(name)}: {exc}") from exc
    return resolved
