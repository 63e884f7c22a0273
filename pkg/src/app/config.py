"""
Learning-to-Rank Generalization Workbench
App module - flat key = value configuration files merged under argparse flags
"""

import argparse
import logging

from src.core.errors import ConfigError

logger = logging.getLogger(__name__)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def read_config(path):
    """Read `key = value` lines; '#' starts a comment, keys may use '-' or '_'"""
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc

    values = {}
    for number, line in enumerate(lines, start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        key, sep, value = content.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise ConfigError(f"{path} line {number}: expected 'key = value'")
        values[key] = value.strip()
    return values


def _convert(action, key, raw):
    if isinstance(action, argparse._CountAction):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"config key {key!r} expects an integer, got {raw!r}") from None
    if action.nargs == 0:
        # store_true / store_false style flags
        lowered = raw.lower()
        if lowered in _TRUE:
            flag = True
        elif lowered in _FALSE:
            flag = False
        else:
            raise ConfigError(f"config key {key!r} expects a boolean, got {raw!r}")
        return flag if action.const is True else not flag
    try:
        value = action.type(raw) if action.type is not None else raw
    except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from exc
    if action.choices is not None and value not in action.choices:
        raise ConfigError(f"config key {key!r} must be one of {sorted(action.choices)}, got {raw!r}")
    return value


def apply_config(parser, values):
    """Install file values as parser defaults so command-line flags still win"""
    actions = {action.dest: action for action in parser._actions if action.option_strings}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise ConfigError(f"unknown config key {key!r}")
        defaults[key] = _convert(action, key, raw)
    logger.debug("config defaults: %s", defaults)
    parser.set_defaults(**defaults)
