"""Bundled benchmark networks.

``garver6`` is the classic six-bus expansion testbed: six existing lines,
forty-five candidate additions (three per corridor), three generators and
five demands, with an isolated generation-rich sixth bus that only candidate
corridors can connect. ``onebus`` and ``twobus`` are minimal networks used
for calibration and for exercising a single build decision.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import ValidationError
from .network import Network, load_network

_NAMES = ("garver6", "onebus", "twobus")
_STUDIES = ("garver6_study", "onebus_calibration_study")


def dataset_names() -> tuple[str, ...]:
    return _NAMES


def dataset_path(name: str) -> Path:
    """Filesystem path of a bundled network file."""
    if name not in _NAMES:
        raise ValidationError(f"unknown dataset {name!r}; choose from {_NAMES}")
    return Path(str(resources.files("arotnep") / "data" / f"{name}.json"))


def load_dataset(name: str) -> Network:
    return load_network(dataset_path(name))


def study_names() -> tuple[str, ...]:
    return _STUDIES


def study_path(name: str) -> Path:
    """Filesystem path of a bundled study file (for the command line)."""
    if name not in _STUDIES:
        raise ValidationError(f"unknown study {name!r}; choose from {_STUDIES}")
    return Path(str(resources.files("arotnep") / "data" / f"{name}.json"))
