"""Coarse invariants of finitely generated groups."""

from fractions import Fraction
import json as _json

from . import _core
from ._core import (
    ContractError,
    Group,
    InputError,
    Refusal,
    ResourceError,
    WindowError,
    ends_estimate,
    homology,
    smith_normal_form,
    task_names,
    version,
)

__all__ = [
    "ContractError",
    "Group",
    "InputError",
    "Refusal",
    "ResourceError",
    "WindowError",
    "chi_amalgam",
    "chi_hnn",
    "ends_estimate",
    "homology",
    "one_relator_chi",
    "run_task",
    "smith_normal_form",
    "task_names",
    "version",
]

__version__ = version()


def run_task(config, *, task=None, seed=None, budget=None, format=None):
    """Run one task. `config` is a dict or JSON text.

    Returns (exit_code, report); the report is a dict for JSON output and
    text for CSV.
    """
    text = config if isinstance(config, str) else _json.dumps(config)
    code, report = _core.run_task(text, task=task, seed=seed, budget=budget, format=format)
    if format == "csv":
        return code, report
    return code, _json.loads(report)


def one_relator_chi(n, m):
    return Fraction(_core.one_relator_chi(n, m))


def chi_amalgam(a, b, c):
    return Fraction(_core.chi_amalgam(str(Fraction(a)), str(Fraction(b)), str(Fraction(c))))


def chi_hnn(a, c):
    return Fraction(_core.chi_hnn(str(Fraction(a)), str(Fraction(c))))
