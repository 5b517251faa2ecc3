"""Python access to the laclab core: sequences, discrepancy, limit laws and the CLI."""

import json
from fractions import Fraction

from . import _laclab
from ._laclab import (
    DomainError,
    GuardError,
    command_names,
    discrepancy,
    erdos_fortet_cdf,
    frechet_cdf,
    fukuyama_constant,
    kolmogorov_cdf,
    normal_cdf,
    star_discrepancy,
)

__version__ = _laclab.version


def sequence(kind, theta=2, length=10, gamma=1.0):
    """Terms of a generated sequence as Python ints."""
    return [int(t) for t in _laclab.sequence_terms(kind, theta, length, gamma)]


def gcd_sum(terms):
    num, den = _laclab.gcd_sum([str(int(t)) for t in terms])
    return Fraction(int(num), int(den))


def run(*args):
    """Run a CLI command in-process and return (exit_code, stdout, stderr)."""
    return _laclab.run([str(a) for a in args])


def run_json(*args):
    code, out, err = run(*args)
    if code == 1:
        raise RuntimeError(err.strip())
    return json.loads(out)


__all__ = [
    "DomainError",
    "GuardError",
    "command_names",
    "discrepancy",
    "erdos_fortet_cdf",
    "frechet_cdf",
    "fukuyama_constant",
    "gcd_sum",
    "kolmogorov_cdf",
    "normal_cdf",
    "run",
    "run_json",
    "sequence",
    "star_discrepancy",
]
