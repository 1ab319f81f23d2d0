"""Small-time heat content of Levy processes: Monte Carlo estimators and experiment runners.

Models and domains are preset dicts, e.g. {"preset": "stable", "beta": 1.5} and
{"preset": "disk", "radius": 1.0}; experiment configs use the same keys as the
`shc` command-line tool.
"""

import json

from . import _shc
from ._shc import (
    ArgumentError,
    ClassificationConflictError,
    ConfigError,
    DivergentPerimeterError,
    PreconditionError,
    ShcError,
    brownian_sup_mean,
    cauchy_sup_asymptotic,
    stable_sup_mean,
)

__all__ = [
    "ArgumentError",
    "ClassificationConflictError",
    "ConfigError",
    "DivergentPerimeterError",
    "PreconditionError",
    "ShcError",
    "brownian_sup_mean",
    "cauchy_sup_asymptotic",
    "exit_probability_ball",
    "heat_content_deficit",
    "levy_tail_mass",
    "perimeter",
    "phi",
    "run_bound_audit",
    "run_dichotomy",
    "run_halfspace_suite",
    "run_t_negligibility",
    "stable_sup_mean",
    "sup_functional",
    "variation",
]


def _enc(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def levy_tail_mass(model, r):
    return _shc.levy_tail_mass(_enc(model), r)


def phi(model, r):
    return _shc.phi(_enc(model), r)


def variation(model):
    """"bounded" or "unbounded"."""
    return _shc.variation(_enc(model))


def sup_functional(model, t, b=1.0, n_paths=10000, steps=256, seed=1, threads=0):
    """E[min(b, sup_{s<=t} X^1_s)] as a dict with value and std_error."""
    return _shc.sup_functional(_enc(model), t, b, n_paths, steps, seed, threads)


def exit_probability_ball(model, r, t, n_paths=10000, steps=256, seed=1, threads=0):
    return _shc.exit_probability_ball(_enc(model), r, t, n_paths, steps, seed, threads)


def heat_content_deficit(model, domain, t, n_paths=10000, strategy="stratified", layer_width=None,
                         steps=256, seed=1, threads=0):
    return _shc.heat_content_deficit(_enc(model), _enc(domain), t, n_paths, strategy, layer_width,
                                     steps, seed, threads)


def perimeter(model, domain, method="quadrature", samples=1000000, seed=1):
    return _shc.perimeter(_enc(model), _enc(domain), method, samples, seed)


def run_dichotomy(config):
    return json.loads(_shc.run_dichotomy(_enc(config)))


def run_t_negligibility(config):
    return json.loads(_shc.run_t_negligibility(_enc(config)))


def run_halfspace_suite(config):
    return json.loads(_shc.run_halfspace_suite(_enc(config)))


def run_bound_audit(config):
    return json.loads(_shc.run_bound_audit(_enc(config)))
