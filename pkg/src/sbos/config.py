"""Declarative run configuration (YAML).

Example::

    experiment: dosage-k16
    policy: seo-sgd
    policies: [seo-sgd, uniform-sgd, ocba]
    instance:
      family: dosage
      K: 16
      params: {instance_seed: 0}
    budgets: [8000, 16000, 32000]
    replications: 500
    base_seed: 1
    policy_config: {gamma0: 1.0}
    output_dir: results
    chart: true

Validation errors carry the line of the offending key.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import yaml

from .harness import FAMILIES, ExperimentPlan, InstanceSpec
from .selection import POLICIES, ConfigurationError

TOP_KEYS = ("experiment", "policy", "policies", "instance", "budgets", "replications", "base_seed",
            "policy_config", "regenerate_instance", "min_gap", "output_dir", "chart", "log_pfs")
INSTANCE_KEYS = ("family", "K", "params")


class ConfigError(ConfigurationError):
    """Invalid configuration; ``str()`` is ``file:line: key: message``."""

    def __init__(self, message: str, key: str = "", line: int | None = None, source: str = "<config>"):
        self.key, self.line, self.source = key, line, source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {key + ': ' if key else ''}{message}")


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    family: str
    K: int
    budgets: tuple
    policy: str | None = None
    policies: tuple = ()
    params: dict = field(default_factory=dict)
    replications: int = 1000
    base_seed: int = 0
    policy_config: dict = field(default_factory=dict)
    regenerate_instance: bool = False
    min_gap: float = 1e-6
    output_dir: str = "results"
    chart: bool = True
    log_pfs: bool = False

    def plan(self, policy: str | None = None, seed: int | None = None,
             replications: int | None = None) -> ExperimentPlan:
        policy = policy or self.policy or (self.policies[0] if self.policies else None)
        if policy is None:
            raise ConfigError("no policy given", "policy")
        return ExperimentPlan(policy, InstanceSpec(self.family, self.K, dict(self.params)), self.budgets,
                              replications if replications is not None else self.replications,
                              seed if seed is not None else self.base_seed, dict(self.policy_config),
                              self.regenerate_instance, self.min_gap)

    def to_dict(self) -> dict:
        out = {"experiment": self.experiment}
        if self.policy is not None:
            out["policy"] = self.policy
        if self.policies:
            out["policies"] = list(self.policies)
        out["instance"] = {"family": self.family, "K": self.K, "params": dict(self.params)}
        out["budgets"] = list(self.budgets)
        for f in fields(self):
            if f.name in ("experiment", "policy", "policies", "family", "K", "params", "budgets"):
                continue
            value = getattr(self, f.name)
            out[f.name] = dict(value) if isinstance(value, dict) else value
        return out


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


def _key_lines(text: str) -> dict:
    """Map dotted key paths to 1-based line numbers."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[path] = k.start_mark.line + 1
                walk(v, path)
        elif isinstance(node, yaml.SequenceNode):
            for n, v in enumerate(node.value):
                lines[f"{prefix}[{n}]"] = v.start_mark.line + 1
                walk(v, f"{prefix}[{n}]")

    root = yaml.compose(text, Loader=yaml.SafeLoader)
    if root is not None:
        walk(root, "")
    return lines


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = yaml.safe_load(text)
        lines = _key_lines(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None, source=source) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", line=1, source=source)

    def fail(key, message):
        raise ConfigError(message, key, lines.get(key), source)

    for key in data:
        if key not in TOP_KEYS:
            fail(key, f"unknown key; expected one of {', '.join(TOP_KEYS)}")
    for key in ("experiment", "instance", "budgets"):
        if key not in data:
            raise ConfigError("missing required key", key, None, source)

    inst = data["instance"]
    if not isinstance(inst, dict):
        fail("instance", "must be a mapping with family, K, params")
    for key in inst:
        if key not in INSTANCE_KEYS:
            fail(f"instance.{key}", f"unknown key; expected one of {', '.join(INSTANCE_KEYS)}")
    family = inst.get("family")
    if family not in FAMILIES:
        fail("instance.family", f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    K = inst.get("K")
    if not isinstance(K, int) or isinstance(K, bool) or K < 2:
        fail("instance.K", "must be an integer >= 2")
    params = inst.get("params") or {}
    if not isinstance(params, dict):
        fail("instance.params", "must be a mapping")

    budgets = data["budgets"]
    if not isinstance(budgets, list) or not budgets:
        fail("budgets", "must be a non-empty list of integers")
    for n, b in enumerate(budgets):
        if not isinstance(b, int) or isinstance(b, bool) or b < 1:
            fail(f"budgets[{n}]", "budget must be a positive integer")
    if any(b <= a for a, b in zip(budgets, budgets[1:])):
        fail("budgets", "must be strictly increasing")

    policy = data.get("policy")
    if policy is not None and policy not in POLICIES:
        fail("policy", f"unknown policy {policy!r}; expected one of {', '.join(POLICIES)}")
    policies = data.get("policies") or []
    if not isinstance(policies, list):
        fail("policies", "must be a list")
    for n, p in enumerate(policies):
        if p not in POLICIES:
            fail(f"policies[{n}]", f"unknown policy {p!r}; expected one of {', '.join(POLICIES)}")

    def integer(key, default, minimum):
        v = data.get(key, default)
        if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
            fail(key, f"must be an integer >= {minimum}")
        return v

    def flag(key, default):
        v = data.get(key, default)
        if not isinstance(v, bool):
            fail(key, "must be true or false")
        return v

    policy_config = data.get("policy_config") or {}
    if not isinstance(policy_config, dict):
        fail("policy_config", "must be a mapping")
    min_gap = data.get("min_gap", 1e-6)
    if isinstance(min_gap, str):
        # PyYAML reads exponent literals without a dot (1e-6) as strings
        try:
            min_gap = float(min_gap)
        except ValueError:
            pass
    if not isinstance(min_gap, (int, float)) or isinstance(min_gap, bool) or min_gap < 0:
        fail("min_gap", "must be a non-negative number")
    experiment = data["experiment"]
    if not isinstance(experiment, str) or not experiment.strip():
        fail("experiment", "must be a non-empty string")
    output_dir = data.get("output_dir", "results")
    if not isinstance(output_dir, str):
        fail("output_dir", "must be a path string")

    return RunConfig(
        experiment=experiment, family=family, K=K, budgets=tuple(budgets), policy=policy,
        policies=tuple(policies), params=dict(params), replications=integer("replications", 1000, 1),
        base_seed=integer("base_seed", 0, 0), policy_config=dict(policy_config),
        regenerate_instance=flag("regenerate_instance", False), min_gap=float(min_gap),
        output_dir=output_dir, chart=flag("chart", True), log_pfs=flag("log_pfs", False),
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))
