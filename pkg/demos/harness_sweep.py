"""
A declarative sweep from a YAML config
======================================

The same machinery behind the ``sbos`` command: parse a config, run every
policy over the budget grid, write a CSV and an SVG chart.
"""

import os
import tempfile

from sbos.config import parse_config
from sbos.harness import run_experiment
from sbos.report import atomic_write, format_csv, render_svg, result_rows, summary_table

CONFIG = """\
experiment: synthetic-k8
policies: [seo-sgd, uniform-sgd, ocba]
instance:
  family: synthetic
  K: 8
  params: {gaps: [null, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]}
budgets: [200, 400, 800, 1600]
replications: 200
base_seed: 11
"""

config = parse_config(CONFIG, "inline")
rows = []
for policy in config.policies:
    plan = config.plan(policy)
    rows.extend(result_rows(config.experiment, plan, run_experiment(plan)))
print(summary_table(rows))

out = tempfile.mkdtemp(prefix="sbos-demo-")
atomic_write(os.path.join(out, "sweep.csv"), format_csv(rows))
atomic_write(os.path.join(out, "sweep.svg"), render_svg(rows, title=config.experiment))
print("wrote", out)
