"""Replay report writers: text table, transaction CSV, cost figure."""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from ..ledger import Ledger
from .replay import ReplayResult

_ROWS = [
    ("interpreterDeployCost", "Interpreter deployment"),
    ("flowDeployCost", "Model registration (total)"),
    ("avgRegistrationCostPerElement", "Avg. registration cost / element"),
    ("avgInstantiationCost", "Avg. case instantiation"),
    ("avgTraceExecutionCost", "Avg. trace execution"),
]


def render_table(result: ReplayResult) -> str:
    label_w = max(len(label) for _, label in _ROWS)
    lines = [f"model {result.model_hash}",
             f"cases: {len(result.cases)}  "
             f"violations: {len(result.violations)}", ""]
    lines.append(f"{'Cost item'.ljust(label_w)}  {'CostUnits':>14}")
    lines.append("-" * (label_w + 16))
    for key, label in _ROWS:
        value = result.report.get(key, 0)
        text = f"{value:,.2f}" if isinstance(value, float) else f"{value:,}"
        lines.append(f"{label.ljust(label_w)}  {text:>14}")
    lines.append("")
    for case in result.cases:
        status = "violation: " + case.violation["reason"] if case.violation \
            else ("completed" if case.completed else "running")
        lines.append(f"{case.label}: steps={case.steps} "
                     f"cost={case.cost:,} [{status}]")
    return "\n".join(lines) + "\n"


def write_table(result: ReplayResult, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_table(result))


def write_transactions_csv(ledger: Ledger, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seq", "origin", "kind", "to", "operation",
                         "status", "reason", "cost"])
        for tx in ledger.transactions:
            writer.writerow([tx.seq, tx.origin, tx.kind, tx.to, tx.operation,
                             tx.status, tx.reason, tx.cost])


def write_cost_figure(result: ReplayResult, path: str) -> None:
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4), dpi=110)

    labels = [case.label for case in result.cases]
    costs = [case.cost for case in result.cases]
    colors = ["#c0392b" if case.violation else "#2d6a9f"
              for case in result.cases]
    left.bar(range(len(costs)), costs, color=colors)
    left.set_xticks(range(len(labels)))
    left.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    left.set_ylabel("CostUnits")
    left.set_title("Execution cost per case")

    report = result.report
    keys = ["avgRegistrationCostPerElement", "avgInstantiationCost",
            "avgTraceExecutionCost"]
    names = ["reg / element", "instantiation", "trace execution"]
    right.bar(range(len(keys)), [report.get(k, 0) for k in keys],
              color="#5a8f4e")
    right.set_xticks(range(len(keys)))
    right.set_xticklabels(names, fontsize=8)
    right.set_title("Average costs")

    fig.suptitle(f"model {result.model_hash[:16]}", fontsize=9)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
