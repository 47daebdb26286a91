"""Gradient verification against central finite differences."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class BlockCheck:
    name: str
    max_rel_err: float
    n_checked: int
    note: str = ""


@dataclass
class GradCheckReport:
    blocks: list = field(default_factory=list)

    @property
    def max_rel_err(self) -> float:
        errs = [b.max_rel_err for b in self.blocks if b.n_checked]
        return max(errs) if errs else 0.0

    def failed_blocks(self, tolerance: float) -> list:
        return [b.name for b in self.blocks if b.n_checked and b.max_rel_err >= tolerance]

    def passed(self, tolerance: float) -> bool:
        return not self.failed_blocks(tolerance)


def grad_check(loss_fn, grad_fn, params: dict, eps: float = 1e-5) -> GradCheckReport:
    """Compare analytic gradients to central differences, element by element.

    ``loss_fn(params) -> float`` and ``grad_fn(params) -> dict`` must be pure
    in the parameters. Relative error per element is
    ``|a - n| / max(|a|, |n|, 1e-8)``; the report carries the max per block.
    Intended for small models (<= ~1e4 parameters).
    """
    analytic = grad_fn(params)
    report = GradCheckReport()
    for name in sorted(params):
        theta = params[name]
        if theta.size == 0:
            report.blocks.append(BlockCheck(name, 0.0, 0, note="empty block, skipped"))
            continue
        a = analytic[name]
        worst = 0.0
        flat = theta.reshape(-1)
        aflat = a.reshape(-1)
        for ix in range(flat.size):
            orig = flat[ix]
            flat[ix] = orig + eps
            up = loss_fn(params)
            flat[ix] = orig - eps
            down = loss_fn(params)
            flat[ix] = orig
            numeric = (up - down) / (2.0 * eps)
            denom = max(abs(aflat[ix]), abs(numeric), 1e-8)
            worst = max(worst, abs(aflat[ix] - numeric) / denom)
        report.blocks.append(BlockCheck(name, worst, flat.size))
    return report
