"""Deterministic seed lineage.

One master seed enters a run; every job (a per-unit classifier, a
per-horizon sequence model, a noise draw) derives its own seed by hashing
(master, job name). Schedules and worker counts can then never change what
any job computes.
"""

import hashlib


def derive_seed(master: int, name: str) -> int:
    digest = hashlib.sha256(f"{int(master)}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1  # keep it positive
