"""Scheduler kernels against the frozen PRB-by-PRB allocation table."""

import csv
import gzip
import os

import pytest

from conftest import ORACLES
from ifomsim import _kernels

KINDS = {"voip": (1, 13), "video": (1, 1500), "bulk_gbr": (1, 12000), "best_effort": (0, 0)}


def load_table():
    rows = []
    with gzip.open(os.path.join(ORACLES, "alloc_table.csv.gz"), "rt", newline="") as fh:
        for r in csv.DictReader(fh):
            br = [b.split(":") for b in r["bearers"].split(";")] if r["bearers"] else []
            args = ([KINDS[b[0]][0] for b in br], [KINDS[b[0]][1] for b in br],
                    [int(b[1]) for b in br], [int(b[2]) for b in br], [int(b[3]) for b in br],
                    int(r["nprb"]), int(r["rr"]))
            want = [int(a) for a in r["alloc"].split(";")] if r["alloc"] else []
            rows.append((args, want))
    return rows


@pytest.fixture(scope="module")
def table():
    return load_table()


def test_table_covers_up_to_three_bearers(table):
    sizes = {len(args[0]) for args, _ in table}
    assert sizes == {0, 1, 2, 3}
    assert len(table) > 100_000


@pytest.mark.parametrize("backend", _kernels.available())
def test_kernel_matches_table(table, backend):
    mod = _kernels.get_backend(backend)
    bad = [(args, want) for args, want in table if list(mod.allocate_prbs(*args)) != want]
    assert bad == []
