import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from econpilot.dataset import Table, VariableKind, audit_dataset, load_dataset
from econpilot.profiling import profile as profile_dataset

REPO = Path(__file__).resolve().parent.parent
DATA_CSV = REPO / "data" / "household_panel.csv"
DATA_META = REPO / "data" / "household_panel.meta.json"
FIXTURES = REPO / "fixtures"


@pytest.fixture(scope="session")
def demo_paths():
    return {"csv": DATA_CSV, "meta": DATA_META, "fixtures": FIXTURES}


@pytest.fixture(scope="session")
def demo_table_audit():
    return load_dataset(DATA_CSV)


@pytest.fixture(scope="session")
def demo_table(demo_table_audit):
    return demo_table_audit[0]


@pytest.fixture(scope="session")
def demo_audit(demo_table_audit):
    return demo_table_audit[1]


@pytest.fixture(scope="session")
def demo_profile(demo_table_audit):
    table, audit = demo_table_audit
    return profile_dataset(table, audit)


def make_table(columns: dict, kinds: dict = None) -> Table:
    """Build a Table from name -> value-list, inferring kinds unless given."""
    names = list(columns)
    cols = [list(columns[n]) for n in names]
    if kinds is None:
        from econpilot.dataset import infer_kind
        kind_list = [infer_kind(c) for c in cols]
    else:
        kind_list = [kinds[n] for n in names]
    return Table(names, kind_list, cols)


def make_panel(n_entities: int, waves: int, seed: int = 0,
               slopes: dict = None, entity_effect: float = 1.0,
               noise: float = 0.1):
    """Random panel with known data-generating slopes.

    Returns (table, audit) where the table has columns id, t, y, and one
    column per slope regressor.
    """
    rng = np.random.default_rng(seed)
    slopes = slopes or {"x1": 2.0}
    ids, ts = [], []
    xcols = {name: [] for name in slopes}
    y = []
    alpha = rng.normal(0.0, entity_effect, n_entities)
    gamma = rng.normal(0.0, entity_effect / 2, waves)
    for i in range(n_entities):
        for t in range(waves):
            ids.append(i + 1)
            ts.append(t + 1)
            total = alpha[i] + gamma[t] + rng.normal(0.0, noise)
            for name, coef in slopes.items():
                v = rng.normal(0.0, 1.0)
                xcols[name].append(v)
                total += coef * v
            y.append(total)
    columns = {"id": ids, "t": ts, "y": y, **xcols}
    kinds = {"id": VariableKind.IDENTIFIER, "t": VariableKind.TIME_INDEX,
             "y": VariableKind.NUMERIC,
             **{n: VariableKind.NUMERIC for n in slopes}}
    table = make_table(columns, kinds)
    audit = audit_dataset(table, "synthetic_panel", panel_hint=("id", "t"))
    return table, audit
