"""Regenerates data/household_panel.csv and its metadata sidecar.

A synthetic 320-household, 4-wave panel shaped like a household survey:
a binary program rollout at wave 3 for treated households, a time-invariant
headship indicator, and two variables with realistic missingness. Seeded,
so the committed files are reproducible byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
OUT_CSV = ROOT / "data" / "household_panel.csv"
OUT_META = ROOT / "data" / "household_panel.meta.json"

N_HH = 320
WAVES = (1, 2, 3, 4)
ADOPTION_WAVE = 3
SEED = 20240817


def build_rows() -> list[dict]:
    rng = np.random.default_rng(SEED)
    hh_ids = np.arange(1001, 1001 + N_HH)
    treat = rng.random(N_HH) < 0.5
    female_head = rng.random(N_HH) < 0.3
    urban_base = rng.random(N_HH) < 0.4
    educ_base = rng.integers(0, 17, N_HH)
    hh_effect = rng.normal(0.0, 0.4, N_HH)
    wave_effect = {w: v for w, v in zip(WAVES, rng.normal(0.0, 0.1, len(WAVES)))}

    rows = []
    for i, hh in enumerate(hh_ids):
        # a sliver of time variation so within estimators are identified
        urban_flips = rng.random(len(WAVES)) < 0.05
        educ_bump = rng.random() < 0.1
        for j, wave in enumerate(WAVES):
            urban = int(urban_base[i] ^ urban_flips[j])
            educ = int(educ_base[i] + (1 if educ_bump and wave >= 3 else 0))
            size = int(np.clip(rng.poisson(3.2) + 1, 1, 9))
            post = int(wave >= ADOPTION_WAVE)
            effect = 0.3 * treat[i] * post
            log_income = (8.0 + 0.08 * educ + 0.15 * urban - 0.05 * size
                          + effect + hh_effect[i] + wave_effect[wave]
                          + rng.normal(0.0, 0.25))
            savings = (0.10 + 0.02 * treat[i] * post + 0.005 * urban
                       + rng.normal(0.0, 0.04))
            health = (50.0 + 2.0 * urban - 0.5 * size - 3.0 * female_head[i]
                      + rng.normal(0.0, 4.0))
            remit = float(np.round(np.exp(rng.normal(4.0, 1.0)), 2))
            rows.append({
                "hh_id": int(hh),
                "wave": wave,
                "treat": int(treat[i]),
                "post": post,
                "event_time": (wave - ADOPTION_WAVE) if treat[i] else None,
                "female_head": int(female_head[i]),
                "urban": urban,
                "educ_years": educ,
                "hh_size": size,
                "log_income": round(float(log_income), 6),
                "savings_rate": (None if rng.random() < 0.06
                                 else round(float(savings), 6)),
                "health_score": round(float(health), 4),
                "remittances": None if rng.random() < 0.12 else remit,
            })
    return rows


def write_csv(rows: list[dict]) -> None:
    names = list(rows[0])
    lines = [",".join(names)]
    for row in rows:
        cells = []
        for name in names:
            v = row[name]
            cells.append("" if v is None else str(v))
        lines.append(",".join(cells))
    OUT_CSV.parent.mkdir(parents=True, exist_ok=True)
    OUT_CSV.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_meta() -> None:
    meta = {
        "dataset_id": "household_panel",
        "panel_hint": {"entity_var": "hh_id", "time_var": "wave"},
        "labels": {
            "hh_id": "household identifier",
            "wave": "survey wave",
            "treat": "household in program rollout group",
            "post": "wave at or after program adoption",
            "event_time": "waves since program adoption (treated only)",
            "female_head": "household head is a woman",
            "urban": "urban residence at interview",
            "educ_years": "years of schooling of household head",
            "hh_size": "number of household members",
            "log_income": "log of per-capita household income",
            "savings_rate": "household savings share of income",
            "health_score": "self-reported health index of head",
            "remittances": "annual remittances received, yuan",
        },
    }
    OUT_META.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    write_csv(build_rows())
    write_meta()
    print(f"wrote {OUT_CSV} and {OUT_META}")
