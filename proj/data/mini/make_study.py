"""Regenerates study.json for the miniature example study."""
import json
import pathlib

LEVELS = ["Low", "Medium", "High"]
descriptors = [
    {"id": "PS", "name": "Policy stringency", "states": LEVELS},
    {"id": "PA", "name": "Public acceptance", "kind": "cyclic", "states": LEVELS,
     "cyclic": {"stay": 0.7, "step": 0.25, "step2": 0.05, "drift": 0.1}},
    {"id": "PP", "name": "Technology progress pace", "states": ["Slow", "Moderate", "Fast"]},
    {"id": "GD", "name": "Grid development", "states": ["Weak", "Moderate", "Strong"]},
    {"id": "DO", "name": "Decarbonisation outcome", "states": LEVELS},
]

# (source, target, strength, confidence); positive strength promotes matching levels.
links = [
    ("PS", "PP", 2, 4), ("PS", "GD", 2, 3), ("PS", "DO", 1, 3), ("PS", "PA", -1, 2),
    ("PA", "PS", 2, 3), ("PA", "DO", 1, 2),
    ("PP", "GD", 1, 3), ("PP", "DO", 2, 4), ("PP", "PS", 1, 2),
    ("GD", "DO", 2, 5), ("GD", "PP", 1, 3),
    ("DO", "PS", 1, 3), ("DO", "PA", 1, 2),
]
pattern = [[1, 0, -1], [0, 1, 0], [-1, 0, 1]]
strength = {(s, t): (k, c) for s, t, k, c in links}

cim = []
ids = [d["id"] for d in descriptors]
for src in ids:
    for tgt in ids:
        if src == tgt:
            continue
        k, c = strength.get((src, tgt), (0, 5))
        for a in range(3):
            for b in range(3):
                cim.append({"source": src, "source_state": a, "target": tgt, "target_state": b,
                            "score": k * pattern[a][b], "confidence": c})

study = {
    "descriptors": descriptors,
    "time_grid": [2025, 2030, 2035, 2040, 2045, 2050],
    "baseline": {"PS": "Low", "PA": "Medium", "PP": "Slow", "GD": "Weak", "DO": "Low"},
    "cim": cim,
    "rules": {
        "forbidden_pairs": [[{"descriptor": "GD", "state": "Weak"}, {"descriptor": "DO", "state": "High"}]],
        "implications": [{"if": {"descriptor": "DO", "state": "High"}, "then": {"descriptor": "GD", "state": "Strong"}}],
    },
    "threshold_rules": [{
        "conditions": [{"descriptor": "PA", "state": "High"}, {"descriptor": "PP", "state": "Fast"}],
        "effect": {"source": "PP", "source_state": "Fast", "target": "GD", "target_state": "Strong", "delta": 1},
    }],
    "shocks": {
        "structural": {"enabled": True, "scale": 0.3, "distribution": {"type": "student_t", "df": 5}},
        "dynamic": {"enabled": True, "long_run_sd": 0.5, "persistence": 0.6, "distribution": "gaussian"},
    },
}

out = pathlib.Path(__file__).with_name("study.json")
out.write_text(json.dumps(study, indent=1) + "\n")
