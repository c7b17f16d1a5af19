#!/usr/bin/env python3
"""Smoke test for the orgym_py extension module.

Builds nothing itself: expects `cargo build -p orgym-py` (or --release) to
have produced liborgym_py.so. Copies it next to a temp dir as orgym_py.so,
imports it, and exercises the main entry points end to end.

Run from the repository root:  python3 python/smoke_test.py
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "release" / "liborgym_py.so",
        REPO / "target" / "debug" / "liborgym_py.so",
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        sys.exit("liborgym_py.so not found; run `cargo build -p orgym-py` first")
    stage = Path(tempfile.mkdtemp(prefix="orgym_py_"))
    shutil.copy2(lib, stage / "orgym_py.so")
    sys.path.insert(0, str(stage))
    import orgym_py

    return orgym_py


def main():
    m = load_module()

    # --- wire codec -------------------------------------------------------
    setup = {
        "type": "setup_request",
        "txid": 1,
        "node_id": "gnb:311-048-01000501",
        "kpm_window_ms": 100,
        "rbg_count": 17,
        "n_slices": 2,
    }
    frame = m.encode_frame(json.dumps(setup))
    assert frame[:4] == len(frame[4:]).to_bytes(4, "big"), "length prefix"
    assert frame[4] == 0x01, "setup_request type byte"
    back, used = m.decode_frame(bytes(frame))
    assert used == len(frame)
    assert json.loads(back) == setup
    # golden frame: ProtocolError with an empty body
    err = m.encode_frame(json.dumps({"type": "protocol_error"}))
    assert bytes(err) == bytes([0, 0, 0, 3, 0x08, 0x7B, 0x7D]), "golden bytes"
    print("codec: ok")

    # --- catalog plans and a deterministic run -----------------------------
    plan = json.loads(m.catalog_plan("stairs"))
    assert plan["bs_id"] == "gnb:311-048-01000501"
    plan["duration_ms"] = 5_000
    plan["timeline"] = []
    with tempfile.TemporaryDirectory() as d1, tempfile.TemporaryDirectory() as d2:
        s1 = json.loads(m.run_experiment(json.dumps(plan), d1, 42))
        s2 = json.loads(m.run_experiment(json.dumps(plan), d2, 42))
        assert s1 == s2, "same plan + seed must give the same summary"
        assert max(s1["proportionality_residual"]) < 0.10
        csv1 = (Path(d1) / "kpm" / f"{plan['bs_id']}.csv").read_bytes()
        csv2 = (Path(d2) / "kpm" / f"{plan['bs_id']}.csv").read_bytes()
        assert csv1 == csv2, "KPM CSVs must be byte-identical"

        # recompute the summary from the run directory; RBG shares pass
        # through the 6-decimal CSV, so allow that much slack there
        s3 = json.loads(m.export_summary(d1))
        for key, val in s1.items():
            if key in ("minute_rbg_share", "proportionality_residual"):
                flat = lambda v: v if isinstance(v, list) else sum(v.values(), [])
                for a, b in zip(flat(val), flat(s3[key])):
                    assert abs(a - b) < 1e-6, key
            else:
                assert s3[key] == val, key

        # offline replay through the xApp feature pipeline
        feats = m.replay_into_features(
            [str(Path(d1) / "kpm" / f"{plan['bs_id']}.csv")], 4, 2
        )
        assert feats and all(len(f) == 6 for f in feats)

        # CSV parser and the shared feature reducer
        records = m.parse_kpm_csv(csv1.decode())
        assert json.loads(records[0])["bs_id"] == plan["bs_id"]
        fv = m.window_features(records, 4, 2)
        assert len(fv) == 6
    print("harness: ok")

    # --- cell simulator -----------------------------------------------------
    cell = m.Cell(json.dumps(plan["scenario"]), plan["bs_id"])
    for _ in range(100):
        grants = cell.step_tti()
        assert len(grants) == plan["scenario"]["rbg-count"]
    window = [json.loads(r) for r in cell.emit_kpm_window(100)]
    assert {r["slice_id"] for r in window} == {0, 1}
    cell.apply_control(
        json.dumps(
            {
                "node_id": plan["bs_id"],
                "slice_allocation": {"0": [0, 7], "1": [8, 16]},
            }
        )
    )
    print("cell: ok")

    # --- action space and agent ---------------------------------------------
    n_actions = m.joint_action_count(2, 17)
    assert n_actions > 0
    directive = json.loads(m.action_directive(2, 17, 0, plan["bs_id"]))
    assert directive["node_id"] == plan["bs_id"]

    best, table = m.oracle_table(m.catalog_plan("stairs"), 1)
    assert 0 <= best < len(table)
    assert table[best] == max(table)

    rows = m.train(m.catalog_plan("stairs"), episodes=2, seed=1)
    assert len(rows) == 2 and rows[0].startswith("0,")
    print("agent: ok")

    print("smoke test: all checks passed")


if __name__ == "__main__":
    main()
