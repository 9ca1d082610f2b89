"""Record a scripted session, then replay it through a fresh world.

The session file is line-delimited JSON (one frame per 10 ms) carrying
both operator inputs and robot state; replaying the inputs through the
same configuration reproduces the robot trajectory exactly.
"""

import tempfile
from pathlib import Path

from viewvr.recorder import load_session
from viewvr.simworld import load_scenario, run_replay, run_scenario

scenario_dir = Path(__file__).resolve().parent.parent / "scenarios"
script = load_scenario(scenario_dir / "connector.scn")

with tempfile.TemporaryDirectory() as tmp:
    session_path = Path(tmp) / "connector_run.jsonl"
    report = run_scenario(script, record_path=session_path)
    frames = load_session(session_path)
    print(f"recorded {len(frames)} frames; success={report.success}")
    print("first frame:", session_path.read_text().splitlines()[0][:120], "...")

    replayed, world = run_replay(frames, script)
    worst = max(
        abs(a - b)
        for orig, re in zip(frames, replayed)
        for a, b in zip(orig.joints, re.joints)
    )
    print(f"replayed {len(replayed)} frames; worst joint deviation {worst:.2e} rad")
