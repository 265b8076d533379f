"""The remote-agent path end to end, offline: a scripted chat-completion
server stands in for a model provider, and the CLI drives the whole pipeline.

Run with: python demos/04_mock_llm_end_to_end.py
"""

import json
import os
import tempfile
from pathlib import Path

from arena.cli import main
from arena.mockserver import MockChatServer

os.environ.setdefault("MOCK_ARENA_KEY", "demo-credential")

answer = lambda a: json.dumps(
    {"understanding": "play low", "popular answer": a + 10.0, "answer": a, "reason": "demo"}
)
script = {
    "by_model": {
        "chatty": {"default": {"content": "Of course! " + answer(25.0)}},
        "flaky": {"responses": [{"status": 500}, {"content": answer(10.0)}],
                  "default": {"content": answer(10.0)}},
        "confused": {"default": {"content": "I would rather discuss the weather."}},
        "steady": {"default": {"content": answer(0.0)}},
        "bold": {"default": {"content": answer(95.0)}},
    }
}

CONFIG = """
[session]
environment = "melee"
seed = 1

[game.beauty_contest]
players = 5
"""

AGENT = """
[[agents]]
name = "{name}"
kind = "llm"
endpoint_url = "{url}"
model_id = "{name}"
api_key_env = "MOCK_ARENA_KEY"
max_transport_retries = 2
backoff_secs = 0.05
"""

with MockChatServer(0, script) as server, tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    config_path = tmp / "config.toml"
    config_path.write_text(
        CONFIG
        + "".join(
            AGENT.format(name=name, url=server.url)
            for name in ("chatty", "flaky", "confused", "steady", "bold")
        )
    )
    print(f"mock provider listening on {server.url}\n")
    print("== arena validate ==")
    main(["validate", "--config", str(config_path)])
    print("\n== arena run ==")
    main(["run", "--config", str(config_path), "--out", str(tmp / "logs")])
    print("\n== arena aggregate ==")
    main([
        "aggregate",
        "--in", str(tmp / "logs"),
        "--out", str(tmp / "summary.csv"),
        "--series-out", str(tmp / "series.csv"),
    ])
    print("\n== arena report ==")
    main(["report", "--in", str(tmp / "summary.csv")])
    print(f"\ntotal provider requests (includes one retried failure): {server.request_count}")
