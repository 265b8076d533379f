import json
from fractions import Fraction

import pytest

from arena.agents import AgentKind
from arena.aggregate import (
    aggregate,
    export_samples,
    export_series,
    export_summary,
    read_summary,
    render_report,
)
from arena.prompts import HistoryLevel
from arena.session import (
    AuctionTemplate,
    BeautyContestTemplate,
    Environment,
    run_session,
)
from arena.store import (
    CorruptRecord,
    ParseError,
    SchemaError,
    append_run,
    load_config,
    read_runs,
    write_session_log,
)

MINIMAL_BC = """
[session]
environment = "melee"
seed = 7

[game.beauty_contest]
players = 5

[[agents]]
name = "a"
kind = "rational"

[[agents]]
name = "b"
kind = "rational"

[[agents]]
name = "c"
kind = "rational"

[[agents]]
name = "d"
kind = "rational"

[[agents]]
name = "e"
kind = "rational"
"""


def write_config(tmp_path, text, name="config.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadConfig:
    def test_minimal_defaults(self, tmp_path):
        config = load_config(write_config(tmp_path, MINIMAL_BC))
        assert config.game.multiplier == Fraction(2, 3)
        assert config.game.prize == 1.0
        assert config.game.lower == 0.0
        assert config.seed == 7
        assert config.sessions == 1
        assert config.history.level is HistoryLevel.NONE

    def test_seed_is_required(self, tmp_path):
        text = MINIMAL_BC.replace('seed = 7\n', "")
        with pytest.raises(SchemaError, match="seed"):
            load_config(write_config(tmp_path, text))

    def test_unknown_key_is_an_error_with_path(self, tmp_path):
        text = MINIMAL_BC.replace('environment = "melee"', 'environment = "melee"\ntypo_key = 1')
        with pytest.raises(SchemaError, match="session.typo_key"):
            load_config(write_config(tmp_path, text))

    def test_rational_env_roster_of_two_rejected(self, tmp_path):
        text = """
[session]
environment = "rational"
seed = 7

[game.beauty_contest]
players = 5

[[agents]]
name = "subject"
kind = "constant"
value = 50.0

[[agents]]
name = "extra"
kind = "rational"
"""
        with pytest.raises(SchemaError, match="rational"):
            load_config(write_config(tmp_path, text))

    def test_history_with_single_run_rejected(self, tmp_path):
        text = MINIMAL_BC + "\n[history]\nlevel = \"partial\"\n"
        with pytest.raises(SchemaError):
            load_config(write_config(tmp_path, text))

    def test_malformed_toml(self, tmp_path):
        with pytest.raises(ParseError):
            load_config(write_config(tmp_path, "[session\nbroken"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_config(tmp_path / "nope.toml")

    def test_auction_with_llm_agent(self, tmp_path):
        text = """
[session]
environment = "melee"
seed = 3

[game.auction]
bidders = 2
assets = 100.0
private_values = [60.0, 50.0]

[[agents]]
name = "model-a"
kind = "llm"
endpoint_url = "http://127.0.0.1:1/v1/chat/completions"
model_id = "m"
api_key_env = "ARENA_KEY"
temperature = 0.5
timeout_secs = 10.0
max_transport_retries = 3

[[agents]]
name = "ratio"
kind = "rational"
"""
        config = load_config(write_config(tmp_path, text))
        assert config.roster[0].kind is AgentKind.LLM
        assert config.roster[0].provider.temperature == 0.5
        assert isinstance(config.game, AuctionTemplate)

    def test_both_game_tables_rejected(self, tmp_path):
        text = MINIMAL_BC + "\n[game.auction]\nbidders = 2\nprivate_values = [1.0, 2.0]\n"
        with pytest.raises(SchemaError, match="exactly one"):
            load_config(write_config(tmp_path, text))

    def test_digest_stable_under_key_reordering_and_explicit_defaults(self, tmp_path):
        from arena.session import config_digest

        reordered = MINIMAL_BC.replace(
            '[session]\nenvironment = "melee"\nseed = 7',
            '[session]\nseed = 7\nenvironment = "melee"\nsessions = 1',
        ).replace("players = 5", "players = 5\nprize = 1.0\nlower = 0.0")
        base = load_config(write_config(tmp_path, MINIMAL_BC, "a.toml"))
        equivalent = load_config(write_config(tmp_path, reordered, "b.toml"))
        assert config_digest(base) == config_digest(equivalent)
        changed = load_config(
            write_config(tmp_path, MINIMAL_BC.replace("seed = 7", "seed = 8"), "c.toml")
        )
        assert config_digest(base) != config_digest(changed)


def _session_log(seed=0, sessions=1):
    from arena.agents import AgentDescriptor

    config = __import__("arena.session", fromlist=["SessionConfig"]).SessionConfig(
        game=BeautyContestTemplate(players=5),
        environment=Environment.MELEE,
        roster=(
            AgentDescriptor("zero", AgentKind.CONSTANT, value=0.0),
            AgentDescriptor("fives", AgentKind.CONSTANT, value=5.0),
            AgentDescriptor("breaker", AgentKind.ALWAYS_VIOLATE),
            AgentDescriptor("ratio", AgentKind.RATIONAL),
            AgentDescriptor("tens", AgentKind.CONSTANT, value=10.0),
        ),
        seed=seed,
        runs_per_session=3,
        history=__import__("arena.session", fromlist=["HistoryPolicy"]).HistoryPolicy(
            level=HistoryLevel.PARTIAL, max_runs=2
        ),
    )
    return run_session(config, 0)


class TestLogs:
    def test_round_trip(self, tmp_path):
        log = _session_log()
        write_session_log(tmp_path, log)
        loaded = list(read_runs(tmp_path))
        assert len(loaded) == 3
        assert [r.to_dict() for r in loaded] == [r.to_dict() for r in log.runs]

    def test_truncated_final_line_recovers(self, tmp_path, caplog):
        log = _session_log()
        path = write_session_log(tmp_path, log)
        text = path.read_text()
        path.write_text(text[: len(text) - 40])  # cut into the last record
        loaded = list(read_runs(tmp_path))
        assert len(loaded) == 2

    def test_corrupt_middle_line_raises_with_line_number(self, tmp_path):
        log = _session_log()
        path = write_session_log(tmp_path, log)
        lines = path.read_text().splitlines()
        lines[1] = lines[1][:20]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorruptRecord) as exc:
            list(read_runs(tmp_path))
        assert exc.value.line_number == 2

    def test_two_sessions_merge_in_order(self, tmp_path):
        from arena.agents import AgentDescriptor
        from arena.session import SessionConfig

        config = SessionConfig(
            game=BeautyContestTemplate(players=2),
            environment=Environment.MELEE,
            roster=(
                AgentDescriptor("a", AgentKind.RATIONAL),
                AgentDescriptor("b", AgentKind.RATIONAL),
            ),
            seed=1,
            sessions=2,
        )
        for index in range(2):
            write_session_log(tmp_path, run_session(config, index))
        loaded = list(read_runs(tmp_path))
        assert len(loaded) == 2
        assert loaded[0].session_id < loaded[1].session_id


class TestAggregate:
    def test_rule_break_accounting(self, tmp_path):
        log = _session_log()
        rows = {row.agent_name: row for row in aggregate(log.runs)}
        assert rows["breaker"].rule_break_pct == 100.0
        assert not rows["breaker"].completed
        assert rows["breaker"].mean_payoff is None
        assert rows["ratio"].rule_break_pct == 0.0
        assert rows["ratio"].completed

    def test_recomputation_equivalence(self, tmp_path):
        log = _session_log()
        write_session_log(tmp_path, log)
        direct = aggregate(log.runs)
        reread = aggregate(read_runs(tmp_path))
        assert direct == reread

    def test_export_round_trip_and_formatting(self, tmp_path):
        log = _session_log()
        rows = aggregate(log.runs)
        out = tmp_path / "summary.csv"
        export_summary(rows, out)
        loaded = read_summary(out)
        assert loaded[0].keys() == {
            "agent_name", "environment", "game", "group", "n_sessions", "n_runs",
            "mean_payoff", "payoff_ratio", "mean_deviation", "rule_break_pct",
            "win_rate", "completed",
        }
        by_agent = {row["agent_name"]: row for row in loaded}
        assert by_agent["breaker"]["rule_break_pct"] == "100.00"
        assert by_agent["ratio"]["rule_break_pct"] == "0.00"

    def test_two_thirds_percent_renders_067(self):
        from arena.metrics import rule_break_rate

        assert f"{rule_break_rate([True] + [False] * 149):.2f}" == "0.67"

    def test_structured_summary(self, tmp_path):
        log = _session_log()
        rows = aggregate(log.runs)
        out = tmp_path / "summary.json"
        export_summary(rows, out, format="structured-summary")
        payload = json.loads(out.read_text())
        assert {entry["agent_name"] for entry in payload} >= {"breaker", "ratio"}

    def test_series_export_has_one_point_per_valid_seat_run(self, tmp_path):
        log = _session_log()
        out = tmp_path / "series.csv"
        export_series(log.runs, out)
        lines = out.read_text().strip().splitlines()
        expected = sum(
            1 for r in log.runs for s in r.seats if s.parsed_action is not None
        )
        assert len(lines) == expected + 1

    def test_samples_export(self, tmp_path):
        log = _session_log()
        out = tmp_path / "samples.csv"
        export_samples(log.runs, out)
        assert "deviation" in out.read_text().splitlines()[0]

    def test_convergence_verdicts_per_session(self):
        from arena.agents import AgentDescriptor
        from arena.aggregate import convergence_verdicts
        from arena.session import HistoryPolicy, SessionConfig

        settling = SessionConfig(
            game=BeautyContestTemplate(players=2),
            environment=Environment.SELF_COMPETE,
            roster=(
                AgentDescriptor("settler", AgentKind.REPLAY, script=(50.0, 20.0, 5.0, 5.0, 5.0, 5.0)),
            ),
            seed=4,
            runs_per_session=6,
            history=HistoryPolicy(level=HistoryLevel.PARTIAL, max_runs=3),
        )
        records = run_session(settling).runs
        verdicts = convergence_verdicts(records)
        (key, verdict), = verdicts.items()
        assert key[0] == "settler"
        assert verdict.converged
        assert verdict.settled_at == 2

    def test_auction_epsilon_scales_with_assets(self):
        from arena.games import AuctionParams, GameKind, GameSpec
        from arena.metrics import default_epsilon

        spec = GameSpec(
            GameKind.SECOND_PRICE_AUCTION,
            2,
            auction=AuctionParams((1000.0, 1000.0), (500.0, 400.0)),
        )
        assert default_epsilon(spec) == 10.0

    def test_report_renders_table(self, tmp_path):
        log = _session_log()
        rows = aggregate(log.runs)
        out = tmp_path / "summary.csv"
        export_summary(rows, out)
        table = render_report(read_summary(out))
        assert "100.00" in table
        assert "0.00" in table
        assert "breaker" in table
