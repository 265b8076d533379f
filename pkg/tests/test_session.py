import json
from fractions import Fraction

import numpy as np
import pytest

from arena.agents import AgentDescriptor, AgentKind
from arena.games import GameKind
from arena.prompts import HistoryLevel
from arena.session import (
    AuctionTemplate,
    BeautyContestTemplate,
    ConfigError,
    Environment,
    HistoryPolicy,
    RosterMismatch,
    SessionConfig,
    build_roster,
    config_digest,
    run_once,
    run_session,
    sample_group_spec,
)

from .oracles import contest_winners

RATIONAL = AgentDescriptor("ratio", AgentKind.RATIONAL)
CONSTANT_50 = AgentDescriptor("const50", AgentKind.CONSTANT, value=50.0)
VIOLATOR = AgentDescriptor("breaker", AgentKind.ALWAYS_VIOLATE)


def bc_config(**overrides) -> SessionConfig:
    defaults = dict(
        game=BeautyContestTemplate(players=5),
        environment=Environment.MELEE,
        roster=(RATIONAL,) * 5,
        seed=11,
    )
    defaults.update(overrides)
    return SessionConfig(**defaults)


class TestRoster:
    def test_melee_as_given(self):
        config = bc_config(roster=(RATIONAL, CONSTANT_50, RATIONAL, RATIONAL, RATIONAL))
        assert build_roster(config) == config.roster

    def test_melee_size_mismatch(self):
        with pytest.raises(RosterMismatch):
            build_roster(bc_config(roster=(RATIONAL,) * 3))

    def test_rational_env_expands_subject(self):
        config = bc_config(environment=Environment.RATIONAL, roster=(CONSTANT_50,))
        roster = build_roster(config)
        assert len(roster) == 5
        assert roster[0] is CONSTANT_50
        assert all(a.kind is AgentKind.RATIONAL for a in roster[1:])

    def test_rational_env_rejects_two_agents(self):
        config = bc_config(environment=Environment.RATIONAL, roster=(CONSTANT_50, RATIONAL))
        with pytest.raises(RosterMismatch):
            build_roster(config)

    def test_self_compete_replicates(self):
        config = bc_config(environment=Environment.SELF_COMPETE, roster=(CONSTANT_50,))
        roster = build_roster(config)
        assert len(roster) == 5
        assert all(a == CONSTANT_50 for a in roster)

    def test_senior_keeps_order(self):
        seniors = tuple(
            AgentDescriptor(f"s{i}", AgentKind.CONSTANT, value=float(i + 1)) for i in range(5)
        )
        config = bc_config(environment=Environment.SENIOR, roster=seniors)
        assert build_roster(config) == seniors


class TestGroupSampling:
    def test_no_group_is_identity(self):
        template = AuctionTemplate(bidders=3, private_values=(60.0, 50.0, 40.0))
        spec = sample_group_spec(template, None, np.random.default_rng(0))
        assert spec.auction.private_values == (60.0, 50.0, 40.0)
        assert spec.auction.assets == (100.0,) * 3

    @pytest.mark.parametrize("group,lo,hi", [("L", 10, 100), ("M", 100, 1000), ("H", 1000, 10000)])
    def test_contest_upper_in_declared_range(self, group, lo, hi):
        template = BeautyContestTemplate(players=5)
        rng = np.random.default_rng(3)
        for _ in range(50):
            spec = sample_group_spec(template, group, rng)
            assert lo <= spec.bc.upper < hi
            assert spec.bc.upper == int(spec.bc.upper)

    def test_auction_m_group(self):
        template = AuctionTemplate(bidders=4, value_mean=1.0, value_std=1.0)
        rng = np.random.default_rng(5)
        for _ in range(50):
            spec = sample_group_spec(template, "M", rng)
            assert spec.auction.assets == (1000.0,) * 4
            for v in spec.auction.private_values:
                assert 0 < v <= 1000.0
                assert round(v, 2) == v

    def test_sampling_without_group_uses_template_distribution(self):
        template = AuctionTemplate(bidders=3, assets=200.0, value_mean=100.0, value_std=5.0)
        spec = sample_group_spec(template, None, np.random.default_rng(1))
        assert spec.auction.assets == (200.0,) * 3
        assert all(0 < v <= 200.0 for v in spec.auction.private_values)


class TestRunOnce:
    def _spec(self, template=None, group=None, seed=0):
        template = template or BeautyContestTemplate(players=5)
        return sample_group_spec(template, group, np.random.default_rng(seed))

    def test_all_rational_contest_ties_at_equilibrium(self):
        spec = self._spec()
        record = run_once(spec, (RATIONAL,) * 5)
        assert record.valid
        assert record.winners == [0, 1, 2, 3, 4]
        assert record.payoffs == [0.2] * 5
        assert record.deviations == [0.0] * 5

    def test_constant_among_rationals_loses(self):
        spec = self._spec()
        record = run_once(spec, (CONSTANT_50, RATIONAL, RATIONAL, RATIONAL, RATIONAL),
                          environment=Environment.RATIONAL)
        assert record.target == pytest.approx(20 / 3)
        assert record.winners == list(contest_winners((50, 0, 0, 0, 0), 2, 3)) == [1, 2, 3, 4]
        assert record.payoffs == [0.0, 0.25, 0.25, 0.25, 0.25]

    def test_violator_is_excluded_and_fined(self):
        template = AuctionTemplate(
            bidders=5, private_values=(60.0, 50.0, 40.0, 30.0, 20.0), entrance_fee=5.0
        )
        spec = self._spec(template)
        record = run_once(spec, (VIOLATOR, RATIONAL, RATIONAL, RATIONAL, RATIONAL),
                          environment=Environment.RATIONAL)
        assert record.valid
        assert record.seats[0].violation is not None
        assert record.seats[0].violation["kind"] == "rule_violation"
        assert record.winners == [1]
        assert record.price_paid == 40.0
        assert record.payoffs[0] == 95.0  # assets minus entrance fee
        assert record.payoffs[1] == 100.0 - 40.0 + 50.0

    def test_violation_isolation(self):
        # Removing the violator's bid is the only effect on everyone else.
        values = (60.0, 50.0, 40.0, 30.0)
        spec = self._spec(AuctionTemplate(bidders=4, private_values=values))
        clean = run_once(spec, (RATIONAL,) * 4)
        dirty_roster = (RATIONAL, RATIONAL, RATIONAL, VIOLATOR)
        dirty = run_once(spec, dirty_roster)
        assert dirty.winners == clean.winners
        assert [s.parsed_action for s in dirty.seats[:3]] == [
            s.parsed_action for s in clean.seats[:3]
        ]
        assert dirty.price_paid == 50.0

    def test_profitable_win_flag(self):
        values = (60.0, 50.0, 40.0)
        spec = self._spec(AuctionTemplate(bidders=3, private_values=values))
        truthful = run_once(spec, (RATIONAL,) * 3)
        assert truthful.profitable_win is True
        overbidders = (
            AgentDescriptor("over", AgentKind.CONSTANT, value=90.0),
            AgentDescriptor("also", AgentKind.CONSTANT, value=80.0),
            RATIONAL,
        )
        overbid = run_once(spec, overbidders)
        assert overbid.payoffs[0] == 100.0 - 80.0 + 60.0
        assert overbid.profitable_win is False

    def test_invalid_run_recorded_not_thrown(self):
        spec = self._spec()
        record = run_once(spec, (VIOLATOR,) * 4 + (RATIONAL,))
        assert not record.valid
        assert record.winners == []
        assert record.payoffs == [None] * 5
        assert record.deviations == [None] * 5


class TestRunSession:
    def test_single_run_no_history(self):
        log = run_session(bc_config())
        assert len(log.runs) == 1
        assert log.runs[0].history_level == "none"

    def test_byte_reproducible_with_fixed_seed(self):
        config = bc_config(
            environment=Environment.SELF_COMPETE,
            roster=(AgentDescriptor("rnd", AgentKind.RANDOM),),
            runs_per_session=4,
            history=HistoryPolicy(level=HistoryLevel.PARTIAL, max_runs=2),
            seed=99,
        )
        first = run_session(config, 3)
        second = run_session(config, 3)
        as_bytes = lambda log: json.dumps([r.to_dict() for r in log.runs], sort_keys=True)
        assert as_bytes(first) == as_bytes(second)
        assert first.config_digest == second.config_digest

    def test_distinct_sessions_draw_distinct_randomness(self):
        config = bc_config(
            environment=Environment.SELF_COMPETE,
            roster=(AgentDescriptor("rnd", AgentKind.RANDOM),),
            seed=99,
        )
        a = run_session(config, 0).runs[0].seats[0].parsed_action
        b = run_session(config, 1).runs[0].seats[0].parsed_action
        assert a != b

    def test_history_monotonic_window(self):
        script = (50.0, 33.0, 22.0, 15.0, 10.0, 7.0)
        config = bc_config(
            environment=Environment.SELF_COMPETE,
            roster=(AgentDescriptor("replay", AgentKind.REPLAY, script=script),),
            runs_per_session=6,
            history=HistoryPolicy(level=HistoryLevel.PARTIAL, max_runs=3),
        )
        captured = {}
        run_session(config, on_prompt=lambda si, ri, seat, n, b: captured.setdefault((ri, seat), b))
        for run_index in range(2, 7):
            user = captured[(run_index, 0)].user
            expected = set(range(max(1, run_index - 3), run_index))
            embedded = {int(m) for m in __import__("re").findall(r'"run": (\d+)', user)}
            assert embedded == expected

    def test_auction_spec_fixed_across_runs(self):
        config = SessionConfig(
            game=AuctionTemplate(bidders=3, value_mean=50.0, value_std=10.0),
            environment=Environment.SELF_COMPETE,
            roster=(RATIONAL,),
            seed=5,
            runs_per_session=4,
            history=HistoryPolicy(level=HistoryLevel.FULL, max_runs=3),
        )
        log = run_session(config)
        games = {json.dumps(r.game, sort_keys=True) for r in log.runs}
        assert len(games) == 1

    def test_self_compete_equilibrium_auction(self):
        config = SessionConfig(
            game=AuctionTemplate(bidders=3, private_values=(60.0, 50.0, 40.0)),
            environment=Environment.SELF_COMPETE,
            roster=(RATIONAL,),
            seed=5,
            runs_per_session=3,
            history=HistoryPolicy(level=HistoryLevel.FULL, max_runs=3),
        )
        log = run_session(config)
        for record in log.runs:
            assert record.payoffs == list(record.ne_payoffs)
            assert record.deviations == [0.0, 0.0, 0.0]


class TestTransportAccounting:
    def _llm(self, url, name="remote", retries=0):
        from arena.agents import ProviderConfig

        return AgentDescriptor(
            name,
            AgentKind.LLM,
            provider=ProviderConfig(
                endpoint_url=url,
                model_id=name,
                timeout_secs=5.0,
                max_transport_retries=retries,
                backoff_secs=0.01,
            ),
        )

    def test_transport_failure_is_not_a_rule_violation(self):
        from arena.aggregate import aggregate
        from arena.mockserver import MockChatServer

        spec = sample_group_spec(BeautyContestTemplate(players=5), None, np.random.default_rng(0))
        with MockChatServer(0, {"default": {"status": 500}}) as server:
            record = run_once(spec, (self._llm(server.url),) + (RATIONAL,) * 4)
        seat = record.seats[0]
        assert seat.transport_error is not None
        assert seat.violation is None
        assert record.valid  # the other four still resolve
        rows = {row.agent_name: row for row in aggregate([record])}
        # the failed seat contributes no rule break and no payoff cell
        assert rows["remote"].rule_break_pct == 0.0
        assert rows["remote"].mean_payoff is None
        assert rows["remote"].completed is False

    def test_no_entrance_fee_for_transport_failures(self):
        from arena.mockserver import MockChatServer

        template = AuctionTemplate(
            bidders=3, private_values=(60.0, 50.0, 40.0), entrance_fee=5.0
        )
        spec = sample_group_spec(template, None, np.random.default_rng(0))
        with MockChatServer(0, {"default": {"status": 500}}) as server:
            record = run_once(spec, (self._llm(server.url),) + (RATIONAL,) * 2)
        assert record.seats[0].transport_error is not None
        assert record.payoffs[0] == 100.0  # assets intact, no fine

    def test_raw_responses_can_be_truncated(self):
        from arena.mockserver import MockChatServer
        from arena.session import RAW_TRUNCATE_BYTES

        filler = "x" * (RAW_TRUNCATE_BYTES + 500)
        reply = f'{{"understanding": "{filler}", "popular answer": 0.0, "answer": 0.0, "reason": "r"}}'
        spec = sample_group_spec(BeautyContestTemplate(players=5), None, np.random.default_rng(0))
        with MockChatServer(0, {"default": {"content": reply}}) as server:
            record = run_once(
                spec, (self._llm(server.url),) + (RATIONAL,) * 4, truncate_raw=True
            )
        assert record.seats[0].parsed_action == 0.0  # parsing saw the full text
        assert len(record.seats[0].raw_response) == RAW_TRUNCATE_BYTES

    def test_credentials_never_reach_logs_or_digest(self, monkeypatch, tmp_path):
        from arena.mockserver import MockChatServer
        from arena.store import write_session_log

        monkeypatch.setenv("ARENA_SECRET_TEST_KEY", "super-secret-value")
        from arena.agents import ProviderConfig

        agent = AgentDescriptor(
            "remote",
            AgentKind.LLM,
            provider=ProviderConfig(
                endpoint_url="http://127.0.0.1:1/unused",
                model_id="m",
                api_key_env="ARENA_SECRET_TEST_KEY",
                max_transport_retries=0,
                backoff_secs=0.01,
                timeout_secs=0.2,
            ),
        )
        doc = '{"understanding": "u", "popular answer": 0.0, "answer": 0.0, "reason": "r"}'
        with MockChatServer(0, {"default": {"content": doc}}) as server:
            good = AgentDescriptor(
                "remote",
                AgentKind.LLM,
                provider=ProviderConfig(
                    endpoint_url=server.url,
                    model_id="m",
                    api_key_env="ARENA_SECRET_TEST_KEY",
                ),
            )
            config = bc_config(roster=(good,) + (RATIONAL,) * 4)
            log = run_session(config)
            write_session_log(tmp_path, log)
        text = "".join(p.read_text() for p in tmp_path.glob("*.jsonl"))
        assert "super-secret-value" not in text
        # the digest preimage carries the env-var name only, never its value
        from arena.session import config_to_dict

        assert "super-secret-value" not in json.dumps(config_to_dict(config))
        assert "ARENA_SECRET_TEST_KEY" in json.dumps(config_to_dict(config))


class TestConfigValidation:
    def test_history_needs_multiple_runs(self):
        config = bc_config(history=HistoryPolicy(level=HistoryLevel.PARTIAL))
        with pytest.raises(ConfigError):
            config.validate()

    def test_cot_requires_rational_environment(self):
        with pytest.raises(ConfigError):
            bc_config(cot=True).validate()

    def test_unknown_group(self):
        with pytest.raises(ConfigError):
            bc_config(group="X").validate()

    def test_digest_changes_with_any_value(self):
        base = bc_config()
        assert config_digest(base) == config_digest(bc_config())
        assert config_digest(base) != config_digest(bc_config(seed=12))
        assert config_digest(base) != config_digest(
            bc_config(game=BeautyContestTemplate(players=5, upper=200.0))
        )

    def test_digest_ignores_descriptor_identity(self):
        a = bc_config(roster=(AgentDescriptor("r", AgentKind.RATIONAL),) * 5)
        b = bc_config(roster=tuple(AgentDescriptor("r", AgentKind.RATIONAL) for _ in range(5)))
        assert config_digest(a) == config_digest(b)
