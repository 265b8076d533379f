"""Experiment driver: all sessions of a config, optionally in parallel."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Optional

from .agents import AgentKind
from .session import ConfigError, PromptHook, SessionConfig, SessionLog, build_roster, run_session
from .store import write_session_log


def preflight(config: SessionConfig) -> None:
    """Fail fast on anything validation can catch, credentials included."""
    config.validate()
    for agent in build_roster(config):
        if agent.kind is AgentKind.LLM and agent.provider.api_key_env:
            if not os.environ.get(agent.provider.api_key_env):
                raise ConfigError(
                    f"agent {agent.name!r}: environment variable "
                    f"{agent.provider.api_key_env} is not set"
                )


def run_experiment(
    config: SessionConfig,
    out_dir: Optional[Path | str] = None,
    workers: int = 1,
    on_prompt: Optional[PromptHook] = None,
    clock: Optional[Callable[[], str]] = None,
) -> list[SessionLog]:
    """Run every session, append logs per session, return logs in order."""
    preflight(config)

    def one(index: int) -> SessionLog:
        log = run_session(config, index, clock=clock, on_prompt=on_prompt)
        if out_dir is not None:
            write_session_log(out_dir, log)
        return log

    indices = range(config.sessions)
    if workers <= 1:
        return [one(i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, indices))
