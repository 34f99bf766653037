"""Revision-stage decision making: views, prompts, actions, backends and the pool."""
from .actions import (Action, ActionSet, BadArguments, GuardContext, Guardrails, GuardWarning,
                      MalformedPayload, UnknownFunction, guard_actions, noop, parse_actions, serialize)
from .backends import (AuthError, ChatConfig, Decision, HeuristicBackend, RemoteBackend, ReplayStore,
                       Timeout, TransportError, llm_decide)
from .heuristic import HeuristicParams, heuristic_decide
from .pool import allocate_shares, heuristic_cell, place_building, pool_step
from .prompt import PromptDocument, assemble_prompt
from .views import AgentView

__all__ = [
    "Action", "ActionSet", "AgentView", "AuthError", "BadArguments", "ChatConfig", "Decision",
    "GuardContext", "GuardWarning", "Guardrails", "HeuristicBackend", "HeuristicParams",
    "MalformedPayload", "PromptDocument", "RemoteBackend", "ReplayStore", "Timeout", "TransportError",
    "UnknownFunction", "allocate_shares", "assemble_prompt", "guard_actions", "heuristic_cell",
    "heuristic_decide", "llm_decide", "noop", "parse_actions", "place_building", "pool_step", "serialize",
]
