"""Function-calling action vocabulary, wire format, parsing and guardrails.

Wire format (schema version 1)::

    {"schema": 1, "actions": [{"name": "set_consumption", "arguments": {...}}, ...]}

Money arguments are currency units (``52.5``); the engine converts them to
cents when applying. A bare list of actions or a single action object is
also accepted on input.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Optional

import jsonschema

WIRE_SCHEMA = 1
ROLES = ("household", "firm", "government", "central-bank", "pool")

_money = {"type": "number", "minimum": 0}
_share = {"type": "number", "minimum": 0, "maximum": 1}
_bracket_list = {
    "type": "array", "minItems": 1,
    "items": {"type": "array", "minItems": 2, "maxItems": 2,
              "items": [{"type": "number", "minimum": 0}, _share]},
}

FUNCTIONS: dict[str, dict[str, dict]] = {
    "household": {
        "set_consumption": {
            "description": "Plan next month's purchases: units per good and a total spending cap.",
            "parameters": {"type": "object", "required": ["budget", "goods"], "additionalProperties": False,
                           "properties": {"budget": _money,
                                          "goods": {"type": "object", "additionalProperties": _money}}},
        },
        "labor_action": {
            "description": "Accept or reject the job offer you hold, resign, or stay as you are.",
            "parameters": {"type": "object", "required": ["action"], "additionalProperties": False,
                           "properties": {"action": {"enum": ["accept", "reject", "resign", "stay"]}}},
        },
        "housing_action": {
            "description": "Stay in your home or look for a (cheaper) rental unit up to max_rent.",
            "parameters": {"type": "object", "required": ["action"], "additionalProperties": False,
                           "properties": {"action": {"enum": ["stay", "move"]}, "max_rent": _money}},
        },
        "financial_action": {
            "description": "Move money between cash and bank deposit, borrow or repay, or invest in the pool.",
            "parameters": {"type": "object", "additionalProperties": False,
                           "properties": {k: _money for k in ("deposit", "withdraw", "borrow", "repay", "invest")}},
        },
    },
    "firm": {
        "set_output_and_price": {
            "description": "Set next month's production target (units) and the posted unit price (rent for apartments).",
            "parameters": {"type": "object", "required": ["price"], "additionalProperties": False,
                           "properties": {"output": _money,
                                          "price": {"type": "number", "exclusiveMinimum": 0}}},
        },
        "labor_actions": {
            "description": "Post vacancies (skill, salary), lay off employees by household id, or change a position's salary.",
            "parameters": {"type": "object", "additionalProperties": False, "properties": {
                "post": {"type": "array", "items": {
                    "type": "object", "required": ["skill", "salary"], "additionalProperties": False,
                    "properties": {"skill": {"type": "string"},
                                   "salary": {"type": "number", "exclusiveMinimum": 0}}}},
                "layoff": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "set_wage": {"type": "array", "items": {
                    "type": "object", "required": ["position", "salary"], "additionalProperties": False,
                    "properties": {"position": {"type": "integer", "minimum": 0},
                                   "salary": {"type": "number", "exclusiveMinimum": 0}}}},
            }},
        },
        "investment_action": {
            "description": "Borrow from or repay the bank, and order units of durable capital goods.",
            "parameters": {"type": "object", "additionalProperties": False,
                           "properties": {"borrow": _money, "repay": _money, "capital_units": _money}},
        },
    },
    "government": {
        "set_tax_schedules": {
            "description": "Replace the income-tax and value-added-tax schedules: lists of [monthly threshold, marginal rate].",
            "parameters": {"type": "object", "additionalProperties": False,
                           "properties": {"household": _bracket_list, "firm": _bracket_list}},
        },
        "set_spending_plan": {
            "description": "Split tax revenue between universal basic income, public firms and reserves (shares sum to at most 1).",
            "parameters": {"type": "object", "required": ["ubi", "public", "reserve"], "additionalProperties": False,
                           "properties": {"ubi": _share, "public": _share, "reserve": _share}},
        },
    },
    "central-bank": {},
    "pool": {
        "found_firm": {
            "description": "Found a firm from a template with pooled funds, optionally at a grid cell [x, y].",
            "parameters": {"type": "object", "required": ["template"], "additionalProperties": False,
                           "properties": {"template": {"type": "integer", "minimum": 0},
                                          "cell": {"type": "array", "minItems": 2, "maxItems": 2,
                                                   "items": {"type": "integer", "minimum": 0}}}},
        },
        "wait": {
            "description": "Found nothing this month; unused funds are refunded.",
            "parameters": {"type": "object", "additionalProperties": False, "properties": {}},
        },
    },
}


class ActionError(ValueError):
    pass


class MalformedPayload(ActionError):
    pass


class UnknownFunction(ActionError):
    pass


class BadArguments(ActionError):
    pass


@dataclass(frozen=True)
class Action:
    name: str
    arguments: dict = field(default_factory=dict)

    def __hash__(self):
        return hash((self.name, json.dumps(self.arguments, sort_keys=True)))


@dataclass(frozen=True)
class ActionSet:
    role: str
    agent_id: int
    actions: tuple[Action, ...] = ()

    def __len__(self) -> int:
        return len(self.actions)

    def get(self, name: str) -> Optional[Action]:
        for a in self.actions:
            if a.name == name:
                return a
        return None

    def to_wire(self) -> dict:
        return {"schema": WIRE_SCHEMA,
                "actions": [{"name": a.name, "arguments": a.arguments} for a in self.actions]}


def noop(role: str, agent_id: int) -> ActionSet:
    return ActionSet(role, agent_id, ())


def serialize(actions: ActionSet) -> str:
    return json.dumps(actions.to_wire(), sort_keys=True)


@dataclass
class ParseIssue:
    kind: str  # MalformedPayload | UnknownFunction | BadArguments
    function: Optional[str]
    message: str


@dataclass
class ParseResult:
    actions: ActionSet
    errors: list[ParseIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def _extract_json(text: str) -> Any:
    candidates = [m.group(1) for m in _FENCE.finditer(text)] + [text]
    decoder = json.JSONDecoder()
    for chunk in candidates:
        chunk = chunk.strip()
        try:
            return json.loads(chunk)
        except json.JSONDecodeError:
            pass
        for i, ch in enumerate(chunk):
            if ch in "{[":
                try:
                    obj, _ = decoder.raw_decode(chunk[i:])
                    return obj
                except json.JSONDecodeError:
                    continue
    raise MalformedPayload("no JSON payload found in response")


def _finite(obj: Any) -> bool:
    if isinstance(obj, float):
        return math.isfinite(obj)
    if isinstance(obj, dict):
        return all(_finite(v) for v in obj.values())
    if isinstance(obj, list):
        return all(_finite(v) for v in obj)
    return True


def parse_actions(text: str, role: str, agent_id: int = 0, strict: bool = False) -> ParseResult:
    """Extract and validate the action payload for ``role``.

    Invalid actions are dropped and reported; a payload that cannot be read at
    all yields an empty (no-op) action set. With ``strict`` the first problem
    is raised instead.
    """
    if role not in FUNCTIONS:
        raise ValueError(f"unknown role {role!r}")
    vocab = FUNCTIONS[role]
    errors: list[ParseIssue] = []

    def problem(exc: ActionError, fn: Optional[str]):
        if strict:
            raise exc
        errors.append(ParseIssue(type(exc).__name__, fn, str(exc)))

    try:
        payload = _extract_json(text)
    except MalformedPayload as exc:
        problem(exc, None)
        return ParseResult(noop(role, agent_id), errors)
    if isinstance(payload, dict) and "actions" in payload:
        if payload.get("schema", WIRE_SCHEMA) != WIRE_SCHEMA:
            problem(MalformedPayload(f"unsupported schema version {payload.get('schema')}"), None)
            return ParseResult(noop(role, agent_id), errors)
        items = payload["actions"]
    elif isinstance(payload, dict):
        items = [payload]
    else:
        items = payload
    if not isinstance(items, list):
        problem(MalformedPayload("actions must be a list"), None)
        return ParseResult(noop(role, agent_id), errors)
    kept = []
    for item in items:
        if not isinstance(item, dict) or "name" not in item:
            problem(MalformedPayload(f"action entry without a name: {item!r}"[:200]), None)
            continue
        name = item["name"]
        args = item.get("arguments", item.get("parameters", {}))
        if isinstance(args, str):
            try:
                args = json.loads(args)
            except json.JSONDecodeError:
                problem(BadArguments(f"{name}: arguments are not valid JSON"), name)
                continue
        if name not in vocab:
            problem(UnknownFunction(f"{name!r} is not available to role {role}"), name)
            continue
        try:
            jsonschema.validate(args, vocab[name]["parameters"])
        except jsonschema.ValidationError as exc:
            problem(BadArguments(f"{name}: {exc.message}"), name)
            continue
        if not _finite(args):
            problem(BadArguments(f"{name}: non-finite number"), name)
            continue
        kept.append(Action(name, args))
    return ParseResult(ActionSet(role, agent_id, tuple(kept)), errors)


def function_catalog(role: str) -> str:
    """The role's callable functions as pretty JSON, for the prompt."""
    entries = [{"name": name, "description": spec["description"], "parameters": spec["parameters"]}
               for name, spec in sorted(FUNCTIONS[role].items())]
    return json.dumps(entries, indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# guardrails


@dataclass(frozen=True)
class Guardrails:
    price_step: tuple[float, float] = (0.5, 2.0)
    wage_step: tuple[float, float] = (0.5, 2.0)
    output_multiple: float = 4.0


@dataclass(frozen=True)
class GuardContext:
    """Bounds inputs read from the pre-decision state, in currency units."""
    price: Optional[float] = None
    salaries: tuple[tuple[int, float], ...] = ()
    reference_salary: Optional[float] = None
    spendable: Optional[float] = None
    output_reference: Optional[float] = None


@dataclass(frozen=True)
class GuardWarning:
    role: str
    agent_id: int
    function: str
    field: str
    original: Any
    clamped: Any

    def to_dict(self) -> dict:
        return {"kind": "guardrail", "role": self.role, "agent": self.agent_id, "function": self.function,
                "field": self.field, "original": self.original, "clamped": self.clamped}


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def guard_actions(actions: ActionSet, ctx: GuardContext, rails: Guardrails = Guardrails()
                  ) -> tuple[ActionSet, list[GuardWarning]]:
    """Clamp out-of-bound arguments to the nearest bound, one warning per clamp.

    Bounds come from ``ctx`` only, so clamping twice changes nothing.
    """
    warnings: list[GuardWarning] = []
    out = []

    def fix(fn: str, fld: str, value: float, lo: float, hi: float) -> float:
        new = _clamp(value, lo, hi)
        if new != value:
            warnings.append(GuardWarning(actions.role, actions.agent_id, fn, fld, value, new))
        return new

    salaries = dict(ctx.salaries)
    for act in actions.actions:
        args = json.loads(json.dumps(act.arguments))
        if act.name == "set_output_and_price":
            if ctx.price:
                lo, hi = rails.price_step
                args["price"] = fix(act.name, "price", args["price"], lo * ctx.price, hi * ctx.price)
            if "output" in args and ctx.output_reference is not None:
                args["output"] = fix(act.name, "output", args["output"], 0.0,
                                     rails.output_multiple * ctx.output_reference)
        elif act.name == "labor_actions":
            lo, hi = rails.wage_step
            for i, item in enumerate(args.get("set_wage", [])):
                cur = salaries.get(item["position"])
                if cur:
                    item["salary"] = fix(act.name, f"set_wage[{i}].salary", item["salary"], lo * cur, hi * cur)
            if ctx.reference_salary:
                ref = ctx.reference_salary
                for i, item in enumerate(args.get("post", [])):
                    item["salary"] = fix(act.name, f"post[{i}].salary", item["salary"], lo * ref, hi * ref)
        elif act.name == "set_consumption" and ctx.spendable is not None:
            args["budget"] = fix(act.name, "budget", args["budget"], 0.0, max(0.0, ctx.spendable))
        out.append(Action(act.name, args))
    return ActionSet(actions.role, actions.agent_id, tuple(out)), warnings
