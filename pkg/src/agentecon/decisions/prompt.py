"""Prompt documents built from agent views."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .actions import WIRE_SCHEMA, function_catalog
from .views import AgentView

SYSTEM = {
    "household": ("You are a household living in a small simulated city. Each month you decide what to buy, "
                  "whether to work, where to live and how to handle your savings."),
    "firm": ("You run a firm in a small simulated city. Each month you decide how much to produce, "
             "the price you post, whom to employ and whether to invest."),
    "government": ("You are the city government. Each month you may revise the tax schedules and how "
                   "tax revenue is spent."),
    "central-bank": "You are the central bank. The policy rate follows a fixed rule.",
    "pool": ("You manage the city's investment pool. Residents' pooled savings can found one new firm "
             "from the template list; unused funds go back to their owners."),
}

INSTRUCTIONS = ("Reply with a single JSON object of the form "
                '{"schema": %d, "actions": [{"name": <function>, "arguments": {...}}]}. '
                "Money is in currency units. Omit a function to leave that decision unchanged.") % WIRE_SCHEMA


@dataclass(frozen=True)
class PromptDocument:
    role: str
    agent_id: int
    system: str
    user: str

    @property
    def text(self) -> str:
        return self.system + "\n\n" + self.user

    def key(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


def _lines(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    out = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v:
                out.append(f"{pad}- {k}:")
                out.extend(_lines(v, indent + 1))
            else:
                out.append(f"{pad}- {k}: {json.dumps(v, sort_keys=True)}")
    elif isinstance(obj, list):
        for item in obj:
            out.append(f"{pad}- {json.dumps(item, sort_keys=True)}")
    else:
        out.append(f"{pad}{json.dumps(obj, sort_keys=True)}")
    return out


def _pct(x) -> str:
    return "n/a" if x is None else f"{100 * x:.2f}%"


def _household_summary(view: AgentView) -> list[str]:
    obs = view.observation
    out = ["Open positions in the city (highest salary first):"]
    if obs["open_positions"]:
        out += [f"  - firm {p['firm']} ({p['good']}): {p['skill']} at {p['salary']:.2f}/month, "
                f"your level {p['your_level']}" for p in obs["open_positions"]]
    else:
        out.append("  - none")
    out.append(f"Bank rates per year: deposits {_pct(obs['deposit_rate'])}, loans {_pct(obs['loan_rate'])}. "
               f"Average yearly return on pooled investment: {_pct(obs['average_roi'])}.")
    return out


def _firm_summary(view: AgentView) -> list[str]:
    comp = view.report["expenditure_composition"]
    mk = view.observation["market"]
    return [
        f"Expenditure composition last month: wages {_pct(comp['wages'])}, inputs {_pct(comp['inputs'])}, "
        f"capital {_pct(comp['capital'])}.",
        f"Market for {mk['good']}: demand {mk['demand']} units, supply {mk['supply']} units, "
        f"sold {mk['sold']} units across {mk['sellers']} seller(s) at a mean price of {mk['mean_price']:.2f}.",
    ]


SUMMARIES = {"household": _household_summary, "firm": _firm_summary}


def assemble_prompt(view: AgentView) -> PromptDocument:
    """Render a view as Profile, Report and Observation sections plus the function list.

    The output depends only on the view, so identical views give identical bytes.
    """
    parts = [f"Month {view.decision_step}. Your id: {view.agent_id}.", "", "### Profile"]
    parts += _lines(view.profile)
    parts += ["", "### Report"]
    parts += _lines(view.report)
    parts += ["", "### Observation"]
    summary = SUMMARIES.get(view.role)
    if summary is not None:
        parts += summary(view)
    parts += _lines(view.observation)
    parts += ["", "### Functions", function_catalog(view.role), "", INSTRUCTIONS]
    return PromptDocument(view.role, view.agent_id, SYSTEM[view.role], "\n".join(parts) + "\n")
