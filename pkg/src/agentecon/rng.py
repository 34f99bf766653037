"""Named random substreams derived from one run seed.

Each module draws from its own stream (``labor``, ``goods``, ``metabolic``,
...), so adding draws in one module never shifts another's sequence.
Backends get per-(step, agent) generators that do not depend on the order
in which agents are queried.
"""
from __future__ import annotations

import zlib

import numpy as np

STREAMS = ("init", "labor", "goods", "housing", "metabolic", "backend", "shock", "placement")


def _key(name: str) -> int:
    return zlib.crc32(name.encode())


class RngTree:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def stream(self, name: str) -> np.random.Generator:
        gen = self._streams.get(name)
        if gen is None:
            gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, _key(name)])))
            self._streams[name] = gen
        return gen

    def __getitem__(self, name: str) -> np.random.Generator:
        return self.stream(name)

    def agent(self, step: int, role: str, agent_id: int) -> np.random.Generator:
        """Fresh generator for one agent's decision at one step."""
        ss = np.random.SeedSequence([self.seed, _key("agent"), step, _key(role), agent_id])
        return np.random.Generator(np.random.PCG64(ss))

    def state_dict(self) -> dict:
        return {name: gen.bit_generator.state for name, gen in sorted(self._streams.items())}

    def load_state_dict(self, states: dict) -> None:
        for name, st in states.items():
            self.stream(name).bit_generator.state = st
