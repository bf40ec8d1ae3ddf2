"""Aho-Corasick automata over {L, S} and the derived avoidance DFA.

The avoidance DFA keeps only the nonterminal Aho-Corasick states, so every
path from the start state spells a word containing none of the patterns.
Counting words of length N is then a walk count from the start state.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

from .words import LETTERS, Word, boundary_flip_mffs

ROOT = 0


@dataclass(frozen=True)
class AcAutomaton:
    """Failure-completed Aho-Corasick automaton.

    States are trie nodes numbered in BFS order with the root at 0.
    ``goto[q][a]`` is the completed transition on bit ``a`` (L=0, S=1).
    """

    patterns: tuple[Word, ...]
    labels: tuple[str, ...]
    goto: tuple[tuple[int, int], ...]
    failure: tuple[int, ...]
    output: tuple[frozenset[Word], ...]

    @property
    def num_states(self) -> int:
        return len(self.labels)

    def is_terminal(self, q: int) -> bool:
        return bool(self.output[q])

    @property
    def terminal_states(self) -> list[int]:
        return [q for q in range(self.num_states) if self.output[q]]


class InvalidPatternError(ValueError):
    pass


def build_ac(patterns: Iterable[Word]) -> AcAutomaton:
    """Build the trie, BFS failure links, completed gotos and suffix outputs."""
    pats = tuple(dict.fromkeys(patterns))
    if not pats:
        raise InvalidPatternError("pattern set is empty")
    for p in pats:
        if len(p) == 0:
            raise InvalidPatternError("empty pattern")

    children: list[list[int | None]] = [[None, None]]
    labels = [""]
    own_out: list[set[Word]] = [set()]
    for p in pats:
        q = ROOT
        for a in p.bits:
            nxt = children[q][a]
            if nxt is None:
                nxt = len(labels)
                children[q][a] = nxt
                children.append([None, None])
                labels.append(labels[q] + LETTERS[a])
                own_out.append(set())
            q = nxt
        own_out[q].add(p)

    # Renumber in BFS order so state ids do not depend on pattern order.
    order = [ROOT]
    queue = deque([ROOT])
    while queue:
        q = queue.popleft()
        for a in (0, 1):
            c = children[q][a]
            if c is not None:
                order.append(c)
                queue.append(c)
    new_id = {old: i for i, old in enumerate(order)}
    n = len(order)
    kids = [[None if children[old][a] is None else new_id[children[old][a]] for a in (0, 1)] for old in order]
    labels = [labels[old] for old in order]
    outs = [set(own_out[old]) for old in order]

    fail = [ROOT] * n
    goto = [[ROOT, ROOT] for _ in range(n)]
    for a in (0, 1):
        c = kids[ROOT][a]
        goto[ROOT][a] = ROOT if c is None else c
    # BFS order guarantees fail[q] is finalised before q's children are visited
    for q in range(n):
        for a in (0, 1):
            c = kids[q][a]
            if c is None:
                if q != ROOT:
                    goto[q][a] = goto[fail[q]][a]
                continue
            goto[q][a] = c
            if q != ROOT:
                fail[c] = goto[fail[q]][a]
            outs[c] |= outs[fail[c]]

    return AcAutomaton(
        patterns=pats,
        labels=tuple(labels),
        goto=tuple((g[0], g[1]) for g in goto),
        failure=tuple(fail),
        output=tuple(frozenset(o) for o in outs),
    )


@dataclass(frozen=True)
class AvoidanceDfa:
    """Partial DFA on the nonterminal states reachable from the root.

    ``transitions[i][a]`` is the target state index or None when reading
    bit ``a`` would complete a pattern.  ``adjacency[p, q]`` counts letters
    leading from p to q.
    """

    patterns: tuple[Word, ...]
    labels: tuple[str, ...]
    ac_states: tuple[int, ...]
    transitions: tuple[tuple[int | None, int | None], ...]
    start: int = 0

    @property
    def num_states(self) -> int:
        return len(self.labels)

    @property
    def adjacency(self) -> np.ndarray:
        n = self.num_states
        A = np.zeros((n, n), dtype=np.int64)
        for p, row in enumerate(self.transitions):
            for q in row:
                if q is not None:
                    A[p, q] += 1
        return A

    def run(self, w: Word) -> int | None:
        """Final state after reading ``w``, or None once a pattern occurs."""
        q: int | None = self.start
        for a in w.bits:
            q = self.transitions[q][a]
            if q is None:
                return None
        return q

    def accepts(self, w: Word) -> bool:
        return self.run(w) is not None

    def words(self, N: int) -> Iterator[Word]:
        """All accepted words of length N in lexicographic (L < S) order."""
        stack: list[tuple[int, str]] = [(self.start, "")]
        while stack:
            q, prefix = stack.pop()
            if len(prefix) == N:
                yield Word(prefix)
                continue
            for a in (1, 0):
                nxt = self.transitions[q][a]
                if nxt is not None:
                    stack.append((nxt, prefix + LETTERS[a]))

    def to_json(self) -> dict:
        return {
            "patterns": [p.letters for p in self.patterns],
            "states": list(self.labels),
            "start": self.start,
            "transitions": [
                {"from": p, "letter": LETTERS[a], "to": q}
                for p, row in enumerate(self.transitions)
                for a, q in enumerate(row)
                if q is not None
            ],
            "adjacency": self.adjacency.tolist(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def prune_to_avoidance(ac: AcAutomaton) -> AvoidanceDfa:
    """Drop terminal states, then anything unreachable from the root."""
    if ac.is_terminal(ROOT):
        raise InvalidPatternError("root is terminal; the empty word is forbidden")
    keep: list[int] = []
    index: dict[int, int] = {}
    queue = deque([ROOT])
    index[ROOT] = 0
    keep.append(ROOT)
    while queue:
        q = queue.popleft()
        for a in (0, 1):
            t = ac.goto[q][a]
            if ac.is_terminal(t) or t in index:
                continue
            index[t] = len(keep)
            keep.append(t)
            queue.append(t)
    transitions = []
    for q in keep:
        row = []
        for a in (0, 1):
            t = ac.goto[q][a]
            row.append(None if ac.is_terminal(t) else index[t])
        transitions.append((row[0], row[1]))
    return AvoidanceDfa(
        patterns=ac.patterns,
        labels=tuple(ac.labels[q] for q in keep),
        ac_states=tuple(keep),
        transitions=tuple(transitions),
        start=0,
    )


def count_words(dfa: AvoidanceDfa, N: int) -> int:
    """Exact number of length-N words avoiding every pattern."""
    if N < 0:
        raise ValueError("N must be >= 0")
    v = [0] * dfa.num_states
    v[dfa.start] = 1
    for _ in range(N):
        nxt = [0] * dfa.num_states
        for p, c in enumerate(v):
            if c:
                for q in dfa.transitions[p]:
                    if q is not None:
                        nxt[q] += c
        v = nxt
    return sum(v)


def count_sequence(dfa: AvoidanceDfa, N_max: int) -> list[int]:
    """[count_words(dfa, N) for N in 0..N_max] in a single pass."""
    v = [0] * dfa.num_states
    v[dfa.start] = 1
    out = [1]
    for _ in range(N_max):
        nxt = [0] * dfa.num_states
        for p, c in enumerate(v):
            if c:
                for q in dfa.transitions[p]:
                    if q is not None:
                        nxt[q] += c
        v = nxt
        out.append(sum(v))
    return out


@lru_cache(maxsize=None)
def rung_dfa(K: int) -> AvoidanceDfa:
    """Avoidance DFA for the rung-K forbidden set."""
    return prune_to_avoidance(build_ac(boundary_flip_mffs(K).members))
