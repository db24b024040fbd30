"""Chat backends, prompt templates, reply parsing and cost accounting."""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Protocol, Sequence

import numpy as np

from .persona import (
    HEADER,
    INTEREST_KEY,
    INTEREST_PROMPT_HEAD,
    VARIABLES,
    Persona,
    describe_persona,
    descriptor,
    render_persona,
)

GLOBAL_SYSTEM = (
    "Your task is to create a realistic social network. You will be provided a list of people "
    'in the network, where each person is described as "{descriptor}". Provide a list of '
    "friendship pairs in the format ID, ID with each pair separated by a newline. Do not include "
    "any other text in your response. Do not include any people who are not listed below."
)
LOCAL_SYSTEM = (
    "You are a {subject}. You are joining a social network. You will be provided a list of "
    'people in the network, where each person is described as "{descriptor}"{network}. '
    "{question} Provide a list of *YOUR* friends in the format ID, ID, ID, etc. Do not include "
    "any other text in your response. Do not include any people who are not listed below."
)
OPEN_QUESTION = "Which of these people will you become friends with?"
TARGET_QUESTION = "Choose exactly {n} of these people to become friends with."
REASONS_INSTRUCTION = (
    " Also give a short reason for each friend you choose: put each friend on its own line "
    "in the format ID: reason."
)
NETWORK_SUFFIX = {
    "degree": ", followed by their current number of friends",
    "friend_list": ", followed by the IDs of their current friends",
}


class ParseError(ValueError):
    """A model reply could not be parsed; the turn counts as failed."""


class BackendError(RuntimeError):
    """The chat backend could not produce a reply."""


class ChatReply(NamedTuple):
    text: str
    input_tokens: int
    output_tokens: int


class ChatBackend(Protocol):
    def complete(self, system_text: str, user_text: str) -> ChatReply: ...


@dataclass
class CostLedger:
    """Token and turn accounting for one generation.

    Tokens are only added on successful turns; failed turns only bump
    ``actual_turns``.
    """

    expected_turns: int = 0
    actual_turns: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record_success(self, reply: ChatReply) -> None:
        with self._lock:
            self.actual_turns += 1
            self.input_tokens += reply.input_tokens
            self.output_tokens += reply.output_tokens

    def record_failure(self) -> None:
        with self._lock:
            self.actual_turns += 1

    def to_dict(self) -> dict:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "expected_turns": self.expected_turns,
            "actual_turns": self.actual_turns,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CostLedger":
        return cls(d["expected_turns"], d["actual_turns"], d["input_tokens"], d["output_tokens"])


# ---------------------------------------------------------------- prompt rendering

def _variables_of(personas: Sequence[Persona]) -> tuple[tuple[str, ...], bool]:
    variables = personas[0].variables
    for p in personas:
        if p.variables != variables:
            raise ValueError("all personas must expose the same variables")
    return variables, any(p.interests is not None for p in personas)


def render_global_prompt(personas: Sequence[Persona],
                         listing_order: Sequence[int] | None = None) -> tuple[str, str]:
    """System and user text for whole-network generation.

    ``listing_order`` indexes into ``personas``.
    """
    personas = list(personas)
    if len(personas) < 2:
        raise ValueError("need at least two personas")
    order = range(len(personas)) if listing_order is None else listing_order
    variables, interests = _variables_of(personas)
    system = GLOBAL_SYSTEM.format(descriptor=descriptor(variables, interests))
    user = "\n".join(render_persona(personas[i]) for i in order)
    return system, user


def _friend_system(subject: Persona, variables, interests, network_view=None,
                   target_count=None, reasons=False) -> str:
    question = OPEN_QUESTION if target_count is None else TARGET_QUESTION.format(n=target_count)
    system = LOCAL_SYSTEM.format(
        subject=describe_persona(subject),
        descriptor=descriptor(variables, interests),
        network="" if network_view is None else NETWORK_SUFFIX[network_view],
        question=question,
    )
    if reasons:
        system += REASONS_INSTRUCTION
    return system


def _check_others(subject: Persona, others: Sequence[Persona]) -> None:
    if not others:
        raise ValueError("others must not be empty")
    if any(o.id == subject.id for o in others):
        raise ValueError(f"subject {subject.id} must not be listed among the others")


def render_local_prompt(subject: Persona, others: Sequence[Persona],
                        listing_order: Sequence[int] | None = None,
                        target_count: int | None = None,
                        reasons: bool = False) -> tuple[str, str]:
    """Prompt asking ``subject`` to pick friends among ``others`` (demographics only)."""
    others = list(others)
    _check_others(subject, others)
    order = range(len(others)) if listing_order is None else listing_order
    variables, interests = _variables_of([subject] + others)
    system = _friend_system(subject, variables, interests, None, target_count, reasons)
    user = "\n".join(render_persona(others[i]) for i in order)
    return system, user


def network_suffix(view: str, info) -> str:
    if view == "degree":
        return f"; has {int(info)} friends"
    if view == "friend_list":
        ids = sorted(int(x) for x in info)
        if not ids:
            return "; no friends yet"
        return "; friends with IDs " + ", ".join(str(x) for x in ids)
    raise ValueError(f"unknown network view {view!r}")


def render_sequential_prompt(subject: Persona, others: Sequence[Persona], network_view: str,
                             network_info: Mapping[int, object],
                             listing_order: Sequence[int] | None = None,
                             target_count: int | None = None,
                             reasons: bool = False) -> tuple[str, str]:
    """Local prompt plus the running network state of every listed persona.

    ``network_info`` maps persona id to its degree (``degree`` view) or to an
    iterable of friend ids (``friend_list`` view).
    """
    if network_view not in NETWORK_SUFFIX:
        raise ValueError(f"unknown network view {network_view!r}")
    others = list(others)
    _check_others(subject, others)
    missing = [o.id for o in others if o.id not in network_info]
    if missing:
        raise ValueError(f"no network information for personas {missing}")
    order = range(len(others)) if listing_order is None else listing_order
    variables, interests = _variables_of([subject] + others)
    system = _friend_system(subject, variables, interests, network_view, target_count, reasons)
    user = "\n".join(
        render_persona(others[i]) + network_suffix(network_view, network_info[others[i].id])
        for i in order
    )
    return system, user


# ---------------------------------------------------------------- reply parsing

_INT = re.compile(r"\d+")


def _as_id(token: str, valid: set[int]) -> int:
    if not _INT.fullmatch(token):
        raise ParseError(f"not an ID: {token!r}")
    value = int(token)
    if value not in valid:
        raise ParseError(f"unknown ID {value}")
    return value


def parse_global_reply(text: str, valid_ids) -> set[tuple[int, int]]:
    """Parse ``ID, ID`` lines into canonical ``(u, v)`` pairs with ``u < v``."""
    valid = set(valid_ids)
    pairs = set()
    for line in text.strip().splitlines():
        line = line.strip()
        if not line:
            continue
        toks = [t for t in re.split(r"[,\s]+", line) if t]
        if len(toks) != 2:
            raise ParseError(f"expected a pair, got {line!r}")
        u, v = (_as_id(t, valid) for t in toks)
        if u == v:
            raise ParseError(f"self pair {line!r}")
        pairs.add((min(u, v), max(u, v)))
    return pairs


def _check_choice(chosen, subject_id, required_count):
    if subject_id in chosen:
        raise ParseError(f"persona {subject_id} selected itself")
    if required_count is not None and len(chosen) != required_count:
        raise ParseError(f"expected {required_count} friends, got {len(chosen)}")


def parse_friend_reply(text: str, valid_ids, subject_id: int,
                       required_count: int | None = None) -> set[int]:
    """Parse ``ID, ID, ID`` into a set of chosen IDs."""
    valid = set(valid_ids) | {subject_id}
    chosen = {_as_id(t, valid) for t in re.split(r"[,\s]+", text.strip()) if t}
    _check_choice(chosen, subject_id, required_count)
    return chosen


_REASON_LINE = re.compile(r"^\s*(\d+)\s*[:.,\-)]\s*(.*?)\s*$")


def parse_reasoned_reply(text: str, valid_ids, subject_id: int,
                         required_count: int | None = None) -> dict[int, str]:
    """Parse ``ID: reason`` lines into ``{id: reason}``."""
    valid = set(valid_ids) | {subject_id}
    out: dict[int, str] = {}
    for line in text.strip().splitlines():
        if not line.strip():
            continue
        m = _REASON_LINE.match(line)
        if m is None:
            raise ParseError(f"expected 'ID: reason', got {line!r}")
        out[_as_id(m.group(1), valid)] = m.group(2)
    _check_choice(out, subject_id, required_count)
    return out


# ---------------------------------------------------------------- mock backend

def _whitespace_tokens(*texts: str) -> int:
    return sum(len(t.split()) for t in texts)


_HEADER_TO_VAR = {h: v for v, h in HEADER.items()}
_KEY_TO_VAR = {k: v for v, k in INTEREST_KEY.items()}
_LINE = re.compile(r"^(\d+)\. (.*)$")
_DEGREE_TAIL = re.compile(r"; has (\d+) friends$")
_LIST_TAIL = re.compile(r"; friends with IDs ([\d, ]+)$")
_EMPTY_TAIL = "; no friends yet"

DEFAULT_INTERESTS = {
    "Democrat": "social justice, community service, progressive policies, reading, travel",
    "Republican": "conservative politics, church activities, gardening, golf, hunting",
    "Independent": "hiking, technology, local history, cooking, independent films",
}
FALLBACK_INTEREST = "reading, cooking, travel, music, spending time with family"


@dataclass(frozen=True)
class _Listed:
    id: int
    attrs: dict
    degree: int | None


def _parse_attrs(text: str, variables: Sequence[str]) -> dict:
    text = text.split("; interests include: ", 1)[0]
    parts = text.split(", ") if variables else []
    if len(parts) != len(variables):
        raise ValueError(f"cannot align {text!r} with {variables}")
    attrs = {}
    for var, part in zip(variables, parts):
        attrs[var] = int(part[4:]) if var == "age" else part
    return attrs


def _parse_listing(user_text: str, variables) -> list[_Listed]:
    out = []
    for line in user_text.splitlines():
        m = _LINE.match(line)
        if m is None:
            raise ValueError(f"unrecognized persona line {line!r}")
        pid, rest = int(m.group(1)), m.group(2)
        degree = None
        if (d := _DEGREE_TAIL.search(rest)) is not None:
            degree, rest = int(d.group(1)), rest[: d.start()]
        elif (d := _LIST_TAIL.search(rest)) is not None:
            degree, rest = len(d.group(1).split(",")), rest[: d.start()]
        elif rest.endswith(_EMPTY_TAIL):
            degree, rest = 0, rest[: -len(_EMPTY_TAIL)]
        out.append(_Listed(pid, _parse_attrs(rest, variables), degree))
    return out


def _descriptor_variables(system_text: str) -> list[str]:
    m = re.search(r'described as "ID\. ([^"]*)"', system_text)
    if m is None:
        raise ValueError("no persona descriptor in system text")
    headers = m.group(1).split("; interests include:")[0]
    return [_HEADER_TO_VAR[h] for h in headers.split(", ") if h]


@dataclass(frozen=True)
class MockBackend:
    """Deterministic offline stand-in for a chat model.

    Each offered candidate is befriended with probability
    ``sigmoid(logit(base_rate) + sum_v w_v * match_v + degree_bonus * d)``, where
    ``d = (degree - mean degree) / max degree`` over the listed candidates.
    Categorical variables match when equal; age similarity is
    ``exp(-|age gap| / age_scale)``. The coin for a candidate is a hash of the mock
    seed, the full prompt text and the candidate id, so replies are a pure
    function of (seed, prompt).
    """

    similarity_weights: Mapping[str, float] = field(default_factory=lambda: {
        "gender": 0.6, "age": 0.6, "race": 0.6, "religion": 0.6, "political": 2.5})
    degree_bonus: float = 0.0
    base_rate: float = 0.01
    seed: int = 0
    age_scale: float = 10.0
    interest_phrases: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_INTERESTS))

    def __post_init__(self):
        if not 0.0 <= self.base_rate <= 1.0:
            raise ValueError("base_rate must be a probability")
        if any(w < 0 for w in self.similarity_weights.values()):
            raise ValueError("similarity weights must be non-negative")

    # -- probability model
    def _match(self, a: dict, b: dict) -> float:
        score = 0.0
        for var, w in self.similarity_weights.items():
            if w == 0 or var not in a or var not in b:
                continue
            if var == "age":
                score += w * math.exp(-abs(a["age"] - b["age"]) / self.age_scale)
            else:
                score += w * float(a[var] == b[var])
        return score

    def probability(self, subject: dict, candidate: dict, normalized_degree: float = 0.0) -> float:
        if self.base_rate in (0.0, 1.0):
            return self.base_rate
        z = math.log(self.base_rate / (1 - self.base_rate))
        z += self._match(subject, candidate) + self.degree_bonus * normalized_degree
        return 1.0 / (1.0 + math.exp(-z))

    def _uniform(self, digest: bytes, *keys: int) -> float:
        h = hashlib.blake2b(digest, digest_size=8)
        h.update(np.array([self.seed, *keys], dtype=np.int64).tobytes())
        return (int.from_bytes(h.digest(), "little") >> 11) / float(1 << 53)

    # -- protocol
    def complete(self, system_text: str, user_text: str) -> ChatReply:
        if user_text.startswith(INTEREST_PROMPT_HEAD):
            reply = self._interests(user_text)
        elif system_text.startswith("Your task is to create a realistic social network."):
            reply = self._global(system_text, user_text)
        elif system_text.startswith("You are a ") and "You are joining a social network." in system_text:
            reply = self._friends(system_text, user_text)
        else:
            raise BackendError("mock backend does not recognize this prompt template")
        return ChatReply(reply, _whitespace_tokens(system_text, user_text), _whitespace_tokens(reply))

    def _interests(self, user_text: str) -> str:
        for line in user_text.splitlines()[1:]:
            key, _, value = line.partition(": ")
            if _KEY_TO_VAR.get(key) == "political":
                return self.interest_phrases.get(value, FALLBACK_INTEREST)
        return FALLBACK_INTEREST

    def _global(self, system_text: str, user_text: str) -> str:
        variables = _descriptor_variables(system_text)
        listed = _parse_listing(user_text, variables)
        digest = hashlib.sha256((system_text + "\x00" + user_text).encode()).digest()
        lines = []
        for i, a in enumerate(listed):
            for b in listed[i + 1:]:
                p = self.probability(a.attrs, b.attrs)
                if self._uniform(digest, min(a.id, b.id), max(a.id, b.id)) < p:
                    lines.append(f"{a.id}, {b.id}")
        return "\n".join(lines)

    def _friends(self, system_text: str, user_text: str) -> str:
        variables = _descriptor_variables(system_text)
        head = system_text[len("You are a "):system_text.index(". You are joining a social network.")]
        subject = _parse_attrs(head, variables)
        listed = _parse_listing(user_text, variables)
        digest = hashlib.sha256((system_text + "\x00" + user_text).encode()).digest()
        degs = [c.degree or 0 for c in listed]
        max_deg, mean_deg = max(degs), sum(degs) / len(degs)
        probs, coins = [], []
        for c, d in zip(listed, degs):
            # centred so the bonus shifts choices toward popular people without
            # inflating the overall friend count
            nd = (d - mean_deg) / max_deg if max_deg > 0 else 0.0
            probs.append(self.probability(subject, c.attrs, nd))
            coins.append(self._uniform(digest, c.id))
        target = re.search(r"Choose exactly (\d+) of these people", system_text)
        if target is not None:
            n = min(int(target.group(1)), len(listed))
            # weighted sampling without replacement: largest u ** (1/p)
            keys = [u ** (1.0 / p) if p > 0 else -1.0 + u for u, p in zip(coins, probs)]
            picked_idx = sorted(range(len(listed)), key=lambda i: -keys[i])[:n]
            picked = [listed[i] for i in sorted(picked_idx)]
        else:
            picked = [c for c, u, p in zip(listed, coins, probs) if u < p]
        if system_text.endswith(REASONS_INSTRUCTION):
            return "\n".join(f"{c.id}: {self._reason(subject, c.attrs)}" for c in picked)
        return ", ".join(str(c.id) for c in picked)

    @staticmethod
    def _reason(subject: dict, other: dict) -> str:
        shared = [v for v in VARIABLES if v != "age" and v in subject and subject.get(v) == other.get(v)]
        if "age" in subject and "age" in other and abs(subject["age"] - other["age"]) <= 10:
            shared.append("age")
        if not shared:
            return "they seem interesting to get to know"
        names = {"race": "race/ethnicity", "political": "political affiliation"}
        return "we share " + ", ".join(names.get(v, v) for v in shared)


# ---------------------------------------------------------------- HTTP backend

@dataclass(frozen=True)
class BackendConfig:
    """Settings for an OpenAI-compatible chat-completion endpoint."""

    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-3.5-turbo"
    temperature: float = 0.8
    retry_cap: int = 5
    timeout: float = 60.0
    http_retries: int = 3
    api_key_env: str = "OPENAI_API_KEY"

    @classmethod
    def load(cls, path) -> "BackendConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown backend config keys: {sorted(unknown)}")
        return cls(**data)


class OpenAIChatBackend:
    """Chat-completion client for any OpenAI-compatible HTTP endpoint."""

    def __init__(self, config: BackendConfig = BackendConfig(), api_key: str | None = None,
                 transport=None):
        import httpx

        self.config = config
        key = api_key if api_key is not None else os.environ.get(config.api_key_env)
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(base_url=config.base_url.rstrip("/"), headers=headers,
                                    timeout=config.timeout, transport=transport)
        self._httpx = httpx

    def request_body(self, system_text: str, user_text: str) -> dict:
        messages = []
        if system_text:
            messages.append({"role": "system", "content": system_text})
        messages.append({"role": "user", "content": user_text})
        return {"model": self.config.model, "messages": messages,
                "temperature": self.config.temperature}

    def complete(self, system_text: str, user_text: str) -> ChatReply:
        body = self.request_body(system_text, user_text)
        delay = 1.0
        last = None
        for attempt in range(self.config.http_retries + 1):
            try:
                resp = self._client.post("/chat/completions", json=body)
            except self._httpx.HTTPError as exc:
                last = exc
            else:
                if resp.status_code == 200:
                    return self._reply(resp.json())
                last = BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                if resp.status_code not in (408, 409, 429) and resp.status_code < 500:
                    break
            if attempt < self.config.http_retries:
                time.sleep(delay)
                delay *= 2
        raise BackendError(f"chat completion failed: {last}")

    @staticmethod
    def _reply(data: dict) -> ChatReply:
        try:
            text = data["choices"][0]["message"]["content"] or ""
            usage = data.get("usage") or {}
            return ChatReply(text, int(usage.get("prompt_tokens", 0)),
                             int(usage.get("completion_tokens", 0)))
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed chat completion response: {exc}") from exc

    def close(self) -> None:
        self._client.close()
