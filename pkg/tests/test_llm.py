import json
import threading

import httpx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socnetgen.llm import (
    BackendConfig,
    BackendError,
    ChatReply,
    CostLedger,
    MockBackend,
    OpenAIChatBackend,
    ParseError,
    parse_friend_reply,
    parse_global_reply,
    parse_reasoned_reply,
    render_global_prompt,
    render_local_prompt,
    render_sequential_prompt,
)
from socnetgen.persona import Persona, PersonaSet, bundled_personas, project

P28 = Persona(28, "Man", 48, "Hispanic", "Protestant", "Democrat")
P11 = Persona(11, "Man", 31, "White", "Protestant", "Democrat")
P10 = Persona(10, "Man", 58, "Hispanic", "Catholic", "Democrat")
P41 = Persona(41, "Woman", 41, "White", "Catholic", "Republican")

GLOBAL_TEXT = (
    "Your task is to create a realistic social network. You will be provided a list of people in "
    'the network, where each person is described as "ID. Gender, Age, Race/ethnicity, Religion, '
    'Political affiliation". Provide a list of friendship pairs in the format ID, ID with each '
    "pair separated by a newline. Do not include any other text in your response. Do not include "
    "any people who are not listed below."
)
LOCAL_TEXT = (
    "You are a Man, age 48, Hispanic, Protestant, Democrat. You are joining a social network. "
    "You will be provided a list of people in the network, where each person is described as "
    '"ID. Gender, Age, Race/ethnicity, Religion, Political affiliation". Which of these people '
    "will you become friends with? Provide a list of *YOUR* friends in the format ID, ID, ID, "
    "etc. Do not include any other text in your response. Do not include any people who are not "
    "listed below."
)


def test_global_prompt_matches_figure():
    system, user = render_global_prompt([P28, P11, P10, P41])
    assert system == GLOBAL_TEXT
    assert user.splitlines() == [
        "28. Man, age 48, Hispanic, Protestant, Democrat",
        "11. Man, age 31, White, Protestant, Democrat",
        "10. Man, age 58, Hispanic, Catholic, Democrat",
        "41. Woman, age 41, White, Catholic, Republican",
    ]


def test_global_prompt_listing_order():
    s1, u1 = render_global_prompt([P28, P11], [0, 1])
    s2, u2 = render_global_prompt([P28, P11], [1, 0])
    assert s1 == s2
    assert len(u1.splitlines()) == 2
    assert u1.splitlines() == u2.splitlines()[::-1]
    with pytest.raises(ValueError):
        render_global_prompt([P28])


def test_local_prompt_matches_figure():
    system, user = render_local_prompt(P28, [P11, P10, P41])
    assert system == LOCAL_TEXT
    assert "28." not in user
    assert user.splitlines()[0] == "11. Man, age 31, White, Protestant, Democrat"


def test_local_prompt_rejects_bad_others():
    with pytest.raises(ValueError):
        render_local_prompt(P28, [])
    with pytest.raises(ValueError):
        render_local_prompt(P28, [P11, P28])


def test_sequential_degree_view_matches_figure():
    info = {11: 4, 10: 2, 41: 0}
    system, user = render_sequential_prompt(P28, [P11, P10, P41], "degree", info)
    assert system == LOCAL_TEXT.replace(
        'Political affiliation".', 'Political affiliation", followed by their current number of friends.')
    assert user.splitlines() == [
        "11. Man, age 31, White, Protestant, Democrat; has 4 friends",
        "10. Man, age 58, Hispanic, Catholic, Democrat; has 2 friends",
        "41. Woman, age 41, White, Catholic, Republican; has 0 friends",
    ]


def test_sequential_first_turn_all_zero():
    _, user = render_sequential_prompt(P28, [P11, P10], "degree", {11: 0, 10: 0})
    assert all(line.endswith("has 0 friends") for line in user.splitlines())


def test_sequential_friend_list_view():
    system, user = render_sequential_prompt(P28, [P11, P10], "friend_list", {11: [41, 2], 10: []})
    assert "followed by the IDs of their current friends" in system
    assert user.splitlines()[0].endswith("; friends with IDs 2, 41")
    assert user.splitlines()[1].endswith("; no friends yet")


def test_sequential_variants():
    system, _ = render_sequential_prompt(P28, [P11], "degree", {11: 1}, target_count=5)
    assert "Choose exactly 5 of these people" in system
    assert "Which of these people will you become friends with?" not in system
    system, _ = render_sequential_prompt(P28, [P11], "degree", {11: 1}, reasons=True)
    assert "ID: reason" in system
    with pytest.raises(ValueError):
        render_sequential_prompt(P28, [P11, P10], "degree", {11: 1})
    with pytest.raises(ValueError):
        render_sequential_prompt(P28, [P11], "followers", {11: 1})


def test_interest_clause_in_prompts():
    a = Persona(0, "Man", 30, "White", "Catholic", "Democrat", "chess")
    b = Persona(1, "Woman", 40, "Black", "Protestant", "Republican", "golf")
    system, user = render_local_prompt(a, [b])
    assert '"ID. Gender, Age, Race/ethnicity, Religion, Political affiliation; interests include: Interests"' in system
    assert user == "1. Woman, age 40, Black, Protestant, Republican; interests include: golf"


def test_renderers_are_pure():
    ps = list(bundled_personas())
    assert render_global_prompt(ps, list(range(49, -1, -1))) == render_global_prompt(ps, list(range(49, -1, -1)))


def test_parse_global_reply():
    valid = range(1, 51)
    assert parse_global_reply("1, 2\n2, 3", valid) == {(1, 2), (2, 3)}
    assert parse_global_reply("1, 2\n2, 1", valid) == {(1, 2)}
    assert parse_global_reply("", valid) == set()
    for bad in ("1, 99", "1, 2, 3", "1 ; 2", "4, 4", "a, b"):
        with pytest.raises(ParseError):
            parse_global_reply(bad, valid)


def test_parse_friend_reply():
    valid = [3, 7, 12, 5]
    assert parse_friend_reply("3, 7, 12", valid, subject_id=5) == {3, 7, 12}
    assert parse_friend_reply("", valid, subject_id=5) == set()
    with pytest.raises(ParseError):
        parse_friend_reply("3, 7", [3, 7], subject_id=3)
    with pytest.raises(ParseError):
        parse_friend_reply("1, 2, 3", [1, 2, 3], subject_id=9, required_count=2)
    with pytest.raises(ParseError):
        parse_friend_reply("3, 99", valid, subject_id=5)
    assert parse_friend_reply("1, 2", [1, 2, 3], subject_id=9, required_count=2) == {1, 2}


def test_parse_reasoned_reply():
    out = parse_reasoned_reply("3: we both like chess\n7: same age", [3, 7], subject_id=1)
    assert out == {3: "we both like chess", 7: "same age"}
    with pytest.raises(ParseError):
        parse_reasoned_reply("we are alike", [3], subject_id=1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 80), max_size=15), st.sets(st.integers(0, 40), min_size=1))
def test_parsers_never_return_invalid_ids(tokens, valid):
    text = ", ".join(map(str, tokens))
    try:
        got = parse_friend_reply(text, valid, subject_id=-1)
    except ParseError:
        return
    assert got <= valid


def test_ledger_accounting_and_threads():
    ledger = CostLedger(expected_turns=2)
    ledger.record_success(ChatReply("x", 10, 3))
    ledger.record_failure()
    ledger.record_success(ChatReply("y", 5, 2))
    assert ledger.to_dict() == {"input_tokens": 15, "output_tokens": 5,
                                "expected_turns": 2, "actual_turns": 3}
    assert CostLedger.from_dict(ledger.to_dict()).to_dict() == ledger.to_dict()

    shared = CostLedger()

    def work():
        for _ in range(1000):
            shared.record_success(ChatReply("", 1, 1))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert shared.actual_turns == shared.input_tokens == 8000


def test_mock_zero_weights_fair_coin_and_reproducible():
    mock = MockBackend(similarity_weights={}, base_rate=0.5, seed=3)
    ps = list(bundled_personas())
    system, user = render_local_prompt(ps[0], ps[1:])
    a = mock.complete(system, user)
    assert a == mock.complete(system, user)
    chosen = parse_friend_reply(a.text, range(1, 50), 0)
    assert 10 <= len(chosen) <= 39
    assert a.input_tokens == len(system.split()) + len(user.split())
    assert a.output_tokens == len(a.text.split())
    assert MockBackend(similarity_weights={}, base_rate=0.5, seed=4).complete(system, user) != a


def test_mock_only_offers_listed_ids():
    mock = MockBackend(base_rate=0.3)
    ps = list(bundled_personas())
    others = ps[10:20]
    system, user = render_sequential_prompt(ps[0], others, "degree", {p.id: 3 for p in others})
    got = parse_friend_reply(mock.complete(system, user).text, [p.id for p in others], 0)
    assert got <= {p.id for p in others}


def test_mock_global_and_target_and_reasons():
    ps = list(bundled_personas())[:12]
    mock = MockBackend(base_rate=0.2)
    system, user = render_global_prompt(ps)
    pairs = parse_global_reply(mock.complete(system, user).text, range(12))
    assert all(u < v for u, v in pairs)
    system, user = render_local_prompt(ps[0], ps[1:], target_count=4)
    assert len(parse_friend_reply(mock.complete(system, user).text, range(1, 12), 0, 4)) == 4
    system, user = render_local_prompt(ps[0], ps[1:], target_count=3, reasons=True)
    reasons = parse_reasoned_reply(mock.complete(system, user).text, range(1, 12), 0, 3)
    assert len(reasons) == 3 and all(reasons.values())


def test_mock_projected_personas():
    ps = list(project(PersonaSet(tuple(bundled_personas())), ["political"]))
    mock = MockBackend(base_rate=0.1)
    system, user = render_local_prompt(ps[0], ps[1:])
    parse_friend_reply(mock.complete(system, user).text, range(1, 50), 0)


def test_mock_interest_prompt_and_unknown_template():
    mock = MockBackend()
    reply = mock.complete("", "In 8-12 words, describe the interests of someone with the "
                              "following demographics:\npolitical affiliation: Republican\nage: 40")
    assert reply.text == mock.interest_phrases["Republican"]
    with pytest.raises(BackendError):
        mock.complete("Translate to French.", "hello")


def test_mock_probability_model():
    mock = MockBackend(similarity_weights={"political": 2.0}, base_rate=0.1)
    same = mock.probability({"political": "Democrat"}, {"political": "Democrat"})
    diff = mock.probability({"political": "Democrat"}, {"political": "Republican"})
    assert diff == pytest.approx(0.1)
    logit = np.log(0.1 / 0.9) + 2.0
    assert same == pytest.approx(1 / (1 + np.exp(-logit)))
    with pytest.raises(ValueError):
        MockBackend(base_rate=1.5)


# ---------------------------------------------------------------- HTTP backend

def completion(text, pt=11, ct=4):
    return {"choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": pt, "completion_tokens": ct}}


def test_http_request_and_reply():
    seen = []

    def handler(request):
        seen.append(request)
        return httpx.Response(200, json=completion("1, 2"))

    cfg = BackendConfig(base_url="http://llm.test/v1", model="m1", temperature=0.8)
    backend = OpenAIChatBackend(cfg, api_key="k", transport=httpx.MockTransport(handler))
    reply = backend.complete("sys", "user")
    assert reply == ChatReply("1, 2", 11, 4)
    body = json.loads(seen[0].content)
    assert body == {"model": "m1", "temperature": 0.8,
                    "messages": [{"role": "system", "content": "sys"},
                                 {"role": "user", "content": "user"}]}
    assert seen[0].url.path == "/v1/chat/completions"
    assert seen[0].headers["authorization"] == "Bearer k"
    backend.close()


def test_http_retries_then_fails(monkeypatch):
    monkeypatch.setattr("socnetgen.llm.time.sleep", lambda s: None)
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(503, text="busy")
        return httpx.Response(200, json=completion("ok"))

    cfg = BackendConfig(base_url="http://llm.test", http_retries=3)
    assert OpenAIChatBackend(cfg, transport=httpx.MockTransport(handler)).complete("", "u").text == "ok"
    assert len(calls) == 3

    def bad_request(request):
        calls.append(1)
        return httpx.Response(400, text="nope")

    calls.clear()
    with pytest.raises(BackendError):
        OpenAIChatBackend(cfg, transport=httpx.MockTransport(bad_request)).complete("", "u")
    assert len(calls) == 1


def test_http_malformed_body():
    cfg = BackendConfig(base_url="http://llm.test")
    backend = OpenAIChatBackend(cfg, transport=httpx.MockTransport(
        lambda r: httpx.Response(200, json={"choices": []})))
    with pytest.raises(BackendError):
        backend.complete("", "u")


def test_backend_config_load(tmp_path):
    p = tmp_path / "b.json"
    p.write_text(json.dumps({"model": "x", "temperature": 0.2}))
    cfg = BackendConfig.load(p)
    assert (cfg.model, cfg.temperature, cfg.retry_cap) == ("x", 0.2, 5)
    p.write_text(json.dumps({"modle": "x"}))
    with pytest.raises(ValueError):
        BackendConfig.load(p)
