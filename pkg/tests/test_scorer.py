"""Output parsing and the two scoring protocols, driven by a stub backend."""

import json

import pytest

from conftest import DATA_DIR
from peergauge.backends import AuthError, StubBackend, TransportError
from peergauge.metrics import EmptyInput
from peergauge.model import (
    ASPECTS,
    AnnotationMode,
    Aspect,
    ReviewComment,
)
from peergauge.rubric import PromptMode, build_multi_aspect_prompt, multi_aspect_schema
from peergauge.scorer import (
    ParseStatus,
    PromptPools,
    ScoredComment,
    extract_first_json,
    load_prompt_pools,
    load_scored,
    parse_claim_output,
    parse_scored_output,
    score_batch,
    score_comment,
    scored_from_dict,
    scored_to_dict,
    write_scored,
)

MULTI_SCHEMA_SR = multi_aspect_schema(AnnotationMode.SCORE_WITH_RATIONALE)


def _comment(n: int = 0) -> ReviewComment:
    return ReviewComment(
        id=f"r1:c{n}", review_id="r1", venue="iclr", year=2024, position=n,
        text=f"- Point {n}: the baseline comparison is confounded by tokenizer "
             "choices that section three never mentions.",
    )


def _full_response(verifiability: str = "2", claim: str = "Claim") -> str:
    payload = {"claim_rationale": "states a checkable fact", "claim_label": claim}
    for aspect in ASPECTS:
        payload[f"{aspect.value}_rationale"] = f"because of {aspect.value}"
        payload[f"{aspect.value}_label"] = "4"
    payload["verifiability_label"] = verifiability
    return json.dumps(payload)


# --- extract_first_json -------------------------------------------------------


@pytest.mark.parametrize("text, expected", [
    ('{"a": 1}', {"a": 1}),
    ('Sure! Here is the output:\n```json\n{"a": 1}\n```\nHope that helps.', {"a": 1}),
    ('{"outer": {"inner": 2}} trailing', {"outer": {"inner": 2}}),
    ('{"s": "braces }{ inside strings"}', {"s": "braces }{ inside strings"}),
    ('{"s": "escaped \\" quote"}', {"s": 'escaped " quote'}),
    ('{broken then {"ok": true}', {"ok": True}),
    ("[1, 2, 3]", None),
    ("no json here", None),
    ("{never closes", None),
])
def test_extract_first_json(text, expected):
    assert extract_first_json(text) == expected


# --- parse_scored_output --------------------------------------------------------


def test_parse_scored_output_full_multi_aspect_response():
    scored = parse_scored_output(_full_response(), MULTI_SCHEMA_SR, ASPECTS, "c1")
    assert scored.parse_status is ParseStatus.OK
    assert scored.missing_keys == ()
    assert scored.label(Aspect.ACTIONABILITY).score == 4
    assert scored.label(Aspect.VERIFIABILITY).score == 2
    assert scored.aspects[Aspect.HELPFULNESS].rationale == "because of helpfulness"


def test_parse_scored_output_records_missing_and_invalid_labels():
    payload = {
        "actionability_rationale": "r", "actionability_label": "4",
        "grounding_specificity_rationale": "r", "grounding_specificity_label": "9",
        "helpfulness_rationale": "r", "helpfulness_label": "3",
    }
    scored = parse_scored_output(json.dumps(payload), MULTI_SCHEMA_SR, ASPECTS, "c1")
    assert scored.parse_status is ParseStatus.PARTIAL
    assert set(scored.missing_keys) == {
        "grounding_specificity_label",
        "verifiability_label", "verifiability_rationale",
    }
    assert set(scored.aspects) == {Aspect.ACTIONABILITY, Aspect.HELPFULNESS}


def test_parse_scored_output_blank_rationale_downgrades_to_partial():
    payload = {"helpfulness_rationale": "  ", "helpfulness_label": "5"}
    scored = parse_scored_output(
        json.dumps(payload),
        ("helpfulness_rationale", "helpfulness_label"),
        [Aspect.HELPFULNESS], "c1",
    )
    assert scored.parse_status is ParseStatus.PARTIAL
    assert scored.missing_keys == ("helpfulness_rationale",)
    assert scored.label(Aspect.HELPFULNESS).score == 5
    assert scored.aspects[Aspect.HELPFULNESS].rationale is None


def test_parse_scored_output_without_json_is_failed():
    scored = parse_scored_output("I would rate this a 4.", MULTI_SCHEMA_SR,
                                 ASPECTS, "c1")
    assert scored.parse_status is ParseStatus.FAILED
    assert scored.missing_keys == MULTI_SCHEMA_SR
    assert scored.aspects == {}
    assert scored.raw_output == "I would rate this a 4."


def test_parse_scored_output_accepts_no_claim_unless_forbidden():
    raw = json.dumps({"verifiability_label": "X"})
    schema = ("verifiability_label",)
    allowed = parse_scored_output(raw, schema, [Aspect.VERIFIABILITY], "c1")
    assert allowed.label(Aspect.VERIFIABILITY).no_claim

    forbidden = parse_scored_output(raw, schema, [Aspect.VERIFIABILITY], "c1",
                                    forbid_no_claim=True)
    assert forbidden.parse_status is ParseStatus.PARTIAL
    assert forbidden.missing_keys == ("verifiability_label",)


# --- parse_claim_output ----------------------------------------------------------


@pytest.mark.parametrize("raw, expected", [
    ('{"claim_label": "Claim"}', True),
    ('{"claim_label": "no claim"}', False),
    ('{"claim_label": "maybe"}', None),
    ('{"other": 1}', None),
    ("The point contains no claim at all.", False),
    ("This is a claim about results.", True),
    ("Nothing relevant either way.", None),
    # a JSON object wins over surrounding prose, even unhelpful prose
    ('The claim is strong. {"claim_label": "No Claim"}', False),
])
def test_parse_claim_output(raw, expected):
    assert parse_claim_output(raw) is expected


# --- pools -----------------------------------------------------------------------


def test_load_prompt_pools_reads_all_five_files():
    pools = load_prompt_pools(DATA_DIR / "pools")
    assert set(pools.scoring) == set(ASPECTS)
    assert pools.claim_detection.size() >= 10


def test_prompt_pools_require_every_aspect():
    pools = load_prompt_pools(DATA_DIR / "pools")
    partial = {a: p for a, p in pools.scoring.items() if a is not Aspect.HELPFULNESS}
    with pytest.raises(ValueError) as err:
        PromptPools(scoring=partial, claim_detection=pools.claim_detection)
    assert "helpfulness" in str(err.value)


# --- scoring protocols -------------------------------------------------------------


@pytest.fixture(scope="module")
def pools() -> PromptPools:
    return load_prompt_pools(DATA_DIR / "pools")


def test_multi_aspect_path_costs_exactly_one_call():
    stub = StubBackend(default=_full_response())
    scored = score_comment(_comment(), backend=stub)
    assert len(stub.calls) == 1
    assert scored.parse_status is ParseStatus.OK
    assert set(scored.aspects) == set(ASPECTS)


def test_single_aspect_path_costs_five_calls_when_a_claim_is_found(pools):
    stub = StubBackend(default=_full_response(claim="Claim"))
    scored = score_comment(_comment(), backend=stub,
                           path=PromptMode.SINGLE_ASPECT, pools=pools)
    assert len(stub.calls) == 5
    assert scored.parse_status is ParseStatus.OK
    assert scored.label(Aspect.VERIFIABILITY).score == 2
    # one claim-detection prompt plus one rubric prompt per aspect
    assert sum("Claim Detection" in call for call in stub.calls) == 1


def test_single_aspect_path_costs_four_calls_without_a_claim(pools):
    stub = StubBackend(default=_full_response(claim="No Claim"))
    scored = score_comment(_comment(), backend=stub,
                           path=PromptMode.SINGLE_ASPECT, pools=pools)
    assert len(stub.calls) == 4
    assert scored.parse_status is ParseStatus.OK
    assert scored.label(Aspect.VERIFIABILITY).no_claim
    assert scored.aspects[Aspect.VERIFIABILITY].rationale == "states a checkable fact"


def test_single_aspect_path_requires_pools():
    with pytest.raises(ValueError):
        score_comment(_comment(), backend=StubBackend(default="{}"),
                      path=PromptMode.SINGLE_ASPECT)


def test_single_aspect_path_is_deterministic_for_a_seed(pools):
    first = StubBackend(default=_full_response())
    score_comment(_comment(), backend=first,
                  path=PromptMode.SINGLE_ASPECT, pools=pools, rng_seed=3)
    second = StubBackend(default=_full_response())
    score_comment(_comment(), backend=second,
                  path=PromptMode.SINGLE_ASPECT, pools=pools, rng_seed=3)
    assert first.calls == second.calls

    reseeded = StubBackend(default=_full_response())
    score_comment(_comment(), backend=reseeded,
                  path=PromptMode.SINGLE_ASPECT, pools=pools, rng_seed=4)
    assert reseeded.calls != first.calls


def test_unparseable_claim_answer_marks_verifiability_missing(pools):
    stub = StubBackend(default=_full_response(claim="mumble"))
    scored = score_comment(_comment(), backend=stub,
                           path=PromptMode.SINGLE_ASPECT, pools=pools)
    assert len(stub.calls) == 4
    assert scored.parse_status is ParseStatus.PARTIAL
    assert "claim_label" in scored.missing_keys
    assert Aspect.VERIFIABILITY not in scored.aspects
    assert set(scored.aspects) == set(ASPECTS) - {Aspect.VERIFIABILITY}


# --- batches ------------------------------------------------------------------------


def test_score_batch_preserves_input_order():
    stub = StubBackend(default=_full_response())
    comments = [_comment(n) for n in range(7)]
    results, summary = score_batch(comments, backend=stub, max_concurrency=4)
    assert [r.comment_id for r in results] == [c.id for c in comments]
    assert summary.ok == 7 and summary.total == 7
    assert summary.label_histogram[Aspect.ACTIONABILITY] == {"4": 7}


def test_score_batch_turns_backend_failures_into_failed_items():
    stub = StubBackend()  # no fixtures, no default: every call raises
    stub.register(build_multi_aspect_prompt(_comment(0)).rendered_text,
                  _full_response())
    results, summary = score_batch([_comment(0), _comment(1)], backend=stub)
    assert summary.ok == 1 and summary.failed == 1
    assert results[0].parse_status is ParseStatus.OK
    assert results[1].parse_status is ParseStatus.FAILED
    assert results[1].raw_output.startswith("backend error:")


def test_score_batch_aborts_on_auth_errors():
    class RejectingBackend:
        def complete(self, prompt: str) -> str:
            raise AuthError("token expired")

    with pytest.raises(AuthError):
        score_batch([_comment(0), _comment(1)], backend=RejectingBackend())


def test_score_batch_rejects_empty_input():
    with pytest.raises(EmptyInput):
        score_batch([], backend=StubBackend(default="{}"))


# --- serialization -------------------------------------------------------------------


def test_scored_roundtrip_through_jsonl(tmp_path):
    stub = StubBackend(default=_full_response(verifiability="X"))
    scored = score_comment(_comment(), backend=stub)
    path = tmp_path / "scored.jsonl"
    assert write_scored(path, [scored]) == 1
    (loaded,) = load_scored(path)
    assert loaded.comment_id == scored.comment_id
    assert loaded.parse_status is scored.parse_status
    assert loaded.missing_keys == scored.missing_keys
    assert {a: s.label.as_str() for a, s in loaded.aspects.items()} == {
        a: s.label.as_str() for a, s in scored.aspects.items()
    }


def test_scored_from_dict_defaults():
    scored = scored_from_dict({"comment_id": "c1"})
    assert scored.parse_status is ParseStatus.OK
    assert scored.aspects == {}
    obj = scored_to_dict(ScoredComment("c2", {}, ParseStatus.FAILED,
                                       ("helpfulness_label",), "raw"))
    assert obj == {
        "comment_id": "c2", "parse_status": "failed",
        "missing_keys": ["helpfulness_label"], "aspects": {}, "raw_output": "raw",
    }
