"""Section extraction and the eight-stage comment segmentation pipeline."""

import json

import pytest

import oracles
from peergauge.model import ParseError
from peergauge.segmenter import (
    DelimiterPattern,
    InsufficientData,
    LengthBounds,
    SegmenterConfig,
    UnknownVenue,
    clean_text,
    compute_length_bounds,
    extract_review_sections,
    load_reviews,
    load_segmenter_config,
    review_from_dict,
    segment_corpus,
    segment_review,
    survivor_word_counts,
)

LONG_A = ("- The evaluation covers a single dataset even though the method "
          "is motivated by domain generality across many corpora.")
LONG_B = ("- The runtime comparison excludes preprocessing, which for this "
          "method is the dominant cost in every realistic deployment.")
LONG_C = ("Q1: Why does table three use a different tokenizer than the rest "
          "of the experiments in this paper?")


# --- section extraction -----------------------------------------------------


def test_structured_review_passes_target_fields_in_order():
    sections = {
        "summary": "Nice paper.",
        "weaknesses": "- no baselines",
        "strengths": "clear",
        "questions": "- why?",
        "rating": "6",
    }
    assert extract_review_sections(sections, "neurips") == "- no baselines\n\n- why?"


def test_structured_field_names_are_normalized():
    sections = {"Summary Of Weaknesses": "- thin eval", "Paper Summary": "x"}
    assert extract_review_sections(sections, "arr") == "- thin eval"


def test_free_text_keeps_only_target_sections():
    text = (
        "Summary:\nA study of things.\n\n"
        "Strengths:\n- well written\n\n"
        f"Weaknesses:\n{LONG_A}\n\n"
        f"Questions:\n{LONG_C}\n"
    )
    assert extract_review_sections(text, "iclr") == f"{LONG_A}\n\n{LONG_C}"


def test_inline_heading_content_is_kept():
    text = "Weaknesses: the ablation is missing.\nRating: 5"
    assert extract_review_sections(text, "iclr") == "the ablation is missing."


def test_venue_string_with_year_hits_the_profile():
    assert extract_review_sections("Weaknesses:\n- thin", "ICLR 2024") == "- thin"


def test_named_venue_without_recognizable_sections_yields_empty():
    assert extract_review_sections("I liked this paper a lot.", "acl") == ""


def test_unknown_venue_without_headings_raises():
    with pytest.raises(UnknownVenue):
        extract_review_sections("Splendid work.", "journal of vibes")


def test_unknown_venue_with_known_headings_still_extracts():
    text = "Weaknesses:\n- no error analysis anywhere"
    assert extract_review_sections(text, "journal of vibes") == "- no error analysis anywhere"


def test_bare_paste_without_venue_passes_through_whole():
    text = "- point one is unsupported\n- point two has no citation"
    assert extract_review_sections(text, None) == text
    assert extract_review_sections(text, "") == text


# --- cleaning ----------------------------------------------------------------


def test_clean_text_normalizes_whitespace():
    raw = "a  b\t c\r\nd   \n\n\n\ne f\n"
    assert clean_text(raw) == "a b c\nd\n\ne f"


# --- length bounds ------------------------------------------------------------


def test_compute_length_bounds_matches_population_oracle():
    counts = [12, 40, 18, 90, 33, 27, 55, 21]
    mean, std = oracles.population_stats(counts)
    bounds = compute_length_bounds(counts)
    assert bounds.mean == round(mean, 2)
    assert bounds.std == round(std, 2)
    assert bounds.min_words == round(mean - std, 2)
    assert bounds.max_words == round(mean + std, 2)


def test_compute_length_bounds_needs_two_counts():
    with pytest.raises(InsufficientData):
        compute_length_bounds([17])


def test_length_bounds_are_inclusive():
    bounds = LengthBounds(mean=20.0, std=10.0, min_words=10.0, max_words=30.0)
    assert bounds.contains(10) and bounds.contains(30)
    assert not bounds.contains(9) and not bounds.contains(31)


# --- splitting and merging -----------------------------------------------------


@pytest.mark.parametrize("marker", ["- ", "* ", "+ ", "• ", "(W1) ", "W1: ",
                                    "Q1: ", "Q2. ", "(1) ", "1. ", "2) "])
def test_each_bullet_marker_opens_a_fragment(marker):
    body = "the spoon is too big to hold with one hand during the demo session"
    text = f"{marker}{body}\n{LONG_A}"
    comments, _ = segment_review(text)
    assert len(comments) == 2
    assert comments[0].text == f"{marker}{body}".strip()


def test_continuation_lines_and_blank_lines_extend_a_fragment():
    text = f"{LONG_A}\nwrapped tail of the same point here\n\nstill the same point\n{LONG_B}"
    comments, report = segment_review(text)
    assert [c.text for c in comments] == [
        f"{LONG_A}\nwrapped tail of the same point here\n\nstill the same point",
        LONG_B,
    ]
    assert report.input_fragments == 2


def test_fragments_shorter_than_merge_threshold_join_their_successor():
    text = f"- Too terse.\n{LONG_A}"
    comments, report = segment_review(text)
    assert [c.text for c in comments] == [f"- Too terse.\n{LONG_A}"]
    assert report.stages["merged"] == 1


def test_a_trailing_short_fragment_merges_backward():
    text = f"{LONG_A}\n- Fix it."
    comments, report = segment_review(text)
    assert [c.text for c in comments] == [f"{LONG_A}\n- Fix it."]
    assert report.stages["merged"] == 1


def test_comment_ids_and_positions_are_sequential():
    comments, _ = segment_review(f"{LONG_A}\n{LONG_B}", review_id="paper7",
                                 venue="acl", year=2023)
    assert [c.id for c in comments] == ["paper7:c0", "paper7:c1"]
    assert [c.position for c in comments] == [0, 1]
    assert {c.venue for c in comments} == {"acl"}


# --- filters -------------------------------------------------------------------


def test_typo_only_fragments_are_dropped():
    text = f"- Typos: line 12, line 98, and figure 3.\n{LONG_A}"
    comments, report = segment_review(text)
    assert [c.text for c in comments] == [LONG_A]
    assert report.stages["typo_only"] == 1


def test_substantive_comment_mentioning_typos_survives():
    text = ("- Beyond the typos, the proof of lemma two silently assumes "
            "convexity that the setting does not provide.")
    comments, report = segment_review(text)
    assert len(comments) == 1
    assert report.stages["typo_only"] == 0


def test_non_bullet_fragments_are_dropped():
    text = (f"The review starts with some framing prose about the area.\n"
            f"{LONG_A}\nW: the keyword style splits but does not count as a bullet "
            f"for keeping purposes at all")
    comments, report = segment_review(text)
    assert [c.text for c in comments] == [LONG_A]
    assert report.stages["non_bullet"] == 2
    assert report.input_fragments == 3


def test_post_rebuttal_fragments_are_dropped():
    text = (f"{LONG_A}\n- After the rebuttal period my concerns about the "
            f"evaluation still stand unresolved.")
    comments, report = segment_review(text)
    assert [c.text for c in comments] == [LONG_A]
    assert report.stages["post_rebuttal"] == 1


def test_length_bounds_filter_only_runs_with_bounds():
    short = "- Nine words that should be dropped by another stage."
    assert len(short.split()) == 10
    bounds = LengthBounds(mean=20, std=2, min_words=18, max_words=22)
    with_bounds, report = segment_review(f"{short}\n{LONG_A}", bounds=bounds)
    assert with_bounds == [] or all(18 <= c.word_count <= 22 for c in with_bounds)
    assert report.stages["outside_length_bounds"] >= 1
    # without bounds the same short fragment passes the length stage and
    # survives the final minimum as well
    without, report = segment_review(short)
    assert len(without) == 1
    assert report.stages["outside_length_bounds"] == 0


def test_final_minimum_word_filter_drops_sub_ten_word_comments():
    comments, report = segment_review("- way too short to keep")
    assert comments == []
    assert report.stages["below_min_words"] == 1


def test_drop_report_accounts_for_every_fragment():
    text = (
        "Intro prose that is not a bullet point of any kind.\n"
        f"{LONG_A}\n"
        "- Typos: line 3.\n"
        f"{LONG_B}\n"
        "- tiny\n"
        f"{LONG_C}\n"
        "- This one is post rebuttal chatter that we remove from mining runs.\n"
        "- too short to pass\n"
    )
    comments, report = segment_review(text)
    stage_total = sum(report.stages.values())
    assert report.input_fragments - report.output_comments == stage_total
    assert report.output_comments == len(comments)


# --- config --------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        SegmenterConfig(delimiters=())
    with pytest.raises(ValueError):
        SegmenterConfig(min_merge_words=10, final_min_words=10)


def test_load_segmenter_config_roundtrip(tmp_path):
    path = tmp_path / "segmenter.json"
    path.write_text(json.dumps({
        "min_merge_words": 3,
        "final_min_words": 8,
        "typo_keywords": ["typo"],
        "length_bounds": {"mean": 30, "std": 12, "min_words": 18, "max_words": 42},
        "delimiters": [{"name": "dash", "regex": "- ", "bullet": True}],
    }), encoding="utf-8")
    config = load_segmenter_config(path)
    assert config.min_merge_words == 3 and config.final_min_words == 8
    assert config.typo_keywords == ("typo",)
    assert config.length_bounds.max_words == 42.0
    assert config.delimiters == (DelimiterPattern("dash", "- ", True),)


def test_load_segmenter_config_rejects_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{nope", encoding="utf-8")
    with pytest.raises(ParseError):
        load_segmenter_config(path)


# --- corpus segmentation ----------------------------------------------------


def test_review_from_dict_needs_text_or_sections():
    with pytest.raises(ParseError):
        review_from_dict({"review_id": "r1"})
    with pytest.raises(ParseError):
        review_from_dict({"review_id": "r1", "sections": ["not", "a", "dict"]})
    review = review_from_dict({"review_id": "r1", "text": "- fine"})
    assert review.venue == "" and review.year == 0


def test_load_reviews_rejects_duplicate_ids(tmp_path):
    path = tmp_path / "reviews.jsonl"
    row = {"review_id": "r1", "text": "- a point"}
    path.write_text(json.dumps(row) + "\n" + json.dumps(row) + "\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_reviews(path)


def test_segment_corpus_derives_bounds_from_survivor_population(data_dir):
    reviews = load_reviews(data_dir / "segmentation_reviews.jsonl")
    result = segment_corpus(reviews)

    counts = []
    for review in reviews:
        source = review.sections if review.sections is not None else review.text
        counts.extend(survivor_word_counts(
            extract_review_sections(source, review.venue)))
    mean, std = oracles.population_stats(counts)
    assert result.bounds.mean == round(mean, 2)
    assert result.bounds.std == round(std, 2)

    report = result.drop_report.to_dict()
    assert report["input_fragments"] - report["output_comments"] == sum(
        report["stages"].values())


def test_segment_corpus_matches_frozen_audit(data_dir):
    audit = json.loads((data_dir / "segmentation_audit.json").read_text("utf-8"))
    reviews = load_reviews(data_dir / "segmentation_reviews.jsonl")
    result = segment_corpus(reviews)
    assert len(result.comments) == audit["n_comments"]
    assert result.drop_report.to_dict()["stages"] == audit["drop_report"]["stages"]
    assert result.bounds.min_words == audit["bounds"]["min_words"]
    assert result.bounds.max_words == audit["bounds"]["max_words"]


def test_segment_corpus_fixed_bounds_skip_the_population_stats():
    config = SegmenterConfig(length_bounds=LengthBounds(20, 5, 15.0, 25.0))
    reviews = [review_from_dict({"review_id": "r1", "text": LONG_A})]
    result = segment_corpus(reviews, config)
    assert result.bounds == config.length_bounds
    assert [c.word_count for c in result.comments] == [19]
