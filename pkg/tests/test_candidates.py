import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_force_candidate_texts, random_contrast_instance

from entfix.candidates import (
    CandidateSummary,
    Substitution,
    TrainingPair,
    filter_clean,
    find_hallucinated,
    generate_candidates,
    make_training_pairs,
    substitution_spans,
)
from entfix.entities import EntityLabel, EntityMention, Gazetteer, RuleRecognizer
from entfix.errors import MissingReferenceError
from entfix.records import Example


def mention(text, surface, label, occurrence=0):
    start = -1
    for _ in range(occurrence + 1):
        start = text.index(surface, start + 1)
    return EntityMention.at(text, start, start + len(surface), label)


class TestFindHallucinated:
    def test_date_not_in_source_is_flagged(self):
        source = "He was re-elected on 21 June 2011, with effect from 1 January 2012."
        source_mentions = [
            mention(source, "21 June 2011", EntityLabel.DATE),
            mention(source, "1 January 2012", EntityLabel.DATE),
        ]
        summary = "He was elected for a second term in 2007."
        summary_mentions = [mention(summary, "2007", EntityLabel.DATE)]
        flagged = find_hallucinated(source, source_mentions, summary_mentions)
        assert [m.surface for m in flagged] == ["2007"]

    def test_exact_surface_match_is_grounded(self):
        source = "Tranmere Rovers signed Mooney on loan."
        summary = "Mooney joined on loan."
        flagged = find_hallucinated(
            source, [], [mention(summary, "Mooney", EntityLabel.PERSON)]
        )
        assert flagged == []

    def test_person_token_subset_is_grounded(self):
        source = "John Smith arrived."
        summary = "Smith arrived."
        flagged = find_hallucinated(
            source,
            [mention(source, "John Smith", EntityLabel.PERSON)],
            [mention(summary, "Smith", EntityLabel.PERSON)],
        )
        assert flagged == []

    def test_person_token_superset_is_grounded(self):
        source = "Mr. Ban spoke to reporters."
        summary = "Ban Ki-moon spoke."
        summary_m = EntityMention(
            start=0, end=11, surface="Ban Ki-moon",
            label=EntityLabel.PERSON, normalized="ban ki-moon",
        )
        flagged = find_hallucinated(
            source, [mention(source, "Ban", EntityLabel.PERSON)], [summary_m]
        )
        assert flagged == []

    def test_numeric_value_subset_within_single_mention(self):
        source = "The ceremony was held on 21 June 2011."
        summary = "It happened in June 2011."
        flagged = find_hallucinated(
            source,
            [mention(source, "21 June 2011", EntityLabel.DATE)],
            [mention(summary, "June 2011", EntityLabel.DATE)],
        )
        assert flagged == []

    def test_numeric_values_must_come_from_one_mention(self):
        source = "Sales hit 21 in March and 2011 in April."
        summary = "Sales hit 21 2011."
        flagged = find_hallucinated(
            source,
            [
                mention(source, "21", EntityLabel.CARDINAL),
                mention(source, "2011", EntityLabel.CARDINAL),
            ],
            [mention(summary, "21 2011", EntityLabel.CARDINAL)],
        )
        assert [m.surface for m in flagged] == ["21 2011"]

    def test_money_scale_form_grounded_via_canonicalization(self):
        source = "BP put aside $9.6bn for the spill."
        summary = "BP put aside $9,600,000,000."
        flagged = find_hallucinated(
            source,
            [mention(source, "$9.6bn", EntityLabel.MONEY)],
            [mention(summary, "$9,600,000,000", EntityLabel.MONEY)],
        )
        assert flagged == []

    def test_different_person_is_flagged(self):
        source = "Tranmere Rovers have signed midfielder Mooney on loan."
        summary = "Tranmere Rovers have signed midfielder Alfreton on loan."
        flagged = find_hallucinated(
            source,
            [mention(source, "Mooney", EntityLabel.PERSON)],
            [mention(summary, "Alfreton", EntityLabel.PERSON)],
        )
        assert [m.surface for m in flagged] == ["Alfreton"]

    def test_output_preserves_summary_order(self):
        summary = "Alfreton met Borin in 1907."
        summary_mentions = [
            mention(summary, "Alfreton", EntityLabel.PERSON),
            mention(summary, "Borin", EntityLabel.PERSON),
            mention(summary, "1907", EntityLabel.DATE),
        ]
        flagged = find_hallucinated("nothing relevant here", [], summary_mentions)
        assert flagged == summary_mentions


class TestGenerateCandidates:
    def test_single_pool_single_flag(self):
        source = "Tranmere Rovers have signed midfielder Mooney on loan from Wolves."
        summary = "Tranmere Rovers have signed midfielder Alfreton on loan."
        source_mentions = [mention(source, "Mooney", EntityLabel.PERSON)]
        flagged = [mention(summary, "Alfreton", EntityLabel.PERSON)]
        out = generate_candidates(summary, source_mentions, flagged, max_candidates=64)
        assert [c.text for c in out] == [
            summary,
            "Tranmere Rovers have signed midfielder Mooney on loan.",
        ]
        assert out[0].is_original
        assert not out[1].is_original

    def test_no_flags_original_only(self):
        out = generate_candidates("Nothing wrong here.", [], [], max_candidates=8)
        assert [c.text for c in out] == ["Nothing wrong here."]

    def test_counts_for_two_flags(self):
        source = "A1 met A2 while B1 visited B2 and B3."
        source_mentions = [
            mention(source, "A1", EntityLabel.PERSON),
            mention(source, "A2", EntityLabel.PERSON),
            mention(source, "B1", EntityLabel.GPE),
            mention(source, "B2", EntityLabel.GPE),
            mention(source, "B3", EntityLabel.GPE),
        ]
        summary = "AX went to BX."
        flagged = [
            mention(summary, "AX", EntityLabel.PERSON),
            mention(summary, "BX", EntityLabel.GPE),
        ]
        out = generate_candidates(summary, source_mentions, flagged, max_candidates=64)
        # 1 original + (2 + 3) singles + 2*3 full assignments
        assert len(out) == 12
        assert len({c.text for c in out}) == 12

    def test_cross_product_skipped_when_any_pool_empty(self):
        source = "A1 met A2."
        source_mentions = [
            mention(source, "A1", EntityLabel.PERSON),
            mention(source, "A2", EntityLabel.PERSON),
        ]
        summary = "AX went to BX."
        flagged = [
            mention(summary, "AX", EntityLabel.PERSON),
            mention(summary, "BX", EntityLabel.GPE),
        ]
        out = generate_candidates(summary, source_mentions, flagged, max_candidates=64)
        assert len(out) == 3  # original + two singles for AX

    def test_empty_pools_original_only(self):
        summary = "AX went to BX."
        flagged = [mention(summary, "AX", EntityLabel.PERSON)]
        out = generate_candidates(summary, [], flagged, max_candidates=64)
        assert [c.text for c in out] == [summary]

    def test_pool_dedup_and_exclusion(self):
        source = "The UN met the UN again, and NATO watched."
        source_mentions = [
            mention(source, "UN", EntityLabel.ORG, 0),
            mention(source, "UN", EntityLabel.ORG, 1),
            mention(source, "NATO", EntityLabel.ORG),
        ]
        summary = "UNESCO praised it."
        flagged = [mention(summary, "UNESCO", EntityLabel.ORG)]
        out = generate_candidates(summary, source_mentions, flagged, max_candidates=64)
        assert [c.text for c in out] == [
            "UNESCO praised it.",
            "UN praised it.",
            "NATO praised it.",
        ]

    def test_pool_excludes_same_normalized_form(self):
        source = "The UN met NATO."
        source_mentions = [
            mention(source, "UN", EntityLabel.ORG),
            mention(source, "NATO", EntityLabel.ORG),
        ]
        summary = "The UN agreed."
        flagged = [mention(summary, "UN", EntityLabel.ORG)]
        out = generate_candidates(summary, source_mentions, flagged, max_candidates=64)
        assert [c.text for c in out] == ["The UN agreed.", "The NATO agreed."]

    def test_truncation(self):
        source = "P1 P2 P3 P4 P5 spoke."
        source_mentions = [mention(source, f"P{i}", EntityLabel.PERSON) for i in range(1, 6)]
        summary = "PX spoke."
        flagged = [mention(summary, "PX", EntityLabel.PERSON)]
        out = generate_candidates(summary, source_mentions, flagged, max_candidates=3)
        assert len(out) == 3
        assert out[0].is_original
        assert [c.text for c in out[1:]] == ["P1 spoke.", "P2 spoke."]

    def test_max_candidates_validated(self):
        with pytest.raises(ValueError):
            generate_candidates("x y.", [], [], max_candidates=0)

    def test_multi_span_splice_locality(self):
        source = "Carol visited Berlin."
        source_mentions = [
            mention(source, "Carol", EntityLabel.PERSON),
            mention(source, "Berlin", EntityLabel.GPE),
        ]
        summary = "Al toured Paris happily."
        flagged = [
            mention(summary, "Al", EntityLabel.PERSON),
            mention(summary, "Paris", EntityLabel.GPE),
        ]
        out = generate_candidates(summary, source_mentions, flagged, max_candidates=64)
        full = [c for c in out if len(c.substitutions) == 2]
        assert [c.text for c in full] == ["Carol toured Berlin happily."]
        spans = substitution_spans(full[0].substitutions)
        assert [full[0].text[a:b] for a, b in spans] == ["Carol", "Berlin"]

    def test_substitution_provenance_round_trip(self):
        source = "Carol visited Berlin."
        summary = "Al toured Paris."
        candidate = CandidateSummary(
            text="Carol toured Paris.",
            substitutions=(
                Substitution(
                    replaced=mention(summary, "Al", EntityLabel.PERSON),
                    replacement=mention(source, "Carol", EntityLabel.PERSON),
                ),
            ),
        )
        assert CandidateSummary.from_record(candidate.to_record()) == candidate

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_oracle_equivalence(self, seed):
        rng = random.Random(seed)
        source, source_mentions, summary, _, hallucinated = random_contrast_instance(rng)
        out = generate_candidates(summary, source_mentions, hallucinated, max_candidates=100_000)
        assert {c.text for c in out} == brute_force_candidate_texts(
            summary, source_mentions, hallucinated
        )

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_locality_and_grounding_properties(self, seed):
        rng = random.Random(seed)
        source, source_mentions, summary, _, hallucinated = random_contrast_instance(rng)
        out = generate_candidates(summary, source_mentions, hallucinated, max_candidates=100_000)
        for candidate in out:
            residual_candidate = candidate.text
            residual_summary = summary
            for sub, span in zip(
                reversed(candidate.substitutions),
                reversed(substitution_spans(candidate.substitutions)),
            ):
                residual_candidate = residual_candidate[:span[0]] + residual_candidate[span[1]:]
                residual_summary = (
                    residual_summary[:sub.replaced.start] + residual_summary[sub.replaced.end:]
                )
            assert residual_candidate == residual_summary
            for sub in candidate.substitutions:
                assert sub.replacement.surface in source
                assert sub.replaced.label == sub.replacement.label

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_pipeline_closure(self, seed):
        # after substituting every flagged span, the replaced spans are grounded
        rng = random.Random(seed)
        source, source_mentions, summary, _, hallucinated = random_contrast_instance(rng)
        out = generate_candidates(summary, source_mentions, hallucinated, max_candidates=100_000)
        full = [c for c in out if len(c.substitutions) == len(hallucinated)]
        for candidate in full:
            spans = substitution_spans(candidate.substitutions)
            new_mentions = [
                EntityMention.at(candidate.text, a, b, sub.replaced.label)
                for sub, (a, b) in zip(candidate.substitutions, spans)
            ]
            flagged = find_hallucinated(source, source_mentions, new_mentions)
            assert flagged == []


def clean_example(i=0):
    return Example(
        id=f"clean-{i}",
        document="Mooney joined Tranmere Rovers on 3 June 2015 for $2m.",
        summary="placeholder",
        reference="Mooney joined Tranmere Rovers on 3 June 2015.",
    )


class TestFilterClean:
    gazetteers = [
        Gazetteer(EntityLabel.PERSON, ["Mooney", "Alfreton"]),
        Gazetteer(EntityLabel.ORG, ["Tranmere Rovers"]),
    ]

    def test_grounded_reference_kept(self):
        recognizer = RuleRecognizer(self.gazetteers)
        kept = filter_clean([clean_example()], recognizer)
        assert len(kept) == 1

    def test_ungrounded_reference_dropped(self):
        recognizer = RuleRecognizer(self.gazetteers)
        example = Example(
            id="dirty",
            document="Mooney joined Tranmere Rovers on 3 June 2015.",
            summary="s",
            reference="Mooney joined Tranmere Rovers in 2007.",
        )
        assert filter_clean([example], recognizer) == []

    def test_missing_reference_raises(self):
        recognizer = RuleRecognizer(self.gazetteers)
        example = Example(id="no-ref", document="d", summary="s")
        with pytest.raises(MissingReferenceError):
            filter_clean([example], recognizer)

    def test_hand_labeled_corpus(self, world):
        examples, plants = world.make_examples("filter", 10)
        dirty = [
            Example(id=f"dirty-{i}", document=ex.document, summary=ex.summary,
                    reference=plant["summary"])
            for i, (ex, plant) in enumerate(zip(examples[:4], plants[:4]))
        ]
        kept = filter_clean(examples + dirty, world.recognizer)
        assert [e.id for e in kept] == [e.id for e in examples]


class TestMakeTrainingPairs:
    def test_pool_enumeration(self):
        recognizer = RuleRecognizer([
            Gazetteer(EntityLabel.PERSON, ["Alice Harper", "Brendan Okafor", "Carmen Moreau"]),
        ])
        example = Example(
            id="pools",
            document="Alice Harper met Brendan Okafor and Carmen Moreau in 2014.",
            summary="s",
            reference="Alice Harper spoke in 2014.",
        )
        pairs = make_training_pairs([example], recognizer, negatives_per_example=100, seed=0)
        # the reference person has two same-label alternatives; its date has
        # none, since the only source date normalizes identically
        assert {p.corrupted_span.replacement for p in pairs} == {"Brendan Okafor", "Carmen Moreau"}
        for pair in pairs:
            assert pair.corrupted_span.replaced == "Alice Harper"
            assert pair.positive == example.reference
            assert pair.source == example.document

    def test_zero_mentions_zero_pairs(self):
        recognizer = RuleRecognizer()
        example = Example(id="plain", document="Nothing here.", summary="s", reference="Still nothing.")
        assert make_training_pairs([example], recognizer, 8, seed=0) == []

    def test_negative_is_single_occurrence_rewrite(self, world):
        examples, _ = world.make_examples("diff", 50)
        pairs = make_training_pairs(examples, world.recognizer, negatives_per_example=8, seed=3)
        assert pairs
        for pair in pairs:
            assert pair.negative != pair.positive
            span = pair.corrupted_span
            rebuilds = []
            start = pair.positive.find(span.replaced)
            while start != -1:
                rebuilds.append(
                    pair.positive[:start]
                    + span.replacement
                    + pair.positive[start + len(span.replaced):]
                )
                start = pair.positive.find(span.replaced, start + 1)
            assert pair.negative in rebuilds

    def test_truncation_respects_limit(self, world):
        examples, _ = world.make_examples("trunc", 20)
        pairs = make_training_pairs(examples, world.recognizer, negatives_per_example=2, seed=0)
        by_example = {}
        for pair in pairs:
            by_example.setdefault(pair.example_id, []).append(pair)
        assert all(len(group) <= 2 for group in by_example.values())

    def test_seeded_truncation_is_deterministic(self, world):
        examples, _ = world.make_examples("det", 10)
        a = make_training_pairs(examples, world.recognizer, negatives_per_example=3, seed=5)
        b = make_training_pairs(examples, world.recognizer, negatives_per_example=3, seed=5)
        c = make_training_pairs(examples, world.recognizer, negatives_per_example=3, seed=6)
        assert a == b
        assert a != c

    def test_same_label_and_different_normalized(self, world):
        examples, _ = world.make_examples("lbl", 20)
        pairs = make_training_pairs(examples, world.recognizer, negatives_per_example=8, seed=1)
        for pair in pairs:
            span = pair.corrupted_span
            assert span.replacement in pair.source
            assert span.replaced in pair.positive
            assert span.replaced != span.replacement

    def test_record_round_trip(self, world):
        examples, _ = world.make_examples("rt", 3)
        pairs = make_training_pairs(examples, world.recognizer, negatives_per_example=4, seed=2)
        for pair in pairs:
            assert TrainingPair.from_record(pair.to_record()) == pair
