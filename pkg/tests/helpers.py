"""Shared fixtures: a synthetic news world, a brute-force candidate
enumerator, and random instance generators the oracle tests run against."""

from __future__ import annotations

import itertools
import random

from entfix.entities import EntityLabel, EntityMention, Gazetteer, RuleRecognizer
from entfix.records import Example

FIRST = ["Alice", "Brendan", "Carmen", "Dmitri", "Elena", "Farid", "Greta", "Hugo", "Ines", "Jonas"]
LAST = ["Harper", "Okafor", "Lindqvist", "Moreau", "Takagi", "Petrov", "Alvarez", "Nowak", "Keller", "Osei"]
FIRST_OUT = ["Marcus", "Nadia", "Olof", "Priya", "Quentin", "Rosa", "Stefan", "Talia"]
LAST_OUT = ["Vance", "Woodson", "Xiang", "Ybarra", "Zielinski", "Abbasi", "Brook", "Cervantes"]

CITIES = ["Arlen", "Bexford", "Cardale", "Drumlin", "Eastmoor", "Farrowgate", "Glenbrook", "Halverton"]
CITIES_OUT = ["Ironvale", "Jutland Park", "Kessler Bay", "Lornmouth", "Marrowfield"]

ORGS = ["Calder Group", "Dunmore Holdings", "Eastgate Partners", "Fenwick Capital",
        "Garland Systems", "Hollis Energy", "Ibex Logistics", "Juniper Media"]
ORGS_OUT = ["Kestrel Dynamics", "Lumen Industrial", "Mercer Rail", "Northgate Chemical", "Oakline Foods"]

MONTHS = ["January", "February", "April", "June", "July", "August", "September", "October", "November", "December"]


def _person_bank(rng: random.Random, firsts, lasts, n: int) -> list[str]:
    names = set()
    while len(names) < n:
        names.add(f"{rng.choice(firsts)} {rng.choice(lasts)}")
    return sorted(names)


class PlantedWorld:
    """Synthetic three-sentence news items with known entities.

    Every document leads with the facts its summary restates, then adds
    same-type distractors in different contexts. Gazetteers cover both
    the in-world banks and the out-of-world banks used for planting, so
    planted mentions are recognized but never grounded: planted dates use
    years outside the in-world range, planted money uses magnitudes no
    document contains, and planted names share no tokens with in-world
    names.
    """

    PLANTABLE = ("PERSON", "MONEY", "ORG", "GPE", "DATE")

    def __init__(self, seed: int = 1):
        rng = random.Random(f"world:{seed}")
        self.persons_in = _person_bank(rng, FIRST, LAST, 40)
        self.persons_out = _person_bank(rng, FIRST_OUT, LAST_OUT, 20)
        self.gazetteers = [
            Gazetteer(EntityLabel.PERSON, self.persons_in + self.persons_out),
            Gazetteer(EntityLabel.GPE, CITIES + CITIES_OUT),
            Gazetteer(EntityLabel.ORG, ORGS + ORGS_OUT),
        ]
        self.recognizer = RuleRecognizer(self.gazetteers)

    def make_examples(self, split: str, n: int) -> tuple[list[Example], list[dict]]:
        """Build n clean examples plus a plant plan for each.

        The plan records the label that was swapped, the gold surface,
        the out-of-world replacement, and the resulting planted summary.
        """
        examples = []
        plants = []
        for i in range(n):
            r = random.Random(f"ex:{split}:{i}")
            p1, p2, p3 = r.sample(self.persons_in, 3)
            c1, c2 = r.sample(CITIES, 2)
            o1, o2 = r.sample(ORGS, 2)
            m1 = f"${r.randint(2, 9)}m"
            m2 = f"${r.randint(2, 9)}m"
            while m2 == m1:
                m2 = f"${r.randint(2, 9)}m"
            d1 = f"{r.randint(2, 28)} {r.choice(MONTHS)} {r.randint(2010, 2019)}"
            d2 = f"{r.randint(2, 28)} {r.choice(MONTHS)} {r.randint(2010, 2019)}"
            document = (
                f"{p1} announced a {m1} deal with {o1} in {c1} on {d1}. "
                f"Rival bidder {p2} had offered {m2} for the firm months earlier. "
                f"Analysts in {c2} said {p3} of {o2} would respond soon after {d2}."
            )
            summary = f"{p1} announced a {m1} deal with {o1} in {c1} on {d1}."
            gold = {"PERSON": p1, "MONEY": m1, "ORG": o1, "GPE": c1, "DATE": d1}
            label = r.choice(self.PLANTABLE)
            replacement = {
                "PERSON": lambda: r.choice(self.persons_out),
                "MONEY": lambda: f"${r.choice([31, 37, 41, 43, 47])}m",
                "ORG": lambda: r.choice(ORGS_OUT),
                "GPE": lambda: r.choice(CITIES_OUT),
                "DATE": lambda: f"{r.randint(2, 28)} {r.choice(MONTHS)} {r.randint(1980, 1999)}",
            }[label]()
            planted_summary = summary.replace(gold[label], replacement, 1)
            assert planted_summary != summary
            examples.append(Example(id=f"{split}-{i}", document=document, summary=summary, reference=summary))
            plants.append({
                "label": label,
                "gold": gold[label],
                "replacement": replacement,
                "summary": planted_summary,
            })
        return examples, plants

    def planted_examples(self, examples, plants) -> list[Example]:
        return [
            Example(id=ex.id, document=ex.document, summary=plant["summary"], reference=ex.reference)
            for ex, plant in zip(examples, plants)
        ]


def rebuild_by_segments(summary: str, assignment) -> str:
    """Reference splice: cut the summary around each replaced span and
    join the pieces with the replacement surfaces."""
    ordered = sorted(assignment, key=lambda pair: pair[0].start)
    pieces = []
    cursor = 0
    for replaced, replacement in ordered:
        pieces.append(summary[cursor:replaced.start])
        pieces.append(replacement.surface)
        cursor = replaced.end
    pieces.append(summary[cursor:])
    return "".join(pieces)


def brute_force_candidate_texts(summary, source_mentions, hallucinated) -> set[str]:
    """Independent enumerator of every legal candidate text.

    Pools keep the first source occurrence per normalized form and drop
    members matching the flagged mention's normalized form. Emits the
    original, every single substitution, and the full cross product when
    two or more mentions are flagged and every pool is non-empty.
    """
    pools = []
    for flagged in hallucinated:
        seen = set()
        pool = []
        for mention in source_mentions:
            if mention.label != flagged.label:
                continue
            if mention.normalized == flagged.normalized or mention.normalized in seen:
                continue
            seen.add(mention.normalized)
            pool.append(mention)
        pools.append(pool)

    texts = {summary}
    for flagged, pool in zip(hallucinated, pools):
        for replacement in pool:
            texts.add(rebuild_by_segments(summary, [(flagged, replacement)]))
    if len(hallucinated) >= 2 and all(pools):
        for combo in itertools.product(*pools):
            texts.add(rebuild_by_segments(summary, list(zip(hallucinated, combo))))
    return texts


_ORACLE_LABELS = (
    EntityLabel.PERSON,
    EntityLabel.ORG,
    EntityLabel.GPE,
    EntityLabel.DATE,
    EntityLabel.MONEY,
)


def _build_text_with_mentions(rng: random.Random, named, fillers) -> tuple[str, list[EntityMention]]:
    """Lay out filler words and entity surfaces, tracking spans directly."""
    parts: list[str] = []
    spans: list[tuple[int, int, EntityLabel]] = []
    length = 0

    def push(token: str) -> tuple[int, int]:
        nonlocal length
        if parts:
            parts.append(" ")
            length += 1
        parts.append(token)
        start = length
        length += len(token)
        return start, length

    for surface, label in named:
        for _ in range(rng.randint(1, 3)):
            push(rng.choice(fillers))
        start, end = push(surface)
        spans.append((start, end, label))
    for _ in range(rng.randint(1, 2)):
        push(rng.choice(fillers))
    text = "".join(parts)
    mentions = [EntityMention.at(text, s, e, label) for s, e, label in spans]
    return text, mentions


def random_contrast_instance(rng: random.Random):
    """One synthetic oracle case: mentions are constructed directly, so
    no recognizer is involved. At most 3 flagged mentions, pools up to 4.

    Source surfaces reuse a small stem set so pools must deduplicate, and
    summary mentions sometimes borrow a source stem so the pool exclusion
    branch gets exercised too.
    """
    fillers = ["the", "board", "said", "after", "deal", "report", "was", "filed", "under", "review"]

    n_source = rng.randint(0, 8)
    source_named = [
        (f"src{rng.randint(0, 3)}", rng.choice(_ORACLE_LABELS)) for _ in range(n_source)
    ]
    source, source_mentions = _build_text_with_mentions(rng, source_named, fillers)

    n_summary = rng.randint(1, 4)
    n_flagged = rng.randint(1, min(3, n_summary))
    summary_named = []
    for i in range(n_summary):
        surface = f"src{rng.randint(0, 3)}" if rng.random() < 0.25 else f"hal{i}"
        summary_named.append((surface, rng.choice(_ORACLE_LABELS)))
    summary, summary_mentions = _build_text_with_mentions(rng, summary_named, fillers)
    hallucinated = summary_mentions[:n_flagged]
    return source, source_mentions, summary, summary_mentions, hallucinated
