import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import PlantedWorld

from entfix.entities import EntityLabel, Gazetteer, RuleRecognizer
from entfix.records import Example

UN_DOCUMENT = (
    "He was re-elected for a second term by the UN General Assembly, unopposed "
    "and unanimously, on 21 June 2011, with effect from 1 January 2012. Mr. Ban "
    "describes his priorities as mobilising world leaders to deal with climate "
    "change, economic upheaval, pandemics and increasing pressures involving "
    "food, energy and water."
)
UN_SUMMARY = (
    "The United Nations Secretary-General Ban Ki-moon was elected for a second "
    "term in 2007."
)


@pytest.fixture
def un_example():
    return Example(id="un-ban", document=UN_DOCUMENT, summary=UN_SUMMARY)


@pytest.fixture
def un_gazetteers():
    # deliberately conservative: "United Nations" stays unlisted, so the
    # summary's only flaggable mention is the wrong date
    return [
        Gazetteer(EntityLabel.PERSON, ["Ban Ki-moon", "Ban"]),
        Gazetteer(EntityLabel.ORG, ["UN General Assembly"]),
    ]


@pytest.fixture
def un_recognizer(un_gazetteers):
    return RuleRecognizer(un_gazetteers)


@pytest.fixture(scope="session")
def world():
    return PlantedWorld(seed=1)


@pytest.fixture(scope="session")
def small_world_corpus(world):
    """120 clean training examples plus 40 planted eval examples."""
    train, _ = world.make_examples("unit-train", 120)
    eval_clean, plants = world.make_examples("unit-eval", 40)
    return train, eval_clean, plants
