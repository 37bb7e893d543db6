"""
graperun.simworld.vocab
#######################

Closed vocabulary of the simulated world.

Attribute values are unique across keys, so an adjective alone tells which concept it belongs to.
"""

CONCEPT_KEYS = ("color", "texture", "shape", "size", "style", "number", "spatial")

# concepts stored on objects; number is modelled as repeated objects, spatial as relations
ATTRIBUTE_KEYS = ("color", "texture", "shape", "size", "style")

# rendered before the noun, in this order
PREFIX_KEYS = ("size", "shape", "color")

VOCABULARY: dict[str, tuple[str, ...]] = {
    "color": ("red", "green", "blue", "pink", "yellow", "purple", "white", "black", "brown", "khaki", "gray"),
    "texture": ("metallic", "wooden", "fluffy", "leather", "marble", "plastic", "furry"),
    "shape": ("round", "square", "triangular", "oval", "cubic"),
    "size": ("tiny", "small", "large", "huge"),
    "style": ("cartoon", "watercolor", "vintage", "sketch", "cyberpunk"),
}

VALUE_TO_KEY: dict[str, str] = {_value: _key for _key, _values in VOCABULARY.items() for _value in _values}

# singular -> plural
NOUNS: dict[str, str] = {
    "apple": "apples",
    "ball": "balls",
    "bench": "benches",
    "bicycle": "bicycles",
    "bird": "birds",
    "book": "books",
    "bottle": "bottles",
    "bowl": "bowls",
    "box": "boxes",
    "cactus": "cacti",
    "car": "cars",
    "cat": "cats",
    "chair": "chairs",
    "clock": "clocks",
    "corgi": "corgis",
    "cup": "cups",
    "dog": "dogs",
    "duck": "ducks",
    "flower": "flowers",
    "guitar": "guitars",
    "hat": "hats",
    "lamp": "lamps",
    "orange": "oranges",
    "pants": "pants",
    "plate": "plates",
    "shoe": "shoes",
    "sushi": "sushi",
    "table": "tables",
    "tree": "trees",
    "umbrella": "umbrellas",
    "vase": "vases",
}

PLURAL_TO_NOUN: dict[str, str] = {_plural: _noun for _noun, _plural in NOUNS.items()}

# possessive parts, "the corgi's head" refers to the corgi
PARTS = ("head", "back", "nose", "tail", "lap", "top", "side")

NUMBER_WORDS: dict[str, int] = {
    "one": 1,
    "two": 2,
    "three": 3,
    "four": 4,
    "five": 5,
    "six": 6,
    "seven": 7,
    "eight": 8,
}

COUNT_TO_WORD: dict[int, str] = {_count: _word for _word, _count in NUMBER_WORDS.items()}

# canonical predicate -> inverse predicate
INVERSE_PREDICATES: dict[str, str] = {
    "on top of": "under",
    "under": "on top of",
    "next to": "next to",
    "surrounded by": "around",
    "around": "surrounded by",
    "in front of": "behind",
    "behind": "in front of",
    "to the left of": "to the right of",
    "to the right of": "to the left of",
    "above": "below",
    "below": "above",
    "inside": "containing",
    "containing": "inside",
    "near": "near",
}

PREDICATES = tuple(INVERSE_PREDICATES)

PREDICATE_ALIASES: dict[str, str] = {
    "on": "on top of",
    "in": "inside",
    "beside": "next to",
    "beneath": "under",
    "surrounding": "around",
}

# longest phrases first, so "on top of" wins over "on"
PREDICATE_PHRASES: tuple[tuple[tuple[str, ...], str], ...] = tuple(
    sorted(
        [(tuple(_phrase.split()), _canonical) for _phrase, _canonical in PREDICATE_ALIASES.items()]
        + [(tuple(_predicate.split()), _predicate) for _predicate in PREDICATES],
        key=lambda _item: -len(_item[0]),
    )
)

SYMMETRIC_PREDICATES = tuple(_p for _p, _inverse in INVERSE_PREDICATES.items() if _p == _inverse)


def canonical_predicate(predicate: str) -> str:
    """
    Map a predicate or one of its aliases to the canonical predicate.

    :param predicate: Predicate phrase.
    :type predicate: str
    :return: Canonical predicate, or the input unchanged if it is unknown.
    :rtype: str
    """
    predicate = " ".join(predicate.lower().split())
    return PREDICATE_ALIASES.get(predicate, predicate)


def inverse_predicate(predicate: str) -> str:
    """
    Predicate seen from the other object: the inverse of "on top of" is "under".

    :param predicate: Canonical predicate.
    :type predicate: str
    :return: Inverse predicate.
    :rtype: str
    """
    return INVERSE_PREDICATES[canonical_predicate(predicate)]


def article(word: str) -> str:
    return "an" if word[:1] in "aeiou" else "a"


__all__ = [
    "CONCEPT_KEYS",
    "ATTRIBUTE_KEYS",
    "PREFIX_KEYS",
    "VOCABULARY",
    "VALUE_TO_KEY",
    "NOUNS",
    "PLURAL_TO_NOUN",
    "PARTS",
    "NUMBER_WORDS",
    "COUNT_TO_WORD",
    "INVERSE_PREDICATES",
    "PREDICATES",
    "PREDICATE_ALIASES",
    "PREDICATE_PHRASES",
    "SYMMETRIC_PREDICATES",
    "canonical_predicate",
    "inverse_predicate",
    "article",
]
