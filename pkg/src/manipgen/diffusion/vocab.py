"""Closed prompt vocabulary for the template grammar of the sprite world."""

from __future__ import annotations

from ..world.scene import COLOR_PALETTE, OBJECT_SHAPES

NULL_TOKEN = "<null>"

_TEMPLATE_WORDS = [
    "pick",
    "up",
    "and",
    "place",
    "move",
    "push",
    "topple",
    "the",
    "to",
    "left",
    "right",
    "top",
    "bottom",
]


def build_vocabulary() -> list[str]:
    """Token id 0 is the null/pad row used for classifier-free guidance."""
    words = sorted(set(_TEMPLATE_WORDS) | set(COLOR_PALETTE) | set(OBJECT_SHAPES) | {"triangle"})
    return [NULL_TOKEN] + words


def tokenize_prompt(prompt: str, vocab: list[str], length: int) -> list[int]:
    """Whitespace tokenization over the closed vocabulary, padded with nulls."""
    index = {w: i for i, w in enumerate(vocab)}
    ids = []
    for word in prompt.split():
        if word not in index:
            raise ValueError(f"unknown prompt word {word!r}")
        ids.append(index[word])
    if len(ids) > length:
        raise ValueError(f"prompt has {len(ids)} tokens, limit is {length}")
    return ids + [0] * (length - len(ids))
