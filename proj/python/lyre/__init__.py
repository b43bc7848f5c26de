"""Lyrics-conditioned melody generation with recommended attribute candidates."""

import json

from . import _lyre
from ._lyre import (
    ContractError,
    CorpusError,
    FormatError,
    LookupError,
    LyreError,
    MidiError,
    Model,
    TokenizationError,
    default_corpus_path,
    midi_events,
    syllabify,
    tokenize,
    top_k,
    train,
)

__all__ = [
    "ContractError",
    "CorpusError",
    "FormatError",
    "LookupError",
    "LyreError",
    "MidiError",
    "Model",
    "TokenizationError",
    "default_corpus_path",
    "evaluate",
    "generate",
    "load_model",
    "midi_events",
    "midi_to_score",
    "recompose",
    "score_to_midi",
    "syllabify",
    "tokenize",
    "top_k",
    "train",
]


def load_model(path):
    return Model.load(str(path))


def generate(model, lyrics, seed=0, k=5):
    """Greedy melody with per-step candidates, as a dict."""
    return json.loads(model.generate_json(lyrics, seed, k))


def recompose(model, lyrics, seed, k, overrides):
    """Generation followed by (step, attribute, value) overrides."""
    return json.loads(model.recompose_json(lyrics, seed, k, [tuple(o) for o in overrides]))


def score_to_midi(score):
    return _lyre.score_to_midi(json.dumps(score))


def midi_to_score(data):
    return json.loads(_lyre.midi_to_score(data))


def evaluate(checkpoint, corpus=None, seed=7):
    return _lyre.evaluate(str(checkpoint), str(corpus or default_corpus_path()), seed)
